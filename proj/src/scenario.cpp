#include "crlora/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

namespace crlora {

ScenarioError::ScenarioError(std::size_t line, const std::string& what)
    : ConfigError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line)
{
}

namespace {

const std::vector<std::string> cr_mac_only = {"sub_slots", "slots_per_beacon", "beacon_payload_bytes",
                                              "beacon_listening"};

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& v)
{
    T out{};
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError(key + ": invalid number '" + v + "'");
    return out;
}

double parse_real(const std::string& key, const std::string& v)
{
    std::istringstream is(v);
    is.imbue(std::locale::classic());
    double out = 0.0;
    if (!(is >> out) || !is.eof())
        throw ConfigError(key + ": invalid number '" + v + "'");
    return out;
}

bool parse_flag(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "on" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "off" || v == "no")
        return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

Protocol parse_protocol(const std::string& v)
{
    if (v == "aloha")
        return Protocol::aloha;
    if (v == "cr_mac")
        return Protocol::cr_mac;
    throw ConfigError("protocol: expected aloha or cr_mac, got '" + v + "'");
}

BeaconListening parse_listening(const std::string& v)
{
    if (v == "always")
        return BeaconListening::always;
    if (v == "when_pending")
        return BeaconListening::when_pending;
    throw ConfigError("beacon_listening: expected always or when_pending, got '" + v + "'");
}

using Point = std::map<std::string, std::string>;

SimConfig build_config(const Point& p)
{
    auto get = [&](const std::string& k) -> const std::string* {
        auto it = p.find(k);
        return it == p.end() ? nullptr : &it->second;
    };
    SimConfig c;
    const int sf = get("sf") ? parse_number<int>("sf", *get("sf")) : 7;
    const double bw = get("bw") ? parse_real("bw", *get("bw")) : 125000.0;
    c.params = LoRaParams::preset(sf, bw);
    for (const auto& [k, v] : p) {
        if (k == "protocol")
            c.protocol = parse_protocol(v);
        else if (k == "num_devices")
            c.num_devices = parse_number<int>(k, v);
        else if (k == "frame_payload_bytes")
            c.frame_payload_bytes = parse_number<int>(k, v);
        else if (k == "cr")
            c.params.cr = parse_number<int>(k, v);
        else if (k == "preamble_symbols")
            c.params.preamble_symbols = parse_number<int>(k, v);
        else if (k == "explicit_header")
            c.params.explicit_header = parse_flag(k, v);
        else if (k == "payload_crc")
            c.params.payload_crc = parse_flag(k, v);
        else if (k == "low_dr_optimize")
            c.params.low_dr_optimize = parse_flag(k, v);
        else if (k == "sub_slots")
            c.sub_slots = parse_number<int>(k, v);
        else if (k == "slots_per_beacon")
            c.slots_per_beacon = parse_number<int>(k, v);
        else if (k == "beacon_payload_bytes")
            c.beacon_payload_bytes = parse_number<int>(k, v);
        else if (k == "duty_cycle")
            c.duty_cycle = parse_real(k, v);
        else if (k == "sim_duration")
            c.sim_duration = parse_real(k, v);
        else if (k == "tx_power_w")
            c.tx_power_w = parse_real(k, v);
        else if (k == "rx_power_w")
            c.rx_power_w = parse_real(k, v);
        else if (k == "crc_cap")
            c.crc_cap = parse_number<std::uint64_t>(k, v);
        else if (k == "retransmission")
            c.retransmission = parse_flag(k, v);
        else if (k == "beacon_listening")
            c.beacon_listening = parse_listening(v);
        else if (k == "traffic_jitter")
            c.traffic_jitter = parse_real(k, v);
    }
    return c;
}

void check_value(const std::string& key, const std::string& value)
{
    if (key == "seed")
        parse_number<std::uint64_t>(key, value);
    else if (key == "replications" && parse_number<int>(key, value) < 1)
        throw ConfigError("replications: must be >= 1");
    else
        build_config({{key, value}});
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

const std::vector<std::string>& scenario_keys()
{
    static const std::vector<std::string> keys = {
        "protocol",         "num_devices",     "frame_payload_bytes", "sf",
        "bw",               "cr",              "preamble_symbols",    "explicit_header",
        "payload_crc",      "low_dr_optimize", "sub_slots",           "slots_per_beacon",
        "beacon_payload_bytes", "duty_cycle",  "sim_duration",        "seed",
        "tx_power_w",       "rx_power_w",      "crc_cap",             "retransmission",
        "beacon_listening", "traffic_jitter",  "replications"};
    return keys;
}

const std::string* Scenario::get(const std::string& key) const
{
    for (const auto& [k, v] : settings) {
        if (k == key)
            return &v;
    }
    return nullptr;
}

void Scenario::set(const std::string& key, const std::string& value)
{
    for (auto& [k, v] : settings) {
        if (k == key) {
            v = value;
            return;
        }
    }
    settings.emplace_back(key, value);
}

void Scenario::sweep(const std::string& key, std::vector<std::string> values)
{
    for (auto& s : sweeps) {
        if (s.key == key) {
            s.values = std::move(values);
            return;
        }
    }
    sweeps.push_back({key, std::move(values)});
}

Scenario parse_scenario(std::istream& is)
{
    const auto& keys = scenario_keys();
    auto known = [&](const std::string& k) { return std::find(keys.begin(), keys.end(), k) != keys.end(); };

    Scenario s;
    std::set<std::string> seen;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        const auto line = trim(std::string_view(raw).substr(0, raw.find('#')));
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ScenarioError(lineno, "expected key = value");
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));
        if (!seen.insert(key).second)
            throw ScenarioError(lineno, "duplicate key '" + key + "'");

        try {
            if (key.rfind("sweep.", 0) == 0) {
                const auto target = key.substr(6);
                if (!known(target) || target == "seed" || target == "replications")
                    throw ConfigError("cannot sweep '" + target + "'");
                Sweep sw{target, {}};
                std::string item;
                std::istringstream items(value);
                while (std::getline(items, item, ',')) {
                    item = trim(item);
                    if (item.empty())
                        throw ConfigError(key + ": empty sweep value");
                    check_value(target, item);
                    sw.values.push_back(item);
                }
                if (sw.values.empty())
                    throw ConfigError(key + ": no sweep values");
                s.sweeps.push_back(std::move(sw));
            } else {
                if (!known(key))
                    throw ConfigError("unknown key '" + key + "'");
                if (value.empty())
                    throw ConfigError(key + ": missing value");
                check_value(key, value);
                s.settings.emplace_back(key, value);
            }
        } catch (const ScenarioError&) {
            throw;
        } catch (const ConfigError& e) {
            throw ScenarioError(lineno, e.what());
        }
    }
    return s;
}

Scenario parse_scenario(const std::string& text)
{
    std::istringstream is(text);
    return parse_scenario(is);
}

std::string serialize_scenario(const Scenario& s)
{
    std::ostringstream os;
    for (const auto& [k, v] : s.settings)
        os << k << " = " << v << '\n';
    for (const auto& sw : s.sweeps) {
        os << "sweep." << sw.key << " = ";
        for (std::size_t i = 0; i < sw.values.size(); ++i)
            os << (i ? "," : "") << sw.values[i];
        os << '\n';
    }
    return os.str();
}

const std::vector<std::string>& figure_ids()
{
    static const std::vector<std::string> ids = {"7", "8", "9", "10a", "10b", "11", "12", "t5"};
    return ids;
}

Scenario figure_scenario(const std::string& id)
{
    const std::vector<std::string> sizes = {"10", "20", "30", "40", "50", "60", "70", "80", "90", "100"};
    const std::vector<std::string> devices = {"10", "50", "100", "150", "200", "250"};
    Scenario s;
    s.set("frame_payload_bytes", "50");
    s.set("num_devices", "100");
    s.set("sub_slots", "4");
    s.set("slots_per_beacon", "100");
    s.set("duty_cycle", "0.01");
    s.set("sim_duration", "7200");
    s.set("replications", "5");
    if (id == "7") {
        s.set("sf", "7");
        s.sweep("protocol", {"aloha", "cr_mac"});
        s.sweep("sub_slots", {"2", "4", "8"});
        s.sweep("frame_payload_bytes", sizes);
    } else if (id == "8" || id == "9" || id == "11" || id == "t5") {
        s.sweep("sf", {"7", "12"});
        s.sweep("protocol", {"aloha", "cr_mac"});
        s.sweep("num_devices", devices);
    } else if (id == "10a" || id == "10b") {
        s.set("sf", id == "10a" ? "7" : "12");
        s.sweep("protocol", {"aloha", "cr_mac"});
        s.sweep("slots_per_beacon", {"10", "20", "50", "100", "200", "500"});
    } else if (id == "12") {
        s.sweep("sf", {"7", "12"});
        s.sweep("protocol", {"aloha", "cr_mac"});
        s.sweep("frame_payload_bytes", sizes);
    } else {
        throw ConfigError("unknown figure '" + id + "'");
    }
    return s;
}

std::vector<RunSpec> expand_scenario(const Scenario& s, std::optional<std::uint64_t> master_seed)
{
    std::vector<Point> points(1);
    for (const auto& [k, v] : s.settings)
        points[0][k] = v;
    for (const auto& sw : s.sweeps) {
        std::vector<Point> next;
        for (const auto& p : points) {
            for (const auto& v : sw.values) {
                auto q = p;
                q[sw.key] = v;
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }

    std::vector<RunSpec> runs;
    std::set<Point> emitted;
    for (auto p : points) {
        const std::uint64_t master =
            master_seed ? *master_seed : (p.count("seed") ? parse_number<std::uint64_t>("seed", p["seed"]) : 42);
        const int reps = p.count("replications") ? parse_number<int>("replications", p["replications"]) : 1;
        p.erase("seed");
        p.erase("replications");
        if (p.count("protocol") && p["protocol"] == "aloha") {
            for (const auto& k : cr_mac_only)
                p.erase(k);
        }
        if (!emitted.insert(p).second)
            continue;
        auto cfg = build_config(p);
        cfg.validate();
        if (cfg.sim_duration <= 0.0)
            continue;
        for (int r = 0; r < reps; ++r) {
            cfg.seed = mix_seed(master, static_cast<std::uint64_t>(r));
            runs.push_back({cfg, r});
        }
    }
    return runs;
}

std::vector<RunResult> run_all(const std::vector<RunSpec>& specs, unsigned jobs, bool keep_traces)
{
    std::vector<RunResult> results(specs.size());
    std::vector<std::exception_ptr> errors(specs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < specs.size(); i = next++) {
            auto& r = results[i];
            r.spec = specs[i];
            try {
                std::ostringstream log;
                SimHooks hooks;
                if (keep_traces) {
                    hooks.on_slot = [&](const SlotRecord& slot) {
                        log << "# slot " << slot.slot << " start=" << fmt(slot.start) << " outcome=" << slot.outcome
                            << '\n';
                        write_trace(log, *slot.trace);
                    };
                }
                r.metrics = run_simulation(r.spec.config, hooks);
                r.trace_log = log.str();
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(specs.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w)
        pool.emplace_back(worker);
    for (auto& t : pool)
        t.join();
    for (const auto& e : errors) {
        if (e)
            std::rethrow_exception(e);
    }
    return results;
}

RunRecord to_record(const RunResult& r)
{
    const auto& c = r.spec.config;
    const auto& m = r.metrics;
    const bool cr = c.protocol == Protocol::cr_mac;
    RunRecord rec;
    rec.config = {{"protocol", to_string(c.protocol)},
                  {"num_devices", std::to_string(c.num_devices)},
                  {"frame_payload_bytes", std::to_string(c.frame_payload_bytes)},
                  {"sf", std::to_string(c.params.sf)},
                  {"bw", fmt(c.params.bw)},
                  {"sub_slots", cr ? std::to_string(c.sub_slots) : ""},
                  {"slots_per_beacon", cr ? std::to_string(c.slots_per_beacon) : ""},
                  {"beacon_listening", cr ? to_string(c.beacon_listening) : ""},
                  {"duty_cycle", fmt(c.duty_cycle)},
                  {"sim_duration", fmt(c.sim_duration)},
                  {"crc_cap", std::to_string(c.crc_cap)},
                  {"retransmission", c.retransmission ? "true" : "false"},
                  {"replication", std::to_string(r.spec.replication)},
                  {"seed", std::to_string(c.seed)}};
    auto u = [](std::uint64_t v) { return static_cast<double>(v); };
    rec.metrics = {{"frames_offered", u(m.frames_offered)},
                   {"frames_delivered", u(m.frames_delivered)},
                   {"first_attempt_success", u(m.first_attempt_success)},
                   {"decode_success_fraction", m.decode_success_fraction()},
                   {"bits_delivered", u(m.bits_delivered)},
                   {"throughput_bps", m.throughput_bps(c.sim_duration)},
                   {"energy_tx_j", m.energy_tx_j},
                   {"energy_beacon_j", m.energy_beacon_j},
                   {"energy_j", m.energy_j},
                   {"energy_efficiency_bpj", compute_energy_efficiency(m)},
                   {"mean_delay_s", m.mean_delay_s},
                   {"retransmissions", u(m.retransmissions)},
                   {"clean", u(m.clean)},
                   {"resolved_by_decoder", u(m.resolved_by_decoder)},
                   {"resolved_by_crc", u(m.resolved_by_crc)},
                   {"lost_same_subslot", u(m.lost_same_subslot)},
                   {"lost_aloha_overlap", u(m.lost_aloha_overlap)},
                   {"lost_undecodable", u(m.lost_undecodable)},
                   {"crc_attempts", u(m.crc_attempts)},
                   {"beacons", u(m.beacons)}};
    return rec;
}

void write_csv_header(std::ostream& os)
{
    const auto rec = to_record(RunResult{});
    bool first = true;
    for (const auto& [k, v] : rec.config) {
        os << (first ? "" : ",") << k;
        first = false;
    }
    for (const auto& [k, v] : rec.metrics)
        os << ',' << k;
    os << '\n';
}

void write_csv_row(std::ostream& os, const RunResult& r)
{
    const auto rec = to_record(r);
    bool first = true;
    for (const auto& [k, v] : rec.config) {
        os << (first ? "" : ",") << v;
        first = false;
    }
    for (const auto& [k, v] : rec.metrics)
        os << ',' << fmt(v);
    os << '\n';
}

void write_csv(std::ostream& os, const std::vector<RunResult>& results)
{
    write_csv_header(os);
    for (const auto& r : results)
        write_csv_row(os, r);
}

}  // namespace crlora
