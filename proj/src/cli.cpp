#include "crlora/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "crlora/analysis.hpp"
#include "crlora/bench.hpp"
#include "crlora/channel.hpp"
#include "crlora/decoder.hpp"
#include "crlora/scenario.hpp"

namespace crlora {

namespace {

std::string set_text(const BinSet& s)
{
    std::string out = "{";
    for (std::size_t i = 0; i < s.size(); ++i)
        out += (i ? "," : "") + std::to_string(s[i]);
    return out + "}";
}

void print_step(std::ostream& out, const DecodeStep& st)
{
    out << "t=" << st.time << " owner=n" << st.owner << " index=" << st.symbol_index;
    out << " F-=" << (st.f_minus ? set_text(*st.f_minus) : "-") << " F+=" << set_text(st.f_plus);
    out << " new=" << set_text(st.new_f) << " old=" << set_text(st.old_f);
    DecodedFrame partial;
    partial.node_id = st.owner;
    partial.symbols = st.owner_symbols;
    out << " | " << format_frame(partial) << '\n';
}

class Output
{
public:
    Output(const std::string& path, std::ostream& fallback) : os_(&fallback)
    {
        if (!path.empty()) {
            file_.open(path);
            if (!file_)
                throw ConfigError("cannot open output file '" + path + "'");
            os_ = &file_;
        }
    }
    std::ostream& stream() { return *os_; }

private:
    std::ofstream file_;
    std::ostream* os_;
};

int cmd_decode(const std::string& path, std::optional<std::size_t> n, bool steps, std::ostream& out,
               std::ostream& err)
{
    std::ifstream in(path);
    if (!in) {
        err << "error: cannot open trace file '" << path << "'\n";
        return exit_config;
    }
    ObservationTrace trace;
    try {
        trace = read_trace(in);
    } catch (const TraceFormatError& e) {
        err << path << ": " << e.what() << '\n';
        return exit_config;
    }
    const std::size_t nodes = n.value_or(trace.node_count());
    DecodeObserver observer;
    if (steps)
        observer = [&](const DecodeStep& st) { print_step(out, st); };
    try {
        if (nodes == 2 && trace.node_count() == 2) {
            const auto frames = decode_two(trace, observer);
            out << format_frames({frames[0], frames[1]});
        } else {
            out << format_frames(decode_many(trace, nodes, observer));
        }
    } catch (const DecodeError& e) {
        err << "decode error: " << e.what() << '\n';
        return e.code() == DecodeError::Code::same_subslot_collision ? exit_collision : exit_failure;
    }
    return exit_ok;
}

int cmd_simulate(const std::string& scenario_path, const std::string& figure, std::optional<std::uint64_t> seed,
                 const std::string& out_path, unsigned jobs, const std::string& trace_path, bool summary,
                 std::ostream& out)
{
    Scenario sc;
    if (!figure.empty()) {
        sc = figure_scenario(figure);
    } else if (!scenario_path.empty()) {
        std::ifstream in(scenario_path);
        if (!in)
            throw ConfigError("cannot open scenario file '" + scenario_path + "'");
        sc = parse_scenario(in);
    }
    const auto specs = expand_scenario(sc, seed);
    const auto results = run_all(specs, jobs, !trace_path.empty());

    Output dst(out_path, out);
    if (summary) {
        std::vector<RunRecord> records;
        for (const auto& r : results)
            records.push_back(to_record(r));
        std::vector<std::string> keys;
        for (const auto& [k, v] : to_record(RunResult{}).config) {
            if (k != "replication" && k != "seed")
                keys.push_back(k);
        }
        auto& os = dst.stream();
        os << "runs";
        for (const auto& k : keys)
            os << ',' << k;
        for (const auto& [k, v] : to_record(RunResult{}).metrics)
            os << ',' << k << "_mean," << k << "_sd";
        os << '\n';
        char buf[64];
        for (const auto& row : aggregate(records, keys)) {
            os << row.runs;
            for (const auto& [k, v] : row.group)
                os << ',' << v;
            for (const auto& m : row.metrics) {
                std::snprintf(buf, sizeof buf, ",%.10g,%.10g", m.mean, m.stddev);
                os << buf;
            }
            os << '\n';
        }
    } else {
        write_csv(dst.stream(), results);
    }

    if (!trace_path.empty()) {
        std::ofstream tf(trace_path);
        if (!tf)
            throw ConfigError("cannot open trace-debug file '" + trace_path + "'");
        for (std::size_t i = 0; i < results.size(); ++i) {
            tf << "# run " << i << " protocol=" << to_string(results[i].spec.config.protocol)
               << " seed=" << results[i].spec.config.seed << '\n';
            tf << results[i].trace_log;
        }
    }
    return exit_ok;
}

int cmd_table3(std::uint64_t mc_trials, std::uint64_t seed, unsigned jobs, const std::string& out_path,
               std::ostream& out)
{
    Output dst(out_path, out);
    auto& os = dst.stream();
    const std::vector<int> subs = {2, 4, 8};
    char buf[128];
    if (mc_trials == 0) {
        os << "n,s=2,s=4,s=8\n";
        for (int n = 2; n <= 8; ++n) {
            os << n;
            for (int s : subs) {
                std::snprintf(buf, sizeof buf, ",%.3f", round_half_up(p_distinct(n, s), 3));
                os << buf;
            }
            os << '\n';
        }
        return exit_ok;
    }
    os << "n,s,p,p_mc,sigma\n";
    for (const auto& cell : probability_table(2, 8, subs)) {
        const auto mc = p_distinct_mc(cell.n, cell.s, mc_trials, mix_seed(seed, cell.n * 16 + cell.s), jobs);
        const double sigma = std::sqrt(cell.p * (1.0 - cell.p) / static_cast<double>(mc_trials));
        std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f,%.6f\n", cell.n, cell.s, cell.p, mc, sigma);
        os << buf;
    }
    return exit_ok;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Collision-resolving LoRa decoder and MAC simulator"};
    app.require_subcommand(1);

    std::string out_path;
    std::optional<std::uint64_t> seed;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

    auto* decode = app.add_subcommand("decode", "Decode a frequency-set trace file");
    std::string trace_file;
    std::optional<std::size_t> nodes;
    bool steps = false;
    decode->add_option("trace", trace_file, "Trace file")->required();
    decode->add_option("-n,--nodes", nodes, "Number of transmitters (default: from trace)");
    decode->add_flag("--steps", steps, "Print the decoder state after every frontier");

    auto* simulate = app.add_subcommand("simulate", "Run a scenario or figure preset, emit CSV");
    std::string scenario_file, figure, trace_debug;
    bool summary = false;
    simulate->add_option("scenario", scenario_file, "Scenario file");
    simulate->add_option("--figure", figure, "Figure preset")->check(CLI::IsMember(figure_ids()));
    simulate->add_option("--seed", seed, "Master seed");
    simulate->add_option("--out", out_path, "Output CSV path");
    simulate->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    simulate->add_option("--trace-debug", trace_debug, "Write every CR-MAC slot trace to this file");
    simulate->add_flag("--summary", summary, "Mean and standard deviation over replications");

    auto* bench = app.add_subcommand("crc-bench", "Forced-collision CRC disambiguation bench");
    CrcBenchConfig bcfg;
    std::vector<std::uint64_t> caps = {4, 100};
    int bench_sf = 7;
    bench->add_option("--cap", caps, "CRC attempt caps")->check(CLI::NonNegativeNumber);
    bench->add_option("--trials", bcfg.trials, "Trials per point")->check(CLI::PositiveNumber);
    bench->add_option("--max-colliding", bcfg.max_colliding, "Largest number of colliding frames");
    bench->add_option("--sub-slots", bcfg.sub_slots, "Sub-slots per symbol");
    bench->add_option("--payload", bcfg.payload_bytes, "Payload bytes");
    bench->add_option("--sf", bench_sf, "Spreading factor");
    bench->add_option("--seed", seed, "Seed");
    bench->add_option("--out", out_path, "Output CSV path");

    auto* table3 = app.add_subcommand("table3", "Probability that all devices pick distinct sub-slots");
    std::uint64_t mc_trials = 0;
    table3->add_option("--mc", mc_trials, "Also estimate each cell by Monte-Carlo with this many trials");
    table3->add_option("--seed", seed, "Seed");
    table3->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    table3->add_option("--out", out_path, "Output CSV path");

    auto* toa = app.add_subcommand("toa", "Time on air of one frame");
    int toa_sf = 7, toa_payload = 50, toa_cr = 1, toa_preamble = 6;
    double toa_bw = 125000.0;
    bool implicit = false, no_crc = false;
    std::optional<bool> ldro;
    toa->add_option("--sf", toa_sf, "Spreading factor");
    toa->add_option("--bw", toa_bw, "Bandwidth in Hz");
    toa->add_option("--payload", toa_payload, "Payload bytes");
    toa->add_option("--cr", toa_cr, "Coding rate 4/(4+cr)");
    toa->add_option("--preamble", toa_preamble, "Preamble symbols");
    toa->add_flag("--implicit", implicit, "Implicit header");
    toa->add_flag("--no-crc", no_crc, "No payload CRC");
    toa->add_option("--ldro", ldro, "Low data-rate optimization (default: on for SF11/12 at 125 kHz)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (decode->parsed())
            return cmd_decode(trace_file, nodes, steps, out, err);
        if (simulate->parsed())
            return cmd_simulate(scenario_file, figure, seed, out_path, jobs, trace_debug, summary, out);
        if (bench->parsed()) {
            bcfg.params = LoRaParams::preset(bench_sf);
            bcfg.params.validate();
            if (seed)
                bcfg.seed = *seed;
            std::vector<CrcBenchRow> rows;
            for (auto cap : caps) {
                bcfg.cap = cap;
                for (const auto& r : crc_bench(bcfg))
                    rows.push_back(r);
            }
            Output dst(out_path, out);
            write_crc_bench_csv(dst.stream(), rows);
            return exit_ok;
        }
        if (table3->parsed())
            return cmd_table3(mc_trials, seed.value_or(42), jobs, out_path, out);
        if (toa->parsed()) {
            auto p = LoRaParams::preset(toa_sf, toa_bw);
            p.cr = toa_cr;
            p.preamble_symbols = toa_preamble;
            p.explicit_header = !implicit;
            p.payload_crc = !no_crc;
            if (ldro)
                p.low_dr_optimize = *ldro;
            p.validate();
            char buf[128];
            std::snprintf(buf, sizeof buf, "%.3f ms (%d payload symbols)\n", time_on_air(p, toa_payload) * 1e3,
                          payload_symbol_count(p, toa_payload));
            out << buf;
            return exit_ok;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_failure;
}

}  // namespace crlora
