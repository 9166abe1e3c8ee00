#include "crlora/channel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace crlora {

TraceFormatError::TraceFormatError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line)
{
}

bool validate_desync(std::span<const Tick> offsets, int ticks_per_symbol)
{
    if (offsets.empty() || ticks_per_symbol < 1)
        return false;
    std::vector<Tick> sorted(offsets.begin(), offsets.end());
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() < 0)
        return false;
    if (sorted.back() - sorted.front() > ticks_per_symbol - 1)
        return false;
    return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
}

ObservationTrace generate_trace(std::span<const TransmissionInstance> transmissions, const LoRaParams& params,
                                int ticks_per_symbol, const TraceOptions& options)
{
    params.validate();
    const int s = ticks_per_symbol;
    bins_per_tick(s, params.sf);
    if (transmissions.empty())
        throw std::invalid_argument("no transmissions");

    std::vector<Tick> offsets;
    offsets.reserve(transmissions.size());
    for (const auto& tx : transmissions) {
        if (tx.symbols.empty())
            throw std::invalid_argument("transmission without symbols");
        for (auto v : tx.symbols) {
            if (v >= params.alphabet())
                throw std::invalid_argument("symbol value out of range");
        }
        offsets.push_back(tx.start_offset);
    }

    if (!options.allow_same_subslot) {
        if (!validate_desync(offsets, s))
            throw DesyncError("start offsets violate the desynchronization window");
    } else {
        auto [lo, hi] = std::minmax_element(offsets.begin(), offsets.end());
        if (*lo < 0 || *hi - *lo > s - 1)
            throw DesyncError("start offsets span more than one symbol");
    }

    // Visible nodes are the distinct start ticks; co-located transmitters merge.
    std::map<Tick, std::size_t> group_length;
    Tick end_time = 0;
    for (const auto& tx : transmissions) {
        auto& len = group_length[tx.start_offset];
        len = std::max(len, tx.symbols.size());
        end_time = std::max<Tick>(end_time, tx.start_offset + static_cast<Tick>(tx.symbols.size()) * s);
    }

    ObservationTrace trace;
    trace.params = params;
    trace.ticks_per_symbol = s;
    std::vector<std::size_t> lengths;
    for (const auto& [phase, len] : group_length) {
        trace.phases.push_back(phase);
        lengths.push_back(len);
    }
    if (options.publish_lengths)
        trace.lengths = std::move(lengths);
    trace.end_time = end_time;

    const Tick first = trace.phases.front();
    const Tick last_start = trace.phases.back();
    for (Tick t = first; t <= end_time; ++t) {
        int owner = 0;
        for (std::size_t i = 0; i < trace.phases.size(); ++i) {
            if (t >= trace.phases[i] && (t - trace.phases[i]) % s == 0) {
                owner = static_cast<int>(i) + 1;
                break;
            }
        }
        if (owner == 0)
            continue;

        FrontierEvent ev;
        ev.time = t;
        ev.owner = owner;
        ev.symbol_index = (t - trace.phases[owner - 1]) / s;
        if (t >= last_start) {
            BinSet bins;
            for (const auto& tx : transmissions) {
                const Tick rel = t - tx.start_offset;
                if (rel < 0 || rel >= static_cast<Tick>(tx.symbols.size()) * s)
                    continue;
                bins.push_back(advance_bin(tx.symbols[rel / s], rel % s, s, params.sf));
            }
            std::sort(bins.begin(), bins.end());
            bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
            ev.detected = std::move(bins);
        }
        trace.events.push_back(std::move(ev));
    }
    return trace;
}

namespace {

std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T>
T parse_number(std::string_view text, std::size_t line, const char* what)
{
    T value{};
    auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw TraceFormatError(line, std::string("bad ") + what + " '" + std::string(text) + "'");
    return value;
}

double parse_double(const std::string& text, std::size_t line, const char* what)
{
    std::istringstream is(text);
    double v = 0;
    is >> v;
    if (!is || !is.eof())
        throw TraceFormatError(line, std::string("bad ") + what + " '" + text + "'");
    return v;
}

// Splits "key=value" and checks the key.
std::string field(const std::string& token, const char* key, std::size_t line)
{
    const std::string prefix = std::string(key) + "=";
    if (token.rfind(prefix, 0) != 0)
        throw TraceFormatError(line, "expected field '" + std::string(key) + "', got '" + token + "'");
    return token.substr(prefix.size());
}

BinSet parse_bins(const std::string& text, std::size_t line, std::uint32_t alphabet)
{
    BinSet bins;
    if (text.empty())
        return bins;
    std::size_t pos = 0;
    while (true) {
        auto comma = text.find(',', pos);
        auto item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        auto v = parse_number<unsigned>(item, line, "frequency");
        if (v >= alphabet)
            throw TraceFormatError(line, "frequency " + item + " out of range");
        if (!bins.empty() && v <= bins.back())
            throw TraceFormatError(line, "frequencies must be strictly increasing");
        bins.push_back(static_cast<Symbol>(v));
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return bins;
}

}  // namespace

void write_trace(std::ostream& os, const ObservationTrace& trace)
{
    const auto& p = trace.params;
    os << "crlora-trace 1\n";
    os << "params sf=" << p.sf << " bw=" << format_double(p.bw) << " cr=" << p.cr << " preamble=" << p.preamble_symbols
       << " header=" << (p.explicit_header ? 1 : 0) << " crc=" << (p.payload_crc ? 1 : 0)
       << " ldro=" << (p.low_dr_optimize ? 1 : 0) << "\n";
    os << "ticks_per_symbol " << trace.ticks_per_symbol << "\n";
    for (std::size_t i = 0; i < trace.phases.size(); ++i) {
        os << "node " << i + 1 << " phase=" << trace.phases[i];
        if (trace.lengths)
            os << " length=" << (*trace.lengths)[i];
        os << "\n";
    }
    for (const auto& ev : trace.events) {
        os << "event " << ev.time << " owner=" << ev.owner << " index=" << ev.symbol_index;
        if (!ev.detected) {
            os << " undetectable\n";
            continue;
        }
        os << " freqs=";
        for (std::size_t i = 0; i < ev.detected->size(); ++i) {
            if (i)
                os << ',';
            os << (*ev.detected)[i];
        }
        os << "\n";
    }
    os << "end " << trace.end_time << "\n";
}

std::string write_trace(const ObservationTrace& trace)
{
    std::ostringstream os;
    write_trace(os, trace);
    return os.str();
}

ObservationTrace read_trace(std::istream& is)
{
    ObservationTrace trace;
    std::vector<std::size_t> lengths;
    bool have_magic = false, have_params = false, have_ticks = false, have_end = false;
    std::size_t lineno = 0;
    std::string line;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;)
            tok.push_back(t);
        if (tok.empty())
            continue;
        if (have_end)
            throw TraceFormatError(lineno, "content after end record");

        const std::string& kind = tok[0];
        if (!have_magic) {
            if (kind != "crlora-trace" || tok.size() != 2 || tok[1] != "1")
                throw TraceFormatError(lineno, "missing 'crlora-trace 1' header");
            have_magic = true;
        } else if (kind == "params") {
            if (tok.size() != 8)
                throw TraceFormatError(lineno, "params record needs 7 fields");
            auto& p = trace.params;
            p.sf = parse_number<int>(field(tok[1], "sf", lineno), lineno, "sf");
            p.bw = parse_double(field(tok[2], "bw", lineno), lineno, "bw");
            p.cr = parse_number<int>(field(tok[3], "cr", lineno), lineno, "cr");
            p.preamble_symbols = parse_number<int>(field(tok[4], "preamble", lineno), lineno, "preamble");
            p.explicit_header = parse_number<int>(field(tok[5], "header", lineno), lineno, "header") != 0;
            p.payload_crc = parse_number<int>(field(tok[6], "crc", lineno), lineno, "crc") != 0;
            p.low_dr_optimize = parse_number<int>(field(tok[7], "ldro", lineno), lineno, "ldro") != 0;
            try {
                p.validate();
            } catch (const std::invalid_argument& e) {
                throw TraceFormatError(lineno, e.what());
            }
            have_params = true;
        } else if (kind == "ticks_per_symbol") {
            if (tok.size() != 2 || !have_params)
                throw TraceFormatError(lineno, "ticks_per_symbol must follow params and take one value");
            trace.ticks_per_symbol = parse_number<int>(tok[1], lineno, "ticks_per_symbol");
            try {
                bins_per_tick(trace.ticks_per_symbol, trace.params.sf);
            } catch (const std::invalid_argument& e) {
                throw TraceFormatError(lineno, e.what());
            }
            have_ticks = true;
        } else if (kind == "node") {
            if (!have_ticks || !trace.events.empty())
                throw TraceFormatError(lineno, "node records must follow ticks_per_symbol and precede events");
            if (tok.size() != 3 && tok.size() != 4)
                throw TraceFormatError(lineno, "node record needs id, phase and optional length");
            auto id = parse_number<std::size_t>(tok[1], lineno, "node id");
            if (id != trace.phases.size() + 1)
                throw TraceFormatError(lineno, "node ids must be consecutive from 1");
            auto phase = parse_number<Tick>(field(tok[2], "phase", lineno), lineno, "phase");
            if (!trace.phases.empty() && phase <= trace.phases.back())
                throw TraceFormatError(lineno, "node phases must be strictly increasing");
            trace.phases.push_back(phase);
            const bool has_len = tok.size() == 4;
            if (id > 1 && has_len != trace.lengths.has_value())
                throw TraceFormatError(lineno, "either all or no nodes carry a length");
            if (has_len) {
                lengths.push_back(parse_number<std::size_t>(field(tok[3], "length", lineno), lineno, "length"));
                trace.lengths = lengths;
            }
        } else if (kind == "event") {
            if (trace.phases.empty())
                throw TraceFormatError(lineno, "event before any node record");
            if (tok.size() != 5)
                throw TraceFormatError(lineno, "event record needs time, owner, index and freqs");
            FrontierEvent ev;
            ev.time = parse_number<Tick>(tok[1], lineno, "time");
            ev.owner = parse_number<int>(field(tok[2], "owner", lineno), lineno, "owner");
            ev.symbol_index = parse_number<std::int64_t>(field(tok[3], "index", lineno), lineno, "index");
            if (ev.owner < 1 || static_cast<std::size_t>(ev.owner) > trace.phases.size())
                throw TraceFormatError(lineno, "owner out of range");
            if (ev.time != trace.phases[ev.owner - 1] + ev.symbol_index * trace.ticks_per_symbol)
                throw TraceFormatError(lineno, "event time is not a frontier of its owner");
            if (!trace.events.empty() && ev.time <= trace.events.back().time)
                throw TraceFormatError(lineno, "event times must be strictly increasing");
            if (tok[4] != "undetectable")
                ev.detected = parse_bins(field(tok[4], "freqs", lineno), lineno, trace.params.alphabet());
            trace.events.push_back(std::move(ev));
        } else if (kind == "end") {
            if (tok.size() != 2)
                throw TraceFormatError(lineno, "end record takes one value");
            trace.end_time = parse_number<Tick>(tok[1], lineno, "end time");
            have_end = true;
        } else {
            throw TraceFormatError(lineno, "unknown record '" + kind + "'");
        }
    }
    if (!have_magic)
        throw TraceFormatError(lineno, "empty trace");
    if (!have_params || !have_ticks || trace.phases.empty() || !have_end)
        throw TraceFormatError(lineno, "incomplete trace: params, ticks_per_symbol, node and end records required");
    return trace;
}

ObservationTrace read_trace(const std::string& text)
{
    std::istringstream is(text);
    return read_trace(is);
}

}  // namespace crlora
