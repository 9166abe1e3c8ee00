#include "crlora/decoder.hpp"

#include <algorithm>
#include <iterator>
#include <sstream>

namespace crlora {

DecodedSymbol DecodedSymbol::known(Symbol v)
{
    DecodedSymbol s;
    s.kind_ = Kind::known;
    s.values_ = {v};
    return s;
}

DecodedSymbol DecodedSymbol::star()
{
    return DecodedSymbol{};
}

DecodedSymbol DecodedSymbol::candidates(BinSet set)
{
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    if (set.empty())
        throw std::invalid_argument("empty candidate set");
    if (set.size() == 1)
        return known(set.front());
    DecodedSymbol s;
    s.kind_ = Kind::candidates;
    s.values_ = std::move(set);
    return s;
}

Symbol DecodedSymbol::value() const
{
    if (kind_ != Kind::known)
        throw std::logic_error("symbol is not known");
    return values_.front();
}

bool DecodedFrame::concrete() const
{
    return std::all_of(symbols.begin(), symbols.end(), [](const DecodedSymbol& s) { return s.is_known(); });
}

std::optional<std::vector<Symbol>> DecodedFrame::values() const
{
    if (!concrete())
        return std::nullopt;
    std::vector<Symbol> out;
    out.reserve(symbols.size());
    for (const auto& s : symbols)
        out.push_back(s.value());
    return out;
}

namespace {

enum class Mode { pairwise, general };

BinSet set_difference(const BinSet& a, const BinSet& b)
{
    BinSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

BinSet set_intersection(const BinSet& a, const BinSet& b)
{
    BinSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

BinSet advance_set(const BinSet& set, Tick ticks, int ticks_per_symbol, int sf)
{
    BinSet out;
    out.reserve(set.size());
    for (auto f : set)
        out.push_back(advance_bin(f, ticks, ticks_per_symbol, sf));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

[[noreturn]] void inconsistent(const std::string& what)
{
    throw DecodeError(DecodeError::Code::inconsistent_trace, what);
}

// Per-position bookkeeping while walking the trace.
struct Cell
{
    std::optional<Symbol> known;
    std::optional<BinSet> candidates;  // first set offered wins
    bool same_as_prev = false;
    bool conflict = false;

    void set_known(Symbol v)
    {
        if (known && *known != v)
            conflict = true;
        known = v;
    }

    void offer(const BinSet& set)
    {
        if (set.size() == 1) {
            set_known(set.front());
            return;
        }
        if (!known && !candidates)
            candidates = set;
    }

    DecodedSymbol snapshot() const
    {
        if (known)
            return DecodedSymbol::known(*known);
        if (candidates && !same_as_prev)
            return DecodedSymbol::candidates(*candidates);
        return DecodedSymbol::star();
    }
};

struct Resolved
{
    std::vector<DecodedSymbol> symbols;
    bool conflict = false;
    bool unresolved = false;  // some position carries no information
};

// Collapses runs of positions known to repeat their predecessor.
Resolved resolve_chains(const std::vector<Cell>& cells, std::uint32_t alphabet)
{
    Resolved out;
    out.symbols.resize(cells.size());
    std::size_t i = 0;
    while (i < cells.size()) {
        std::size_t j = i + 1;
        while (j < cells.size() && cells[j].same_as_prev)
            ++j;

        std::optional<Symbol> value;
        std::optional<BinSet> set;
        bool conflict = false;
        for (std::size_t k = i; k < j; ++k) {
            const auto& c = cells[k];
            conflict = conflict || c.conflict;
            if (c.known) {
                if (value && *value != *c.known)
                    conflict = true;
                value = c.known;
            } else if (c.candidates) {
                set = set ? set_intersection(*set, *c.candidates) : *c.candidates;
            }
        }
        if (value && set && !std::binary_search(set->begin(), set->end(), *value))
            conflict = true;

        DecodedSymbol sym;
        if (conflict) {
            out.conflict = true;
            BinSet all(alphabet);
            for (std::uint32_t v = 0; v < alphabet; ++v)
                all[v] = static_cast<Symbol>(v);
            sym = DecodedSymbol::candidates(std::move(all));
        } else if (value) {
            sym = DecodedSymbol::known(*value);
        } else if (set && !set->empty()) {
            sym = DecodedSymbol::candidates(*set);
        } else if (set) {
            out.conflict = true;
            sym = DecodedSymbol::star();
        } else {
            out.unresolved = true;
            sym = DecodedSymbol::star();
        }
        for (std::size_t k = i; k < j; ++k)
            out.symbols[k] = sym;
        i = j;
    }
    return out;
}

class Walker
{
public:
    Walker(const ObservationTrace& trace, Mode mode) : trace_(trace), mode_(mode), nodes_(trace.node_count()) {}

    std::vector<DecodedFrame> run(const DecodeObserver& observer);

private:
    Cell& cell(int owner, std::int64_t index)
    {
        auto& cells = nodes_[owner - 1];
        if (index < 0)
            inconsistent("negative symbol index");
        if (static_cast<std::size_t>(index) >= cells.size())
            cells.resize(index + 1);
        return cells[index];
    }

    void step(const FrontierEvent& ev, const BinSet& f_plus, const DecodeObserver& observer);
    std::vector<DecodedFrame> finish() const;

    const ObservationTrace& trace_;
    Mode mode_;
    std::vector<std::vector<Cell>> nodes_;
    std::optional<BinSet> previous_;
    Tick previous_time_ = 0;
};

void Walker::step(const FrontierEvent& ev, const BinSet& f_plus, const DecodeObserver& observer)
{
    const std::size_t n = trace_.node_count();
    if (f_plus.size() > n)
        throw DecodeError(DecodeError::Code::same_subslot_collision,
                          "more frequencies than transmitters at t=" + std::to_string(ev.time));

    if (!previous_) {
        if (ev.owner != static_cast<int>(n) || ev.symbol_index != 0)
            inconsistent("first detectable frontier must open the last node's data");
        previous_ = f_plus;
        previous_time_ = ev.time;
        if (observer)
            observer(DecodeStep{ev.time, ev.owner, ev.symbol_index, std::nullopt, f_plus, {}, {}, {}});
        return;
    }
    if (ev.symbol_index < 1)
        inconsistent("first frontier of a node after decoding started");

    const BinSet f_minus =
        advance_set(*previous_, ev.time - previous_time_, trace_.ticks_per_symbol, trace_.params.sf);
    const BinSet new_f = set_difference(f_plus, f_minus);
    const BinSet old_f = set_difference(f_minus, f_plus);
    if (new_f.size() >= 2) {
        throw DecodeError(DecodeError::Code::same_subslot_collision,
                          "several new frequencies at t=" + std::to_string(ev.time));
    }
    if (old_f.size() >= 2)
        inconsistent("several frequencies vanished at t=" + std::to_string(ev.time));

    // Symbol that just ended: its last frequency equals its value.
    Cell& prev = cell(ev.owner, ev.symbol_index - 1);
    if (old_f.size() == 1)
        prev.set_known(old_f.front());
    else if (f_minus.size() == 1)
        prev.set_known(f_minus.front());
    else if (mode_ == Mode::general)
        prev.offer(f_minus);

    // Symbol that just started, unless every transmitter has stopped.
    if (!f_plus.empty()) {
        Cell& cur = cell(ev.owner, ev.symbol_index);
        if (new_f.size() == 1)
            cur.set_known(new_f.front());
        else if (f_plus.size() == 1)
            cur.set_known(f_plus.front());
        else if (f_plus.size() == n)
            cur.same_as_prev = true;
        else
            cur.offer(f_plus);
    }

    previous_ = f_plus;
    previous_time_ = ev.time;

    if (observer) {
        DecodeStep s{ev.time, ev.owner, ev.symbol_index, f_minus, f_plus, new_f, old_f, {}};
        for (const auto& c : nodes_[ev.owner - 1])
            s.owner_symbols.push_back(c.snapshot());
        observer(s);
    }
}

std::vector<DecodedFrame> Walker::run(const DecodeObserver& observer)
{
    const std::size_t n = trace_.node_count();
    if (n == 0)
        inconsistent("trace without transmitters");
    if (trace_.lengths && trace_.lengths->size() != n)
        inconsistent("length count does not match node count");

    bool ended = false;
    for (const auto& ev : trace_.events) {
        if (ended)
            inconsistent("frontier after all transmitters stopped");
        if (ev.owner < 1 || static_cast<std::size_t>(ev.owner) > n)
            inconsistent("event owner out of range");
        if (!ev.detected) {
            if (previous_ || ev.symbol_index != 0)
                inconsistent("undetectable frontier after decoding started");
            continue;
        }
        step(ev, *ev.detected, observer);
        ended = ev.detected->empty();
    }
    if (!ended)
        inconsistent("trace has no terminating empty frontier");
    return finish();
}

std::vector<DecodedFrame> Walker::finish() const
{
    const auto& params = trace_.params;
    std::vector<DecodedFrame> frames;
    for (std::size_t node = 0; node < nodes_.size(); ++node) {
        std::vector<Cell> cells = nodes_[node];

        std::optional<std::size_t> length;
        if (trace_.lengths) {
            length = (*trace_.lengths)[node];
        } else {
            auto whole = resolve_chains(cells, params.alphabet());
            const std::size_t prefix = length_prefix_symbols(params);
            if (whole.symbols.size() >= prefix &&
                std::all_of(whole.symbols.begin(), whole.symbols.begin() + prefix,
                            [](const DecodedSymbol& s) { return s.is_known(); })) {
                std::vector<Symbol> lead;
                for (std::size_t i = 0; i < prefix; ++i)
                    lead.push_back(whole.symbols[i].value());
                const auto declared = read_length_prefix(lead, params);
                if (declared > 0)
                    length = frame_symbol_count(declared, params);
            }
        }

        if (length) {
            if (cells.size() < *length)
                inconsistent("node " + std::to_string(node + 1) + " decoded fewer symbols than its length");
            cells.resize(*length);
        }

        auto resolved = resolve_chains(cells, params.alphabet());
        if (length && resolved.conflict)
            inconsistent("contradictory symbol values for node " + std::to_string(node + 1));

        DecodedFrame frame;
        frame.node_id = static_cast<int>(node) + 1;
        frame.truncated_length = length;
        frame.symbols = std::move(resolved.symbols);
        if (mode_ == Mode::general) {
            // Positions with no information at all may hold any value.
            for (auto& s : frame.symbols) {
                if (s.kind() == DecodedSymbol::Kind::star) {
                    BinSet all(params.alphabet());
                    for (std::uint32_t v = 0; v < params.alphabet(); ++v)
                        all[v] = static_cast<Symbol>(v);
                    s = DecodedSymbol::candidates(std::move(all));
                }
            }
        }
        frames.push_back(std::move(frame));
    }
    return frames;
}

}  // namespace

std::array<DecodedFrame, 2> decode_two(const ObservationTrace& trace, const DecodeObserver& observer)
{
    if (trace.node_count() != 2)
        inconsistent("decode_two needs exactly two transmitters, trace has " + std::to_string(trace.node_count()));
    Walker walker(trace, Mode::pairwise);
    auto frames = walker.run(observer);
    for (const auto& f : frames) {
        if (!f.concrete())
            inconsistent("node " + std::to_string(f.node_id) + " never changes symbol");
    }
    return {std::move(frames[0]), std::move(frames[1])};
}

std::vector<DecodedFrame> decode_many(const ObservationTrace& trace, std::size_t n, const DecodeObserver& observer)
{
    if (n != trace.node_count())
        inconsistent("expected " + std::to_string(n) + " transmitters, trace has " +
                     std::to_string(trace.node_count()));
    Walker walker(trace, Mode::general);
    return walker.run(observer);
}

bool detect_same_subslot(const ObservationTrace& trace)
{
    std::optional<BinSet> previous;
    Tick previous_time = 0;
    for (const auto& ev : trace.events) {
        if (!ev.detected)
            continue;
        if (previous) {
            auto f_minus = advance_set(*previous, ev.time - previous_time, trace.ticks_per_symbol, trace.params.sf);
            if (set_difference(*ev.detected, f_minus).size() >= 2)
                return true;
        }
        previous = *ev.detected;
        previous_time = ev.time;
    }
    return false;
}

std::string format_frame(const DecodedFrame& frame)
{
    std::ostringstream os;
    os << 'n' << frame.node_id << ':';
    for (const auto& s : frame.symbols) {
        os << ' ';
        switch (s.kind()) {
        case DecodedSymbol::Kind::known:
            os << s.value();
            break;
        case DecodedSymbol::Kind::star:
            os << '*';
            break;
        case DecodedSymbol::Kind::candidates:
            os << '{';
            for (std::size_t i = 0; i < s.values().size(); ++i)
                os << (i ? "," : "") << s.values()[i];
            os << '}';
            break;
        }
    }
    return os.str();
}

std::string format_frames(const std::vector<DecodedFrame>& frames)
{
    std::string out;
    for (const auto& f : frames)
        out += format_frame(f) + "\n";
    return out;
}

}  // namespace crlora
