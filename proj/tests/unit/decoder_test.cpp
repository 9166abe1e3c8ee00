#include <doctest.h>

#include <map>
#include <random>

#include "crlora/decoder.hpp"
#include "oracles.hpp"

using namespace crlora;

namespace {

LoRaParams sf3()
{
    LoRaParams p;
    p.sf = 3;
    return p;
}

std::vector<Symbol> to_symbols(const std::vector<int>& v)
{
    return {v.begin(), v.end()};
}

DecodedSymbol K(Symbol v)
{
    return DecodedSymbol::known(v);
}

DecodedSymbol C(BinSet s)
{
    return DecodedSymbol::candidates(std::move(s));
}

ObservationTrace table1()
{
    std::vector<TransmissionInstance> txs = {{0, {2, 2, 6, 4, 4}}, {1, {6, 0, 4, 6, 2}}};
    return generate_trace(txs, sf3(), 4);
}

ObservationTrace table2()
{
    std::vector<TransmissionInstance> txs = {{0, {3, 4, 1, 6, 6}}, {1, {2, 1, 7, 2, 0}}, {2, {3, 4, 2, 4, 0}}};
    return generate_trace(txs, sf3(), 4);
}

struct Instance
{
    std::vector<TransmissionInstance> txs;
    ObservationTrace trace;
};

Instance random_instance(std::mt19937_64& rng, int n, int sf, int ticks, int min_len, int max_len)
{
    Instance in;
    const auto offsets = oracle::random_offsets(rng, n, ticks);
    const Tick base = static_cast<Tick>(rng() % 3);
    for (int i = 0; i < n; ++i) {
        const int len = min_len + static_cast<int>(rng() % (max_len - min_len + 1));
        in.txs.push_back({base + offsets[i], to_symbols(oracle::random_symbols(rng, sf, len))});
    }
    in.trace = generate_trace(in.txs, LoRaParams::preset(sf), ticks);
    return in;
}

// Truth for visible node v (phases ascending).
const TransmissionInstance& truth_of(const Instance& in, std::size_t v)
{
    for (const auto& t : in.txs) {
        if (t.start_offset == in.trace.phases[v])
            return t;
    }
    throw std::logic_error("no such node");
}

}  // namespace

TEST_CASE("pairwise decoder recovers both frames of the two-frame example")
{
    std::vector<DecodeStep> steps;
    const auto frames = decode_two(table1(), [&](const DecodeStep& s) { steps.push_back(s); });
    CHECK(frames[0].values() == std::vector<Symbol>{2, 2, 6, 4, 4});
    CHECK(frames[1].values() == std::vector<Symbol>{6, 0, 4, 6, 2});
    CHECK(format_frame(frames[0]) == "n1: 2 2 6 4 4");

    REQUIRE(steps.size() == 11);
    CHECK_FALSE(steps[0].f_minus.has_value());
    // First frontier of n1 after initialization: its symbol repeats, value still open.
    const auto& t3 = steps[1];
    CHECK(t3.time == 4);
    CHECK(t3.owner == 1);
    CHECK(*t3.f_minus == BinSet{2, 4});
    CHECK(t3.f_plus == BinSet{2, 4});
    REQUIRE(t3.owner_symbols.size() == 2);
    CHECK(t3.owner_symbols[0].kind() == DecodedSymbol::Kind::star);
    CHECK(t3.owner_symbols[1].kind() == DecodedSymbol::Kind::star);
    // Next frontier of n2 reveals one changed frequency.
    CHECK(steps[2].new_f == BinSet{0});
    CHECK(steps[2].old_f == BinSet{6});
}

TEST_CASE("general decoder reproduces the three-frame candidate table")
{
    const auto frames = decode_many(table2(), 3);
    REQUIRE(frames.size() == 3);
    CHECK(frames[0].symbols == std::vector<DecodedSymbol>{K(3), K(4), K(1), C({5, 6}), C({0, 6})});
    CHECK(frames[1].symbols == std::vector<DecodedSymbol>{K(2), K(1), K(7), K(2), K(0)});
    CHECK(frames[2].symbols == std::vector<DecodedSymbol>{C({0, 3}), K(4), K(2), K(4), K(0)});
    CHECK(format_frames(frames) == "n1: 3 4 1 {5,6} {0,6}\nn2: 2 1 7 2 0\nn3: {0,3} 4 2 4 0\n");
}

TEST_CASE("pairwise decoding is complete on random pairs")
{
    std::mt19937_64 rng(101);
    int failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int sf = trial % 2 ? 3 : 7;
        const int ticks = 2 << (trial % 3);
        auto in = random_instance(rng, 2, sf, ticks, 5, 60);
        try {
            const auto frames = decode_two(in.trace);
            for (std::size_t v = 0; v < 2; ++v)
                failures += frames[v].values() != truth_of(in, v).symbols;
        } catch (const DecodeError&) {
            ++failures;
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("general decoder with two nodes matches the pairwise decoder")
{
    std::mt19937_64 rng(202);
    for (int trial = 0; trial < 500; ++trial) {
        auto in = random_instance(rng, 2, 3, 4, 3, 20);
        const auto pair = decode_two(in.trace);
        const auto many = decode_many(in.trace, 2);
        CHECK(many[0] == pair[0]);
        CHECK(many[1] == pair[1]);
    }
}

TEST_CASE("general decoder is sound on random instances")
{
    std::mt19937_64 rng(303);
    int violations = 0;
    int ambiguous = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 3 + trial % 3;
        const int sf = trial % 2 ? 3 : 7;
        auto in = random_instance(rng, n, sf, 8, 3, 40);
        try {
            const auto frames = decode_many(in.trace, n);
            for (std::size_t v = 0; v < frames.size(); ++v) {
                const auto& truth = truth_of(in, v).symbols;
                if (frames[v].symbols.size() != truth.size()) {
                    ++violations;
                    continue;
                }
                for (std::size_t i = 0; i < truth.size(); ++i) {
                    const auto& vals = frames[v].symbols[i].values();
                    if (!std::binary_search(vals.begin(), vals.end(), truth[i]))
                        ++violations;
                    ambiguous += !frames[v].symbols[i].is_known();
                }
            }
        } catch (const DecodeError&) {
            ++violations;
        }
    }
    CHECK(violations == 0);
    CHECK(ambiguous > 0);
}

TEST_CASE("single transmitter decodes directly")
{
    std::vector<TransmissionInstance> one = {{0, {1, 1, 5, 2}}};
    const auto frames = decode_many(generate_trace(one, sf3(), 4), 1);
    CHECK(frames[0].values() == std::vector<Symbol>{1, 1, 5, 2});
}

TEST_CASE("distinct frames of three nodes can share one trace")
{
    // Exhaustive search over short sf=3 frames at offsets 0,1,2: some traces
    // are produced by several inputs, so no decoder can be exact for n >= 3.
    std::mt19937_64 rng(404);
    std::map<std::string, std::vector<std::vector<std::vector<Symbol>>>> by_trace;
    for (int trial = 0; trial < 60000; ++trial) {
        std::vector<TransmissionInstance> txs;
        std::vector<std::vector<Symbol>> frames;
        for (Tick o = 0; o < 3; ++o) {
            txs.push_back({o, to_symbols(oracle::random_symbols(rng, 3, 3 + trial % 2))});
            frames.push_back(txs.back().symbols);
        }
        auto& bucket = by_trace[write_trace(generate_trace(txs, sf3(), 4))];
        if (std::find(bucket.begin(), bucket.end(), frames) == bucket.end())
            bucket.push_back(frames);
    }
    int shared = 0;
    for (const auto& [text, inputs] : by_trace) {
        if (inputs.size() < 2)
            continue;
        ++shared;
        const auto decoded = decode_many(read_trace(text), 3);
        for (const auto& input : inputs) {
            for (std::size_t v = 0; v < 3; ++v) {
                for (std::size_t i = 0; i < input[v].size(); ++i) {
                    const auto& vals = decoded[v].symbols[i].values();
                    CHECK(std::binary_search(vals.begin(), vals.end(), input[v][i]));
                }
            }
        }
    }
    CHECK(shared > 0);
}

TEST_CASE("same sub-slot collisions are reported")
{
    std::vector<TransmissionInstance> txs = {{0, {1, 2, 3, 4}}, {0, {5, 6, 7, 1}}, {1, {2, 2, 6, 6}}};
    TraceOptions opts;
    opts.allow_same_subslot = true;
    const auto trace = generate_trace(txs, sf3(), 4, opts);
    CHECK(detect_same_subslot(trace));
    CHECK_FALSE(detect_same_subslot(table1()));
    CHECK_FALSE(detect_same_subslot(table2()));
    try {
        decode_two(trace);
        FAIL("expected a decode error");
    } catch (const DecodeError& e) {
        CHECK(e.code() == DecodeError::Code::same_subslot_collision);
    }
}

TEST_CASE("inconsistent traces are rejected")
{
    auto check_inconsistent = [](auto&& fn) {
        try {
            fn();
            FAIL("expected a decode error");
        } catch (const DecodeError& e) {
            CHECK(e.code() == DecodeError::Code::inconsistent_trace);
        }
    };
    check_inconsistent([] { decode_two(table2()); });
    check_inconsistent([] { decode_many(table2(), 2); });

    auto vanished = table1();
    vanished.events[3].detected = BinSet{};
    check_inconsistent([&] { decode_two(vanished); });

    auto unterminated = table1();
    unterminated.events.pop_back();
    check_inconsistent([&] { decode_two(unterminated); });
}

TEST_CASE("embedded length prefix truncates when the header is withheld")
{
    auto p = LoRaParams::preset(7);
    const auto a = frame_to_symbols(FrameSpec::make({1, 2, 3, 4, 5, 6}), p);
    const auto b = frame_to_symbols(FrameSpec::make({9, 8, 7}), p);
    std::vector<TransmissionInstance> txs = {{0, a}, {2, b}};
    TraceOptions opts;
    opts.publish_lengths = false;
    const auto frames = decode_two(generate_trace(txs, p, 4, opts));
    CHECK(frames[0].values() == a);
    CHECK(frames[1].values() == b);
}

TEST_CASE("decoded symbol kinds")
{
    CHECK(DecodedSymbol::candidates({4}).is_known());
    CHECK(DecodedSymbol::candidates({5, 1, 5}).values() == BinSet{1, 5});
    CHECK_THROWS(DecodedSymbol::candidates({}));
    CHECK_THROWS(DecodedSymbol::star().value());
    DecodedFrame f{2, {K(1), C({0, 3}), DecodedSymbol::star()}, std::nullopt};
    CHECK_FALSE(f.concrete());
    CHECK(format_frame(f) == "n2: 1 {0,3} *");
}
