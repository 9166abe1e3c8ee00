#include <doctest.h>

#include <random>
#include <string>

#include "crlora/crc.hpp"
#include "oracles.hpp"

using namespace crlora;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s)
{
    return {s.begin(), s.end()};
}

DecodedFrame frame_of(const std::vector<Symbol>& symbols)
{
    DecodedFrame f;
    f.node_id = 1;
    for (auto s : symbols)
        f.symbols.push_back(DecodedSymbol::known(s));
    f.truncated_length = symbols.size();
    return f;
}

}  // namespace

TEST_CASE("table-driven crc agrees with the bitwise oracle")
{
    const auto check = bytes_of("123456789");
    CHECK(crc16(check) == oracle::crc16_bitwise(check));
    CHECK(crc16(check) == 0x31C3);

    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::uint8_t> data(trial % 70);
        for (auto& b : data)
            b = static_cast<std::uint8_t>(rng());
        CHECK(crc16(data) == oracle::crc16_bitwise(data));
        CrcConfig cfg;
        cfg.init = 0xFFFF;
        CHECK(crc16(data, cfg) == oracle::crc16_bitwise(data, 0x1021, 0xFFFF));
        cfg.polynomial = 0x8005;
        cfg.init = 0;
        CHECK(crc16(data, cfg) == oracle::crc16_bitwise(data, 0x8005, 0));
    }
}

TEST_CASE("crc of empty input is the initial value")
{
    CHECK(crc16({}) == 0);
    CrcConfig cfg;
    cfg.init = 0xFFFF;
    CHECK(crc16({}, cfg) == 0xFFFF);
}

TEST_CASE("appending the crc leaves a zero residue")
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint8_t> data(1 + trial % 40);
        for (auto& b : data)
            b = static_cast<std::uint8_t>(rng());
        const auto c = crc16(data);
        data.push_back(static_cast<std::uint8_t>(c >> 8));
        data.push_back(static_cast<std::uint8_t>(c & 0xff));
        CHECK(crc16(data) == 0);
    }
}

TEST_CASE("reflected variant matches the known check value")
{
    CrcConfig kermit;
    kermit.reflect = true;
    CHECK(crc16(bytes_of("123456789"), kermit) == 0x2189);
}

TEST_CASE("candidate counts")
{
    LoRaParams p;
    p.sf = 3;
    using D = DecodedSymbol;
    DecodedFrame n1{1, {D::known(3), D::known(4), D::known(1), D::candidates({5, 6}), D::candidates({0, 6})}, 5};
    DecodedFrame n3{3, {D::candidates({0, 3}), D::known(4), D::known(2), D::known(4), D::known(0)}, 5};
    CHECK(candidate_count(n1, p) == 4);
    CHECK(candidate_count(n3, p) == 2);
    CHECK(candidate_count(frame_of({1, 2, 3}), p) == 1);
    DecodedFrame starred{1, {D::star(), D::known(1)}, 2};
    CHECK(candidate_count(starred, p) == 8);

    DecodedFrame huge;
    for (int i = 0; i < 100; ++i)
        huge.symbols.push_back(D::candidates({0, 1, 2, 3}));
    CHECK(candidate_count(huge, p) == std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("a concrete frame needs no crc")
{
    const auto p = LoRaParams::preset(7);
    const auto symbols = frame_to_symbols(FrameSpec::make({1, 2, 3}), p);
    const auto out = disambiguate(frame_of(symbols), CrcConfig{}, p);
    CHECK(std::holds_alternative<outcome::AlreadyConcrete>(out));
    CHECK(attempts_used(out) == 0);
}

TEST_CASE("one ambiguous symbol resolves to the frame with the valid crc")
{
    const auto p = LoRaParams::preset(7);
    std::mt19937_64 rng(3);
    int resolved = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::uint8_t> payload(10);
        for (auto& b : payload)
            b = static_cast<std::uint8_t>(rng());
        const auto truth = FrameSpec::make(payload);
        const auto symbols = frame_to_symbols(truth, p);
        auto decoded = frame_of(symbols);
        const std::size_t pos = 2 + rng() % (symbols.size() - 3);
        const Symbol wrong = static_cast<Symbol>((symbols[pos] + 1 + rng() % 100) % 128);
        decoded.symbols[pos] = DecodedSymbol::candidates({std::min(wrong, symbols[pos]), std::max(wrong, symbols[pos])});
        const auto out = disambiguate(decoded, CrcConfig{}, p);
        REQUIRE(std::holds_alternative<outcome::Resolved>(out));
        const auto& r = std::get<outcome::Resolved>(out);
        CHECK(r.frame == truth);
        CHECK(r.attempts == 2);
        ++resolved;
    }
    CHECK(resolved == 100);
}

TEST_CASE("the cap skips large candidate sets without computing crcs")
{
    const auto p = LoRaParams::preset(7);
    auto decoded = frame_of(frame_to_symbols(FrameSpec::make({5, 6, 7, 8}), p));
    decoded.symbols[3] = DecodedSymbol::candidates({0, 1, 2, 3, 4, 5, 6, 7});
    decoded.symbols[4] = DecodedSymbol::candidates({0, 1, 2, 3, 4, 5, 6, 7});
    decoded.symbols[5] = DecodedSymbol::candidates({0, 1, 2, 3, 4, 5, 6, 7});
    decoded.symbols[6] = DecodedSymbol::candidates({0, 1, 2, 3, 4, 5, 6, 7});
    CrcConfig cfg;
    cfg.max_attempts = 4;
    const auto out = disambiguate(decoded, cfg, p);
    REQUIRE(std::holds_alternative<outcome::Skipped>(out));
    CHECK(std::get<outcome::Skipped>(out).candidates == 4096);
    CHECK(attempts_used(out) == 0);

    cfg.max_attempts = 0;
    decoded = frame_of(frame_to_symbols(FrameSpec::make({5, 6, 7, 8}), p));
    decoded.symbols[3] = DecodedSymbol::candidates({0, 1});
    CHECK(std::holds_alternative<outcome::Skipped>(disambiguate(decoded, cfg, p)));
}

TEST_CASE("no passing candidate is reported as ambiguous with zero passes")
{
    const auto p = LoRaParams::preset(7);
    auto frame = FrameSpec::make({1, 2, 3, 4});
    frame.crc16 ^= 0x0101;
    auto decoded = frame_of(frame_to_symbols(frame, p));
    const auto first = decoded.symbols[3].value();
    decoded.symbols[3] = DecodedSymbol::candidates({first, static_cast<Symbol>((first + 1) % 128)});
    const auto out = disambiguate(decoded, CrcConfig{}, p);
    REQUIRE(std::holds_alternative<outcome::Ambiguous>(out));
    CHECK(std::get<outcome::Ambiguous>(out).passing == 0);
    CHECK(attempts_used(out) == 2);
}

TEST_CASE("attempts never exceed the cap and the truth wins when alone")
{
    const auto p = LoRaParams::preset(7);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::uint8_t> payload(8);
        for (auto& b : payload)
            b = static_cast<std::uint8_t>(rng());
        const auto truth = FrameSpec::make(payload);
        const auto symbols = frame_to_symbols(truth, p);
        auto decoded = frame_of(symbols);
        const int ambiguous = 1 + trial % 3;
        for (int k = 0; k < ambiguous; ++k) {
            const std::size_t pos = 2 + rng() % (symbols.size() - 2);
            decoded.symbols[pos] = DecodedSymbol::candidates({symbols[pos], static_cast<Symbol>(rng() % 128)});
        }
        CrcConfig cfg;
        cfg.max_attempts = 1 + trial % 8;
        const auto total = candidate_count(decoded, p);
        const auto out = disambiguate(decoded, cfg, p);
        CHECK(attempts_used(out) <= cfg.max_attempts);
        CHECK(std::holds_alternative<outcome::Skipped>(out) == (total > cfg.max_attempts && total > 1));
        if (auto r = std::get_if<outcome::Resolved>(&out))
            CHECK(r->frame == truth);
    }
}
