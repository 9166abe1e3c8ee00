#include "crlora/crc.hpp"

#include <array>
#include <limits>
#include <set>

namespace crlora {

namespace {

using Table = std::array<std::uint16_t, 256>;

Table make_table(std::uint16_t poly)
{
    Table t{};
    for (unsigned i = 0; i < 256; ++i) {
        std::uint16_t r = static_cast<std::uint16_t>(i << 8);
        for (int k = 0; k < 8; ++k)
            r = (r & 0x8000) ? static_cast<std::uint16_t>((r << 1) ^ poly) : static_cast<std::uint16_t>(r << 1);
        t[i] = r;
    }
    return t;
}

std::uint8_t reverse8(std::uint8_t b)
{
    b = static_cast<std::uint8_t>((b & 0xF0) >> 4 | (b & 0x0F) << 4);
    b = static_cast<std::uint8_t>((b & 0xCC) >> 2 | (b & 0x33) << 2);
    b = static_cast<std::uint8_t>((b & 0xAA) >> 1 | (b & 0x55) << 1);
    return b;
}

std::uint16_t reverse16(std::uint16_t v)
{
    return static_cast<std::uint16_t>(reverse8(static_cast<std::uint8_t>(v & 0xff)) << 8 |
                                      reverse8(static_cast<std::uint8_t>(v >> 8)));
}

std::uint16_t frame_crc(const FrameSpec& f, const CrcConfig& cfg)
{
    std::vector<std::uint8_t> covered;
    covered.reserve(f.payload.size() + 1);
    covered.push_back(f.declared_length);
    covered.insert(covered.end(), f.payload.begin(), f.payload.end());
    return crc16(covered, cfg);
}

// Odometer step with the leftmost position most significant.
bool next_candidate(std::vector<std::size_t>& digit, const std::vector<BinSet>& choices)
{
    for (std::size_t k = digit.size(); k-- > 0;) {
        if (++digit[k] < choices[k].size())
            return true;
        digit[k] = 0;
    }
    return false;
}

}  // namespace

std::uint16_t crc16(std::span<const std::uint8_t> bytes, const CrcConfig& cfg)
{
    static const Table ccitt = make_table(0x1021);
    Table custom;
    const Table* table = &ccitt;
    if (cfg.polynomial != 0x1021) {
        custom = make_table(cfg.polynomial);
        table = &custom;
    }
    std::uint16_t crc = cfg.init;
    for (auto b : bytes) {
        const std::uint8_t in = cfg.reflect ? reverse8(b) : b;
        crc = static_cast<std::uint16_t>((crc << 8) ^ (*table)[((crc >> 8) ^ in) & 0xff]);
    }
    if (cfg.reflect)
        crc = reverse16(crc);
    return static_cast<std::uint16_t>(crc ^ cfg.xorout);
}

std::uint64_t candidate_count(const DecodedFrame& frame, const LoRaParams& params)
{
    constexpr auto cap = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t count = 1;
    for (const auto& s : frame.symbols) {
        std::uint64_t k = 1;
        switch (s.kind()) {
        case DecodedSymbol::Kind::known:
            break;
        case DecodedSymbol::Kind::star:
            k = params.alphabet();
            break;
        case DecodedSymbol::Kind::candidates:
            k = s.values().size();
            break;
        }
        if (count > cap / k)
            return cap;
        count *= k;
    }
    return count;
}

std::size_t attempts_used(const ResolutionOutcome& o)
{
    if (auto r = std::get_if<outcome::Resolved>(&o))
        return r->attempts;
    if (auto a = std::get_if<outcome::Ambiguous>(&o))
        return a->attempts;
    return 0;
}

ResolutionOutcome disambiguate(const DecodedFrame& frame, const CrcConfig& cfg, const LoRaParams& params)
{
    const auto total = candidate_count(frame, params);
    if (total == 1)
        return outcome::AlreadyConcrete{};
    if (total > cfg.max_attempts)
        return outcome::Skipped{total};

    std::vector<std::size_t> ambiguous;
    std::vector<BinSet> choices;
    std::vector<Symbol> symbols(frame.symbols.size());
    for (std::size_t i = 0; i < frame.symbols.size(); ++i) {
        const auto& s = frame.symbols[i];
        if (s.is_known()) {
            symbols[i] = s.value();
            continue;
        }
        ambiguous.push_back(i);
        if (s.kind() == DecodedSymbol::Kind::star) {
            BinSet all(params.alphabet());
            for (std::uint32_t v = 0; v < params.alphabet(); ++v)
                all[v] = static_cast<Symbol>(v);
            choices.push_back(std::move(all));
        } else {
            choices.push_back(s.values());
        }
    }

    std::vector<std::size_t> digit(ambiguous.size(), 0);
    std::set<std::vector<std::uint8_t>> seen;
    std::optional<FrameSpec> winner;
    std::size_t passing = 0;
    std::size_t attempts = 0;
    while (true) {
        for (std::size_t k = 0; k < ambiguous.size(); ++k)
            symbols[ambiguous[k]] = choices[k][digit[k]];
        ++attempts;
        try {
            std::span<const Symbol> view(symbols);
            if (!frame.truncated_length) {
                // Length still open: let the candidate's own prefix decide its extent.
                const auto need = frame_symbol_count(read_length_prefix(view, params), params);
                if (need <= view.size())
                    view = view.first(need);
            }
            FrameSpec candidate = symbols_to_frame(view, params);
            if (!params.payload_crc || frame_crc(candidate, cfg) == candidate.crc16) {
                std::vector<std::uint8_t> key(candidate.payload);
                key.push_back(candidate.declared_length);
                if (seen.insert(std::move(key)).second) {
                    ++passing;
                    winner = std::move(candidate);
                }
            }
        } catch (const FrameError&) {
            // An undecodable candidate fails like a bad CRC.
        }

        if (!next_candidate(digit, choices))
            break;
    }

    if (passing == 1)
        return outcome::Resolved{std::move(*winner), attempts};
    return outcome::Ambiguous{passing, attempts};
}

}  // namespace crlora
