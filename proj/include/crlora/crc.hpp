#ifndef CRLORA_CRC_HPP
#define CRLORA_CRC_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>

#include "crlora/chirp.hpp"
#include "crlora/decoder.hpp"

namespace crlora {

/// CRC-16 parameterization plus the per-frame cap on CRC evaluations.
struct CrcConfig
{
    std::uint16_t polynomial = 0x1021;
    std::uint16_t init = 0x0000;
    bool reflect = false;
    std::uint16_t xorout = 0x0000;
    std::size_t max_attempts = 4;
};

/// CCITT-16 (XMODEM variant by default), table driven.
std::uint16_t crc16(std::span<const std::uint8_t> bytes, const CrcConfig& cfg = {});

/// Number of concrete frames a decoded frame stands for.
std::uint64_t candidate_count(const DecodedFrame& frame, const LoRaParams& params);

namespace outcome {

struct Resolved
{
    FrameSpec frame;
    std::size_t attempts = 0;
};

struct Ambiguous
{
    std::size_t passing = 0;
    std::size_t attempts = 0;
};

struct Skipped
{
    std::uint64_t candidates = 0;
};

struct AlreadyConcrete
{
};

}  // namespace outcome

using ResolutionOutcome =
    std::variant<outcome::Resolved, outcome::Ambiguous, outcome::Skipped, outcome::AlreadyConcrete>;

/// CRC evaluations performed to reach an outcome.
std::size_t attempts_used(const ResolutionOutcome& o);

/**
 * Enumerates the concrete frames behind a partially decoded frame, in
 * lexicographic order of its ambiguous positions, and keeps those whose
 * CRC checks. Gives up without computing any CRC when there are more
 * candidates than cfg.max_attempts.
 */
ResolutionOutcome disambiguate(const DecodedFrame& frame, const CrcConfig& cfg, const LoRaParams& params);

}  // namespace crlora

#endif  // CRLORA_CRC_HPP
