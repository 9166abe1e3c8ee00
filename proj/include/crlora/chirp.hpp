#ifndef CRLORA_CHIRP_HPP
#define CRLORA_CHIRP_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace crlora {

/// A symbol value, equivalently a frequency bin in [0, 2^sf).
using Symbol = std::uint16_t;

/// Time measured in detection-resolution units (delta).
using Tick = std::int64_t;

/**
 * PHY configuration governing symbol timing and frame airtime.
 *
 * Frequencies are handled as integer bins 0..2^sf-1, never in Hz.
 */
struct LoRaParams
{
    int sf = 7;
    double bw = 125000.0;
    int cr = 1;  ///< coding rate 4/(4+cr)
    int preamble_symbols = 6;
    bool explicit_header = true;
    bool payload_crc = true;
    bool low_dr_optimize = false;

    /// Preset with low data-rate optimization enabled iff sf >= 11 at <= 125 kHz.
    static LoRaParams preset(int sf, double bw = 125000.0);

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;

    std::uint32_t alphabet() const { return 1u << sf; }

    bool operator==(const LoRaParams&) const = default;
};

class FrameError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Symbol duration 2^sf / bw, in seconds.
double symbol_duration(const LoRaParams& params);

/**
 * Frequency bin of an up-chirp carrying @p value after @p elapsed of its
 * symbol duration. @p elapsed must lie in [0, 1); dyadic fractions such as
 * k/4 are exact.
 */
Symbol instantaneous_frequency(Symbol value, double elapsed, const LoRaParams& params);

/// Advance a frequency bin by @p ticks, with @p ticks_per_symbol ticks per SD.
Symbol advance_bin(Symbol bin, Tick ticks, int ticks_per_symbol, int sf);

/// Bins swept per tick; requires ticks_per_symbol to divide 2^sf.
std::uint32_t bins_per_tick(int ticks_per_symbol, int sf);

/// Total frame airtime in seconds, preamble included.
double time_on_air(const LoRaParams& params, int payload_bytes);

/// Number of payload symbols as counted by the airtime formula.
int payload_symbol_count(const LoRaParams& params, int payload_bytes);

/**
 * A frame as carried on the symbol stream: length prefix, payload and
 * an optional trailing CRC-16 over (length, payload).
 */
struct FrameSpec
{
    std::vector<std::uint8_t> payload;
    std::uint8_t declared_length = 0;
    std::uint16_t crc16 = 0;

    /// Builds a frame with declared_length and CRC filled in.
    static FrameSpec make(std::vector<std::uint8_t> payload);

    /// True iff the stored CRC matches the content.
    bool crc_valid() const;

    bool operator==(const FrameSpec&) const = default;
};

/// Symbols needed to carry a frame of @p payload_bytes.
std::size_t frame_symbol_count(std::size_t payload_bytes, const LoRaParams& params);

/// Symbols that hold the one-byte length prefix.
std::size_t length_prefix_symbols(const LoRaParams& params);

/// Reads the length prefix from the leading symbols of a stream.
std::uint8_t read_length_prefix(std::span<const Symbol> leading, const LoRaParams& params);

/// Packs length | payload | crc MSB-first into sf-bit symbols, zero padded.
std::vector<Symbol> frame_to_symbols(const FrameSpec& frame, const LoRaParams& params);

/// Inverse of frame_to_symbols. The CRC is read back, not checked.
FrameSpec symbols_to_frame(std::span<const Symbol> symbols, const LoRaParams& params);

/// At least two distinct values in the sequence.
bool has_symbol_change(std::span<const Symbol> symbols);

}  // namespace crlora

#endif  // CRLORA_CHIRP_HPP
