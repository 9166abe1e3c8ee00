#ifndef CRLORA_CHANNEL_HPP
#define CRLORA_CHANNEL_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "crlora/chirp.hpp"

namespace crlora {

/// Sorted, duplicate-free set of frequency bins.
using BinSet = std::vector<Symbol>;

/// One transmitter's contribution to a slot.
struct TransmissionInstance
{
    Tick start_offset = 0;        ///< data start, in ticks from the slot origin
    std::vector<Symbol> symbols;  ///< data symbols; the preamble is implied
};

/// Receiver view at one symbol boundary of one (visible) transmitter.
struct FrontierEvent
{
    Tick time = 0;
    int owner = 0;  ///< 1-based visible node id
    std::int64_t symbol_index = 0;
    std::optional<BinSet> detected;  ///< empty optional = undetectable (up/down overlap)

    bool operator==(const FrontierEvent&) const = default;
};

struct ObservationTrace
{
    LoRaParams params;
    int ticks_per_symbol = 4;
    std::vector<Tick> phases;  ///< data start tick of each visible node, ascending
    /// Symbol counts published by the explicit header, one per visible node.
    /// Absent when the length must be read from the embedded prefix.
    std::optional<std::vector<std::size_t>> lengths;
    std::vector<FrontierEvent> events;
    Tick end_time = 0;

    std::size_t node_count() const { return phases.size(); }

    bool operator==(const ObservationTrace&) const = default;
};

class DesyncError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class TraceFormatError : public std::runtime_error
{
public:
    TraceFormatError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct TraceOptions
{
    /// Let several transmissions share a start tick; they merge into one visible node.
    bool allow_same_subslot = false;
    /// Publish per-node symbol counts in the trace.
    bool publish_lengths = true;
};

/// Offsets pairwise distinct and spanning at most ticks_per_symbol - 1.
bool validate_desync(std::span<const Tick> offsets, int ticks_per_symbol);

/**
 * Receiver observation of superposed, slightly desynchronized up-chirp
 * streams. Emits one event per frontier of every visible node from its
 * first data symbol until the first tick at which nothing is on air.
 * Frontiers before the last node finishes its preamble are undetectable.
 */
ObservationTrace generate_trace(std::span<const TransmissionInstance> transmissions, const LoRaParams& params,
                                int ticks_per_symbol, const TraceOptions& options = {});

/// Line-oriented text form; read_trace(write_trace(t)) == t.
void write_trace(std::ostream& os, const ObservationTrace& trace);
std::string write_trace(const ObservationTrace& trace);
ObservationTrace read_trace(std::istream& is);
ObservationTrace read_trace(const std::string& text);

}  // namespace crlora

#endif  // CRLORA_CHANNEL_HPP
