#ifndef CRLORA_DECODER_HPP
#define CRLORA_DECODER_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "crlora/channel.hpp"

namespace crlora {

/// A decoded position: a known value, a pending repeat (*), or a candidate set.
class DecodedSymbol
{
public:
    enum class Kind { known, star, candidates };

    static DecodedSymbol known(Symbol v);
    static DecodedSymbol star();
    /// Collapses to known() when @p set has a single element.
    static DecodedSymbol candidates(BinSet set);

    Kind kind() const { return kind_; }
    bool is_known() const { return kind_ == Kind::known; }
    Symbol value() const;
    /// Candidate values; a single element for known symbols.
    const BinSet& values() const { return values_; }

    bool operator==(const DecodedSymbol&) const = default;

private:
    Kind kind_ = Kind::star;
    BinSet values_;
};

struct DecodedFrame
{
    int node_id = 0;
    std::vector<DecodedSymbol> symbols;
    std::optional<std::size_t> truncated_length;

    bool concrete() const;
    /// Symbol values when every position is known.
    std::optional<std::vector<Symbol>> values() const;

    bool operator==(const DecodedFrame&) const = default;
};

class DecodeError : public std::runtime_error
{
public:
    enum class Code { same_subslot_collision, inconsistent_trace };

    DecodeError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

/// State after one processed frontier, for inspection and logging.
struct DecodeStep
{
    Tick time = 0;
    int owner = 0;
    std::int64_t symbol_index = 0;
    std::optional<BinSet> f_minus;  ///< absent at the initialization frontier
    BinSet f_plus;
    BinSet new_f;
    BinSet old_f;
    std::vector<DecodedSymbol> owner_symbols;  ///< owner's frame so far
};

using DecodeObserver = std::function<void(const DecodeStep&)>;

/**
 * Two-transmitter decoder. An unchanged frequency set at a frontier means
 * the owner repeated its symbol; leading repeats stay '*' until the first
 * change and are then backfilled. Output frames are fully concrete.
 *
 * Throws DecodeError(same_subslot_collision) when two frequencies appear at
 * once, DecodeError(inconsistent_trace) when the trace cannot come from two
 * desynchronized transmitters.
 */
std::array<DecodedFrame, 2> decode_two(const ObservationTrace& trace, const DecodeObserver& observer = {});

/**
 * General decoder for n transmitters. An unchanged set only implies a repeat
 * when all n frequencies are distinct; otherwise the position keeps the set
 * of frequencies it may carry, which a later frontier may narrow to a value.
 */
std::vector<DecodedFrame> decode_many(const ObservationTrace& trace, std::size_t n,
                                      const DecodeObserver& observer = {});

/// True iff some frontier shows two or more new frequencies at once.
bool detect_same_subslot(const ObservationTrace& trace);

/// "n1: 3 4 1 {5,6} {0,6}" rows, one per frame.
std::string format_frame(const DecodedFrame& frame);
std::string format_frames(const std::vector<DecodedFrame>& frames);

}  // namespace crlora

#endif  // CRLORA_DECODER_HPP
