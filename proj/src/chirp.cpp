#include "crlora/chirp.hpp"

#include <algorithm>
#include <cmath>

#include "crlora/crc.hpp"

namespace crlora {

namespace {

class BitWriter
{
public:
    explicit BitWriter(int width) : width_(width) {}

    void push_byte(std::uint8_t b)
    {
        for (int i = 7; i >= 0; --i) {
            push_bit((b >> i) & 1u);
        }
    }

    std::vector<Symbol> finish()
    {
        if (filled_ > 0) {
            out_.push_back(static_cast<Symbol>(acc_ << (width_ - filled_)));
            acc_ = 0;
            filled_ = 0;
        }
        return std::move(out_);
    }

private:
    void push_bit(unsigned bit)
    {
        acc_ = (acc_ << 1) | bit;
        if (++filled_ == width_) {
            out_.push_back(static_cast<Symbol>(acc_));
            acc_ = 0;
            filled_ = 0;
        }
    }

    int width_;
    unsigned acc_ = 0;
    int filled_ = 0;
    std::vector<Symbol> out_;
};

class BitReader
{
public:
    BitReader(std::span<const Symbol> symbols, int width) : symbols_(symbols), width_(width) {}

    bool rest_is_zero() const
    {
        for (std::size_t p = pos_; p < symbols_.size() * width_; ++p) {
            int bit = width_ - 1 - static_cast<int>(p % width_);
            if ((symbols_[p / width_] >> bit) & 1u)
                return false;
        }
        return true;
    }

    std::uint8_t read_byte()
    {
        unsigned b = 0;
        for (int i = 0; i < 8; ++i) {
            std::size_t sym = pos_ / width_;
            int bit = width_ - 1 - static_cast<int>(pos_ % width_);
            b = (b << 1) | ((symbols_[sym] >> bit) & 1u);
            ++pos_;
        }
        return static_cast<std::uint8_t>(b);
    }

private:
    std::span<const Symbol> symbols_;
    int width_;
    std::size_t pos_ = 0;
};

std::size_t frame_bytes(std::size_t payload_bytes, const LoRaParams& params)
{
    return 1 + payload_bytes + (params.payload_crc ? 2 : 0);
}

}  // namespace

LoRaParams LoRaParams::preset(int sf, double bw)
{
    LoRaParams p;
    p.sf = sf;
    p.bw = bw;
    p.low_dr_optimize = sf >= 11 && bw <= 125000.0;
    return p;
}

void LoRaParams::validate() const
{
    if (sf < 3 || sf > 12)
        throw std::invalid_argument("sf must be in [3, 12], got " + std::to_string(sf));
    if (!(bw > 0.0))
        throw std::invalid_argument("bandwidth must be positive");
    if (cr < 1 || cr > 4)
        throw std::invalid_argument("coding rate index must be in [1, 4], got " + std::to_string(cr));
    if (preamble_symbols < 0)
        throw std::invalid_argument("preamble length must be non-negative");
}

double symbol_duration(const LoRaParams& params)
{
    return static_cast<double>(params.alphabet()) / params.bw;
}

Symbol instantaneous_frequency(Symbol value, double elapsed, const LoRaParams& params)
{
    if (!(elapsed >= 0.0 && elapsed < 1.0))
        throw std::invalid_argument("elapsed fraction must lie in [0, 1)");
    const std::uint32_t m = params.alphabet();
    auto shift = static_cast<std::uint32_t>(std::floor(elapsed * m));
    return static_cast<Symbol>((value + shift) % m);
}

std::uint32_t bins_per_tick(int ticks_per_symbol, int sf)
{
    const std::uint32_t m = 1u << sf;
    if (ticks_per_symbol < 1 || m % static_cast<std::uint32_t>(ticks_per_symbol) != 0)
        throw std::invalid_argument("ticks per symbol must divide 2^sf");
    return m / static_cast<std::uint32_t>(ticks_per_symbol);
}

Symbol advance_bin(Symbol bin, Tick ticks, int ticks_per_symbol, int sf)
{
    const std::int64_t m = std::int64_t{1} << sf;
    const std::int64_t step = bins_per_tick(ticks_per_symbol, sf);
    std::int64_t v = (bin + (ticks % m) * step) % m;
    if (v < 0)
        v += m;
    return static_cast<Symbol>(v);
}

int payload_symbol_count(const LoRaParams& params, int payload_bytes)
{
    const int h = params.explicit_header ? 0 : 1;
    const int de = params.low_dr_optimize ? 1 : 0;
    const int crc = params.payload_crc ? 1 : 0;
    const int num = 8 * payload_bytes - 4 * params.sf + 28 + 16 * crc - 20 * h;
    const int den = 4 * (params.sf - 2 * de);
    int blocks = 0;
    if (num > 0)
        blocks = (num + den - 1) / den;
    return 8 + blocks * (params.cr + 4);
}

double time_on_air(const LoRaParams& params, int payload_bytes)
{
    const double sd = symbol_duration(params);
    const double preamble = (params.preamble_symbols + 4.25) * sd;
    return preamble + payload_symbol_count(params, payload_bytes) * sd;
}

FrameSpec FrameSpec::make(std::vector<std::uint8_t> payload)
{
    if (payload.empty() || payload.size() > 255)
        throw FrameError("payload must hold 1..255 bytes");
    FrameSpec f;
    f.declared_length = static_cast<std::uint8_t>(payload.size());
    f.payload = std::move(payload);
    std::vector<std::uint8_t> covered;
    covered.reserve(f.payload.size() + 1);
    covered.push_back(f.declared_length);
    covered.insert(covered.end(), f.payload.begin(), f.payload.end());
    f.crc16 = crlora::crc16(covered);
    return f;
}

bool FrameSpec::crc_valid() const
{
    if (declared_length != payload.size())
        return false;
    std::vector<std::uint8_t> covered;
    covered.reserve(payload.size() + 1);
    covered.push_back(declared_length);
    covered.insert(covered.end(), payload.begin(), payload.end());
    return crlora::crc16(covered) == crc16;
}

std::size_t frame_symbol_count(std::size_t payload_bytes, const LoRaParams& params)
{
    const std::size_t bits = 8 * frame_bytes(payload_bytes, params);
    return (bits + params.sf - 1) / params.sf;
}

std::size_t length_prefix_symbols(const LoRaParams& params)
{
    return (8 + params.sf - 1) / params.sf;
}

std::uint8_t read_length_prefix(std::span<const Symbol> leading, const LoRaParams& params)
{
    if (leading.size() < length_prefix_symbols(params))
        throw FrameError("not enough symbols for the length prefix");
    BitReader r(leading, params.sf);
    return r.read_byte();
}

std::vector<Symbol> frame_to_symbols(const FrameSpec& frame, const LoRaParams& params)
{
    if (frame.payload.empty() || frame.declared_length != frame.payload.size())
        throw FrameError("declared length does not match payload");
    BitWriter w(params.sf);
    w.push_byte(frame.declared_length);
    for (auto b : frame.payload)
        w.push_byte(b);
    if (params.payload_crc) {
        w.push_byte(static_cast<std::uint8_t>(frame.crc16 >> 8));
        w.push_byte(static_cast<std::uint8_t>(frame.crc16 & 0xff));
    }
    auto symbols = w.finish();
    if (!has_symbol_change(symbols))
        throw FrameError("frame serializes to a constant symbol sequence");
    return symbols;
}

FrameSpec symbols_to_frame(std::span<const Symbol> symbols, const LoRaParams& params)
{
    const std::uint32_t m = params.alphabet();
    for (auto s : symbols) {
        if (s >= m)
            throw FrameError("symbol value out of range");
    }
    const std::uint8_t len = read_length_prefix(symbols, params);
    if (len == 0)
        throw FrameError("zero length prefix");
    if (symbols.size() != frame_symbol_count(len, params))
        throw FrameError("symbol count " + std::to_string(symbols.size()) + " does not match length prefix " +
                         std::to_string(len));

    BitReader r(symbols, params.sf);
    FrameSpec f;
    f.declared_length = r.read_byte();
    f.payload.reserve(len);
    for (int i = 0; i < len; ++i)
        f.payload.push_back(r.read_byte());
    if (params.payload_crc) {
        std::uint16_t hi = r.read_byte();
        std::uint16_t lo = r.read_byte();
        f.crc16 = static_cast<std::uint16_t>((hi << 8) | lo);
    } else {
        f.crc16 = FrameSpec::make(f.payload).crc16;
    }
    if (!r.rest_is_zero())
        throw FrameError("nonzero padding bits");
    return f;
}

bool has_symbol_change(std::span<const Symbol> symbols)
{
    return std::adjacent_find(symbols.begin(), symbols.end(), std::not_equal_to<>()) != symbols.end();
}

}  // namespace crlora
