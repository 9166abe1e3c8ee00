#ifndef CRLORA_BENCH_HPP
#define CRLORA_BENCH_HPP

#include <cstdint>
#include <ostream>
#include <vector>

#include "crlora/chirp.hpp"

namespace crlora {

struct CrcBenchConfig
{
    LoRaParams params = LoRaParams::preset(7);
    int payload_bytes = 50;
    int sub_slots = 8;
    std::uint64_t cap = 4;
    std::uint64_t trials = 1000;
    int max_colliding = 8;
    std::uint64_t seed = 42;
};

/// Outcome of forcing n desynchronized frames into one slot, over many trials.
struct CrcBenchRow
{
    int colliding = 0;
    std::uint64_t cap = 0;
    std::uint64_t trials = 0;
    std::uint64_t frames = 0;
    std::uint64_t decoded_without_crc = 0;
    std::uint64_t decoded_with_crc = 0;
    std::uint64_t crc_attempts = 0;

    double attempts_per_frame() const;
    double fraction_without_crc() const;
    double fraction_with_crc() const;
};

CrcBenchRow crc_bench_point(const CrcBenchConfig& cfg, int colliding);
std::vector<CrcBenchRow> crc_bench(const CrcBenchConfig& cfg);
void write_crc_bench_csv(std::ostream& os, const std::vector<CrcBenchRow>& rows);

}  // namespace crlora

#endif  // CRLORA_BENCH_HPP
