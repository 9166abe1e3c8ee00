#include "crlora/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

#include "crlora/analysis.hpp"
#include "crlora/channel.hpp"
#include "crlora/crc.hpp"
#include "crlora/decoder.hpp"

namespace crlora {

double CrcBenchRow::attempts_per_frame() const
{
    return frames ? static_cast<double>(crc_attempts) / static_cast<double>(frames) : 0.0;
}

double CrcBenchRow::fraction_without_crc() const
{
    return frames ? static_cast<double>(decoded_without_crc) / static_cast<double>(frames) : 0.0;
}

double CrcBenchRow::fraction_with_crc() const
{
    return frames ? static_cast<double>(decoded_with_crc) / static_cast<double>(frames) : 0.0;
}

CrcBenchRow crc_bench_point(const CrcBenchConfig& cfg, int colliding)
{
    if (colliding < 1 || colliding > cfg.sub_slots)
        throw std::invalid_argument("colliding frames must be in [1, sub_slots]");
    std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(colliding)));
    std::uniform_int_distribution<int> byte(0, 255);
    CrcConfig crc_cfg;
    crc_cfg.max_attempts = cfg.cap;
    TraceOptions opts;
    opts.publish_lengths = cfg.params.explicit_header;

    CrcBenchRow row;
    row.colliding = colliding;
    row.cap = cfg.cap;
    row.trials = cfg.trials;

    std::vector<Tick> phases(static_cast<std::size_t>(cfg.sub_slots));
    std::iota(phases.begin(), phases.end(), Tick{0});
    for (std::uint64_t t = 0; t < cfg.trials; ++t) {
        std::shuffle(phases.begin(), phases.end(), rng);
        std::vector<FrameSpec> truth;
        std::vector<TransmissionInstance> tx;
        while (static_cast<int>(tx.size()) < colliding) {
            std::vector<std::uint8_t> payload(static_cast<std::size_t>(cfg.payload_bytes));
            for (auto& b : payload)
                b = static_cast<std::uint8_t>(byte(rng));
            auto frame = FrameSpec::make(payload);
            try {
                tx.push_back({phases[tx.size()], frame_to_symbols(frame, cfg.params)});
                truth.push_back(std::move(frame));
            } catch (const FrameError&) {
            }
        }
        const auto trace = generate_trace(tx, cfg.params, cfg.sub_slots, opts);
        const auto decoded = decode_many(trace, trace.node_count());
        for (std::size_t i = 0; i < tx.size(); ++i) {
            const auto v = static_cast<std::size_t>(
                std::lower_bound(trace.phases.begin(), trace.phases.end(), tx[i].start_offset) - trace.phases.begin());
            const auto& frame = decoded[v];
            ++row.frames;
            if (auto values = frame.values()) {
                bool ok = false;
                try {
                    ok = symbols_to_frame(*values, cfg.params) == truth[i];
                } catch (const FrameError&) {
                }
                row.decoded_without_crc += ok;
                row.decoded_with_crc += ok;
                continue;
            }
            const auto res = disambiguate(frame, crc_cfg, cfg.params);
            row.crc_attempts += attempts_used(res);
            const auto* r = std::get_if<outcome::Resolved>(&res);
            row.decoded_with_crc += (r && r->frame == truth[i]);
        }
    }
    return row;
}

std::vector<CrcBenchRow> crc_bench(const CrcBenchConfig& cfg)
{
    std::vector<CrcBenchRow> rows;
    for (int n = 1; n <= cfg.max_colliding; ++n)
        rows.push_back(crc_bench_point(cfg, n));
    return rows;
}

void write_crc_bench_csv(std::ostream& os, const std::vector<CrcBenchRow>& rows)
{
    os << "colliding,cap,trials,frames,crc_attempts,attempts_per_frame,decoded_without_crc,decoded_with_crc,"
          "fraction_without_crc,fraction_with_crc\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%llu,%llu,%llu,%llu,%.6f,%llu,%llu,%.6f,%.6f\n", r.colliding,
                      static_cast<unsigned long long>(r.cap), static_cast<unsigned long long>(r.trials),
                      static_cast<unsigned long long>(r.frames), static_cast<unsigned long long>(r.crc_attempts),
                      r.attempts_per_frame(), static_cast<unsigned long long>(r.decoded_without_crc),
                      static_cast<unsigned long long>(r.decoded_with_crc), r.fraction_without_crc(),
                      r.fraction_with_crc());
        os << buf;
    }
}

}  // namespace crlora
