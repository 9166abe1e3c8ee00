#include "crlora/mac_sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <tuple>

#include "crlora/crc.hpp"
#include "crlora/decoder.hpp"

namespace crlora {

std::string to_string(Protocol p)
{
    return p == Protocol::aloha ? "aloha" : "cr_mac";
}

std::string to_string(BeaconListening b)
{
    return b == BeaconListening::always ? "always" : "when_pending";
}

void SimConfig::validate() const
{
    try {
        params.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (num_devices < 1)
        throw ConfigError("num_devices must be >= 1");
    if (frame_payload_bytes < 1 || frame_payload_bytes > 255)
        throw ConfigError("frame_payload_bytes must be in [1, 255]");
    if (sub_slots < 1 || (1 << params.sf) % sub_slots != 0)
        throw ConfigError("sub_slots must divide 2^sf");
    if (slots_per_beacon < 1)
        throw ConfigError("slots_per_beacon must be >= 1");
    if (beacon_payload_bytes < 1 || beacon_payload_bytes > 255)
        throw ConfigError("beacon_payload_bytes must be in [1, 255]");
    if (!(duty_cycle > 0.0 && duty_cycle <= 1.0))
        throw ConfigError("duty_cycle must be in (0, 1]");
    if (!(sim_duration >= 0.0) || !std::isfinite(sim_duration))
        throw ConfigError("sim_duration must be >= 0");
    if (!(tx_power_w >= 0.0) || !(rx_power_w >= 0.0))
        throw ConfigError("power draws must be >= 0");
    if (!(traffic_jitter >= 0.0 && traffic_jitter < 1.0))
        throw ConfigError("traffic_jitter must be in [0, 1)");
}

double Metrics::decode_success_fraction() const
{
    return frames_offered ? static_cast<double>(first_attempt_success) / static_cast<double>(frames_offered) : 0.0;
}

double Metrics::throughput_bps(double duration) const
{
    return duration > 0.0 ? static_cast<double>(bits_delivered) / duration : 0.0;
}

double compute_energy_efficiency(const Metrics& m)
{
    if (m.bits_delivered == 0)
        return 0.0;
    if (!(m.energy_j > 0.0))
        throw std::domain_error("energy efficiency undefined: frames delivered with zero energy");
    return static_cast<double>(m.bits_delivered) / m.energy_j;
}

int Workload::subslot(int, int sub_slots, Rng& rng)
{
    return std::uniform_int_distribution<int>(0, sub_slots - 1)(rng);
}

SaturatedWorkload::SaturatedWorkload(double mean_interval, double jitter) : mean_(mean_interval), jitter_(jitter) {}

std::optional<double> SaturatedWorkload::first_frame(int, Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, mean_)(rng);
}

std::optional<double> SaturatedWorkload::next_frame(int, double completed, Rng& rng)
{
    return completed + mean_ * std::uniform_real_distribution<double>(1.0 - jitter_, 1.0 + jitter_)(rng);
}

double slot_duration(const SimConfig& cfg)
{
    return time_on_air(cfg.params, cfg.frame_payload_bytes) + symbol_duration(cfg.params);
}

double beacon_period(const SimConfig& cfg)
{
    return time_on_air(cfg.params, cfg.beacon_payload_bytes) + cfg.slots_per_beacon * slot_duration(cfg);
}

namespace {

struct Device
{
    double generated = 0.0;
    double next_allowed = 0.0;
    bool retry = false;
    bool collided = false;
    double tx_end = 0.0;
    FrameSpec frame;
    std::vector<Symbol> symbols;
};

class Engine
{
public:
    Engine(const SimConfig& cfg, const SimHooks& hooks)
        : cfg_(cfg), hooks_(hooks), rng_(cfg.seed), toa_(time_on_air(cfg.params, cfg.frame_payload_bytes)),
          devices_(static_cast<std::size_t>(cfg.num_devices))
    {
        cfg_.validate();
        if (hooks_.workload) {
            workload_ = hooks_.workload;
        } else {
            owned_ = std::make_unique<SaturatedWorkload>(toa_ / cfg.duty_cycle, cfg.traffic_jitter);
            workload_ = owned_.get();
        }
    }

    double off_time() const { return toa_ * (1.0 / cfg_.duty_cycle - 1.0); }

    void transmit_energy() { m_.energy_tx_j += cfg_.tx_power_w * toa_; }

    void deliver(int d, double at)
    {
        ++m_.frames_delivered;
        m_.bits_delivered += 8ull * static_cast<std::uint64_t>(cfg_.frame_payload_bytes);
        m_.delay_sum_s += at - devices_[d].generated;
    }

    void finish(double last_event)
    {
        m_.elapsed_s = last_event;
        m_.energy_j = m_.energy_tx_j + m_.energy_beacon_j;
        m_.mean_delay_s = m_.frames_delivered ? m_.delay_sum_s / static_cast<double>(m_.frames_delivered) : 0.0;
    }

    void draw_frame(Device& dev)
    {
        std::uniform_int_distribution<int> byte(0, 255);
        std::vector<std::uint8_t> payload(static_cast<std::size_t>(cfg_.frame_payload_bytes));
        while (true) {
            for (auto& b : payload)
                b = static_cast<std::uint8_t>(byte(rng_));
            dev.frame = FrameSpec::make(payload);
            try {
                dev.symbols = frame_to_symbols(dev.frame, cfg_.params);
                return;
            } catch (const FrameError&) {
            }
        }
    }

    SimConfig cfg_;
    const SimHooks& hooks_;
    Rng rng_;
    double toa_;
    std::vector<Device> devices_;
    Workload* workload_ = nullptr;
    std::unique_ptr<Workload> owned_;
    Metrics m_;
};

}  // namespace

Metrics run_aloha(const SimConfig& cfg, const SimHooks& hooks)
{
    Engine e(cfg, hooks);
    enum Kind { tx_end = 0, tx_start = 1 };
    using Event = std::tuple<double, int, int>;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
    std::vector<int> on_air;

    auto schedule_frame = [&](int d, std::optional<double> generated) {
        if (!generated)
            return;
        auto& dev = e.devices_[d];
        dev.generated = *generated;
        dev.retry = false;
        const double start = std::max(*generated, dev.next_allowed);
        if (start < cfg.sim_duration)
            queue.emplace(start, d, tx_start);
    };

    for (int d = 0; d < cfg.num_devices; ++d)
        schedule_frame(d, e.workload_->first_frame(d, e.rng_));

    double now = 0.0;
    while (!queue.empty()) {
        auto [t, d, kind] = queue.top();
        queue.pop();
        now = t;
        auto& dev = e.devices_[d];
        if (kind == tx_start) {
            std::erase_if(on_air, [&](int o) { return e.devices_[o].tx_end <= t; });
            dev.collided = !on_air.empty();
            for (int o : on_air)
                e.devices_[o].collided = true;
            on_air.push_back(d);
            dev.tx_end = t + e.toa_;
            e.transmit_energy();
            if (!dev.retry)
                ++e.m_.frames_offered;
            if (hooks.on_transmission)
                hooks.on_transmission({d, t, dev.tx_end, dev.retry});
            queue.emplace(dev.tx_end, d, tx_end);
            continue;
        }

        dev.next_allowed = t + e.off_time();
        if (dev.retry) {
            e.deliver(d, t);
        } else if (!dev.collided) {
            ++e.m_.first_attempt_success;
            ++e.m_.clean;
            e.deliver(d, t);
        } else {
            ++e.m_.lost_aloha_overlap;
            if (cfg.retransmission) {
                ++e.m_.retransmissions;
                dev.retry = true;
                queue.emplace(dev.next_allowed, d, tx_start);
                continue;
            }
        }
        schedule_frame(d, e.workload_->next_frame(d, t, e.rng_));
    }
    e.finish(now);
    return e.m_;
}

Metrics run_cr_mac(const SimConfig& cfg, const SimHooks& hooks)
{
    Engine e(cfg, hooks);
    const double beacon_toa = time_on_air(cfg.params, cfg.beacon_payload_bytes);
    const double slot = slot_duration(cfg);
    const double period = beacon_period(cfg);
    const double tick = symbol_duration(cfg.params) / cfg.sub_slots;
    const std::int64_t per_beacon = cfg.slots_per_beacon;

    auto slot_start = [&](std::int64_t idx) {
        return static_cast<double>(idx / per_beacon) * period + beacon_toa +
               static_cast<double>(idx % per_beacon) * slot;
    };
    auto slot_at_or_after = [&](double t) {
        const auto k = static_cast<std::int64_t>(std::floor(t / period));
        const double within = t - static_cast<double>(k) * period;
        std::int64_t j = 0;
        if (within > beacon_toa)
            j = static_cast<std::int64_t>(std::ceil((within - beacon_toa) / slot));
        std::int64_t idx = k * per_beacon + std::min(j, per_beacon);
        while (idx > 0 && slot_start(idx - 1) >= t)
            --idx;
        while (slot_start(idx) < t)
            ++idx;
        return idx;
    };

    struct Pending
    {
        int device;
        int sub;
        bool retry;
    };
    std::map<std::int64_t, std::vector<Pending>> slots;
    std::vector<std::set<std::int64_t>> listened(static_cast<std::size_t>(cfg.num_devices));

    auto enqueue = [&](int d, double ready, bool retry) {
        const auto idx = slot_at_or_after(ready);
        if (!retry && slot_start(idx) >= cfg.sim_duration)
            return;
        slots[idx].push_back({d, e.workload_->subslot(d, cfg.sub_slots, e.rng_), retry});
    };
    auto schedule_frame = [&](int d, std::optional<double> generated, double now) {
        if (!generated)
            return;
        auto& dev = e.devices_[d];
        dev.generated = *generated;
        dev.retry = false;
        e.draw_frame(dev);
        enqueue(d, std::max({*generated, dev.next_allowed, now}), false);
    };

    for (int d = 0; d < cfg.num_devices; ++d)
        schedule_frame(d, e.workload_->first_frame(d, e.rng_), 0.0);

    double now = 0.0;
    while (!slots.empty()) {
        auto node = slots.extract(slots.begin());
        const std::int64_t idx = node.key();
        const auto& txs = node.mapped();
        const double start = slot_start(idx);
        now = start + slot;

        std::vector<TransmissionInstance> instances;
        std::map<int, int> per_sub;
        for (const auto& p : txs) {
            auto& dev = e.devices_[p.device];
            dev.tx_end = start + p.sub * tick + e.toa_;
            e.transmit_energy();
            listened[p.device].insert(idx / per_beacon);
            if (!p.retry)
                ++e.m_.frames_offered;
            if (hooks.on_transmission)
                hooks.on_transmission({p.device, start + p.sub * tick, dev.tx_end, p.retry});
            instances.push_back({p.sub, dev.symbols});
            ++per_sub[p.sub];
        }

        TraceOptions opts;
        opts.allow_same_subslot = true;
        opts.publish_lengths = cfg.params.explicit_header;
        const auto trace = generate_trace(instances, cfg.params, cfg.sub_slots, opts);
        std::optional<std::vector<DecodedFrame>> decoded;
        std::string failure;
        try {
            if (detect_same_subslot(trace))
                throw DecodeError(DecodeError::Code::same_subslot_collision, "same sub-slot collision");
            decoded = decode_many(trace, trace.node_count());
        } catch (const DecodeError& err) {
            failure = err.what();
        }
        if (hooks.on_slot)
            hooks.on_slot({idx, start, &trace, decoded ? "decoded" : failure});

        CrcConfig crc_cfg;
        crc_cfg.max_attempts = cfg.crc_cap;
        for (const auto& p : txs) {
            auto& dev = e.devices_[p.device];
            bool ok = false;
            if (p.retry) {
                ok = true;
            } else if (per_sub[p.sub] > 1) {
                ++e.m_.lost_same_subslot;
            } else if (!decoded) {
                ++e.m_.lost_undecodable;
            } else {
                const auto v = static_cast<std::size_t>(
                    std::lower_bound(trace.phases.begin(), trace.phases.end(), Tick{p.sub}) - trace.phases.begin());
                const auto& frame = (*decoded)[v];
                if (auto values = frame.values()) {
                    try {
                        std::span<const Symbol> view(*values);
                        const auto need = frame_symbol_count(read_length_prefix(view, cfg.params), cfg.params);
                        if (need <= view.size())
                            view = view.first(need);
                        ok = symbols_to_frame(view, cfg.params) == dev.frame;
                    } catch (const FrameError&) {
                    }
                    if (ok) {
                        ++(txs.size() == 1 ? e.m_.clean : e.m_.resolved_by_decoder);
                    } else {
                        ++e.m_.lost_undecodable;
                    }
                } else {
                    const auto res = disambiguate(frame, crc_cfg, cfg.params);
                    e.m_.crc_attempts += attempts_used(res);
                    const auto* r = std::get_if<outcome::Resolved>(&res);
                    ok = r && r->frame == dev.frame;
                    ++(ok ? e.m_.resolved_by_crc : e.m_.lost_undecodable);
                }
                if (ok)
                    ++e.m_.first_attempt_success;
            }

            dev.next_allowed = dev.tx_end + e.off_time();
            if (ok) {
                e.deliver(p.device, dev.tx_end);
            } else if (cfg.retransmission) {
                ++e.m_.retransmissions;
                dev.retry = true;
                enqueue(p.device, std::max(dev.next_allowed, now), true);
                continue;
            }
            schedule_frame(p.device, e.workload_->next_frame(p.device, dev.tx_end, e.rng_), now);
        }
    }

    const double run_end = std::max(cfg.sim_duration, now);
    const auto beacons = run_end > 0.0 ? static_cast<std::uint64_t>(std::ceil(run_end / period)) : 0;
    e.m_.beacons = beacons;
    const double per_beacon_j = cfg.rx_power_w * beacon_toa;
    if (cfg.beacon_listening == BeaconListening::always) {
        e.m_.energy_beacon_j = per_beacon_j * static_cast<double>(beacons) * cfg.num_devices;
    } else {
        for (const auto& periods : listened)
            e.m_.energy_beacon_j += per_beacon_j * static_cast<double>(periods.size());
    }
    e.finish(now);
    return e.m_;
}

Metrics run_simulation(const SimConfig& cfg, const SimHooks& hooks)
{
    return cfg.protocol == Protocol::aloha ? run_aloha(cfg, hooks) : run_cr_mac(cfg, hooks);
}

}  // namespace crlora
