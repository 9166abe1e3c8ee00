#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "crlora/mac_sim.hpp"

using namespace crlora;

namespace {

SimConfig small(Protocol p, int devices, double duration = 600.0)
{
    SimConfig c;
    c.protocol = p;
    c.num_devices = devices;
    c.sim_duration = duration;
    return c;
}

// Every device generates frames at fixed times and picks a fixed sub-slot.
class ScriptedWorkload : public Workload
{
public:
    ScriptedWorkload(std::vector<double> first, std::vector<int> subs = {}) : first_(first), subs_(subs) {}

    std::optional<double> first_frame(int device, Rng&) override { return first_[device]; }
    std::optional<double> next_frame(int, double, Rng&) override { return std::nullopt; }
    int subslot(int device, int sub_slots, Rng& rng) override
    {
        return subs_.empty() ? Workload::subslot(device, sub_slots, rng) : subs_[device];
    }

private:
    std::vector<double> first_;
    std::vector<int> subs_;
};

}  // namespace

TEST_CASE("a lone aloha device always succeeds with delay equal to time on air")
{
    const auto cfg = small(Protocol::aloha, 1, 3600.0);
    const auto m = run_simulation(cfg);
    const double toa = time_on_air(cfg.params, cfg.frame_payload_bytes);
    CHECK(m.frames_offered > 0);
    CHECK(m.frames_delivered == m.frames_offered);
    CHECK(m.decode_success_fraction() == 1.0);
    CHECK(m.retransmissions == 0);
    CHECK(m.mean_delay_s == doctest::Approx(toa).epsilon(1e-9));
    CHECK(m.bits_delivered == m.frames_delivered * 400);
}

TEST_CASE("overlapping aloha transmissions are both lost and retried")
{
    ScriptedWorkload w({1.0, 1.05});
    SimHooks hooks;
    hooks.workload = &w;
    const auto m = run_simulation(small(Protocol::aloha, 2), hooks);
    CHECK(m.frames_offered == 2);
    CHECK(m.first_attempt_success == 0);
    CHECK(m.lost_aloha_overlap == 2);
    CHECK(m.retransmissions == 2);
    CHECK(m.frames_delivered == 2);

    ScriptedWorkload apart({1.0, 2.0});
    hooks.workload = &apart;
    const auto ok = run_simulation(small(Protocol::aloha, 2), hooks);
    CHECK(ok.first_attempt_success == 2);
}

TEST_CASE("back-to-back aloha transmissions do not overlap")
{
    const auto cfg = small(Protocol::aloha, 2);
    const double toa = time_on_air(cfg.params, cfg.frame_payload_bytes);
    ScriptedWorkload w({1.0, 1.0 + toa});
    SimHooks hooks;
    hooks.workload = &w;
    CHECK(run_simulation(cfg, hooks).first_attempt_success == 2);
}

TEST_CASE("a lone cr-mac device succeeds and pays for beacons")
{
    const auto cr = run_simulation(small(Protocol::cr_mac, 1, 3600.0));
    const auto al = run_simulation(small(Protocol::aloha, 1, 3600.0));
    CHECK(cr.frames_offered > 0);
    CHECK(cr.frames_delivered == cr.frames_offered);
    CHECK(cr.clean == cr.frames_offered);
    CHECK(cr.retransmissions == 0);
    CHECK(cr.energy_beacon_j > 0.0);
    CHECK(cr.energy_j / cr.frames_delivered > al.energy_j / al.frames_delivered);
}

TEST_CASE("two frames in one slot on distinct sub-slots are recovered by the decoder")
{
    ScriptedWorkload w({0.0, 0.0}, {0, 2});
    SimHooks hooks;
    hooks.workload = &w;
    std::vector<std::string> outcomes;
    hooks.on_slot = [&](const SlotRecord& s) {
        outcomes.push_back(s.outcome);
        REQUIRE(s.trace);
        CHECK(s.trace->node_count() == 2);
    };
    const auto m = run_simulation(small(Protocol::cr_mac, 2), hooks);
    CHECK(outcomes == std::vector<std::string>{"decoded"});
    CHECK(m.frames_offered == 2);
    CHECK(m.first_attempt_success == 2);
    CHECK(m.resolved_by_decoder + m.resolved_by_crc == 2);
    CHECK(m.retransmissions == 0);
}

TEST_CASE("a shared sub-slot loses the whole slot")
{
    ScriptedWorkload w({0.0, 0.0, 0.0}, {1, 1, 3});
    SimHooks hooks;
    hooks.workload = &w;
    const auto m = run_simulation(small(Protocol::cr_mac, 3), hooks);
    CHECK(m.first_attempt_success == 0);
    CHECK(m.lost_same_subslot == 2);
    CHECK(m.lost_undecodable == 1);
    CHECK(m.retransmissions == 3);
    CHECK(m.frames_delivered == 3);
}

TEST_CASE("runs are deterministic per seed")
{
    for (auto p : {Protocol::aloha, Protocol::cr_mac}) {
        auto cfg = small(p, 30);
        const auto a = run_simulation(cfg);
        const auto b = run_simulation(cfg);
        CHECK(a.frames_offered == b.frames_offered);
        CHECK(a.first_attempt_success == b.first_attempt_success);
        CHECK(a.energy_j == b.energy_j);
        CHECK(a.delay_sum_s == b.delay_sum_s);
        cfg.seed = 7;
        CHECK(run_simulation(cfg).delay_sum_s != a.delay_sum_s);
    }
}

TEST_CASE("energy splits into transmissions and beacon listening")
{
    for (auto p : {Protocol::aloha, Protocol::cr_mac}) {
        const auto cfg = small(p, 20);
        const auto m = run_simulation(cfg);
        const double toa = time_on_air(cfg.params, cfg.frame_payload_bytes);
        const double attempts = static_cast<double>(m.frames_offered + m.retransmissions);
        CHECK(m.energy_tx_j == doctest::Approx(cfg.tx_power_w * toa * attempts));
        CHECK(m.energy_j == doctest::Approx(m.energy_tx_j + m.energy_beacon_j));
        if (p == Protocol::aloha) {
            CHECK(m.energy_beacon_j == 0.0);
        } else {
            const double beacon = time_on_air(cfg.params, cfg.beacon_payload_bytes);
            CHECK(m.energy_beacon_j ==
                  doctest::Approx(cfg.rx_power_w * beacon * static_cast<double>(m.beacons) * cfg.num_devices));
            CHECK(static_cast<double>(m.beacons) >= cfg.sim_duration / beacon_period(cfg));
        }
    }

    auto lazy = small(Protocol::cr_mac, 20);
    lazy.beacon_listening = BeaconListening::when_pending;
    const auto l = run_simulation(lazy);
    const auto a = run_simulation(small(Protocol::cr_mac, 20));
    CHECK(l.energy_beacon_j < a.energy_beacon_j);
    CHECK(l.energy_tx_j == a.energy_tx_j);
}

TEST_CASE("devices respect the duty cycle")
{
    for (auto p : {Protocol::aloha, Protocol::cr_mac}) {
        auto cfg = small(p, 40, 1800.0);
        std::map<int, std::vector<TxRecord>> per_device;
        SimHooks hooks;
        hooks.on_transmission = [&](const TxRecord& r) { per_device[r.device].push_back(r); };
        run_simulation(cfg, hooks);
        const double toa = time_on_air(cfg.params, cfg.frame_payload_bytes);
        for (const auto& [dev, txs] : per_device) {
            double airtime = 0.0;
            for (std::size_t k = 0; k < txs.size(); ++k) {
                const double window = txs[k].start - txs[0].start;
                CHECK(airtime <= cfg.duty_cycle * window + 1e-9);
                if (k > 0)
                    CHECK(txs[k].start - txs[k - 1].end >= toa * (1.0 / cfg.duty_cycle - 1.0) - 1e-9);
                airtime += txs[k].end - txs[k].start;
            }
        }
    }
}

TEST_CASE("delivered never exceeds offered and no first attempt starts late")
{
    for (auto p : {Protocol::aloha, Protocol::cr_mac}) {
        for (bool retry : {true, false}) {
            auto cfg = small(p, 60);
            cfg.retransmission = retry;
            double last_first = 0.0;
            SimHooks hooks;
            hooks.on_transmission = [&](const TxRecord& r) {
                if (!r.retry)
                    last_first = std::max(last_first, r.start);
            };
            const auto m = run_simulation(cfg, hooks);
            CHECK(m.frames_delivered <= m.frames_offered);
            CHECK(m.first_attempt_success <= m.frames_delivered);
            CHECK(last_first < cfg.sim_duration);
            if (retry)
                CHECK(m.frames_delivered == m.frames_offered);
            else
                CHECK(m.retransmissions == 0);
            if (p == Protocol::cr_mac) {
                CHECK(m.clean + m.resolved_by_decoder + m.resolved_by_crc == m.first_attempt_success);
                CHECK(m.first_attempt_success + m.lost_same_subslot + m.lost_undecodable == m.frames_offered);
            } else {
                CHECK(m.first_attempt_success + m.lost_aloha_overlap == m.frames_offered);
            }
        }
    }
}

TEST_CASE("energy efficiency edge cases")
{
    Metrics m;
    CHECK(compute_energy_efficiency(m) == 0.0);
    m.bits_delivered = 400;
    CHECK_THROWS_AS(compute_energy_efficiency(m), std::domain_error);
    m.energy_j = 2.0;
    CHECK(compute_energy_efficiency(m) == 200.0);
    CHECK(m.throughput_bps(0.0) == 0.0);
    CHECK(m.throughput_bps(4.0) == 100.0);

    auto cfg = small(Protocol::cr_mac, 5, 0.0);
    const auto empty = run_simulation(cfg);
    CHECK(empty.frames_offered == 0);
    CHECK(compute_energy_efficiency(empty) == 0.0);
}

TEST_CASE("configuration validation")
{
    auto bad = [](auto mutate) {
        SimConfig c;
        mutate(c);
        CHECK_THROWS_AS(run_simulation(c), ConfigError);
    };
    bad([](SimConfig& c) { c.num_devices = 0; });
    bad([](SimConfig& c) { c.sub_slots = 3; });
    bad([](SimConfig& c) { c.duty_cycle = 0.0; });
    bad([](SimConfig& c) { c.duty_cycle = 1.5; });
    bad([](SimConfig& c) { c.sim_duration = -1.0; });
    bad([](SimConfig& c) { c.frame_payload_bytes = 0; });
    bad([](SimConfig& c) { c.params.sf = 13; });
    bad([](SimConfig& c) { c.traffic_jitter = 1.0; });
}

TEST_CASE("success falls with load and rises with sub-slots")
{
    auto rate = [](Protocol p, int devices, int subs) {
        auto cfg = small(p, devices, 1800.0);
        cfg.sub_slots = subs;
        return run_simulation(cfg).decode_success_fraction();
    };
    CHECK(rate(Protocol::cr_mac, 20, 4) > rate(Protocol::cr_mac, 150, 4));
    CHECK(rate(Protocol::aloha, 20, 4) > rate(Protocol::aloha, 150, 4));
    CHECK(rate(Protocol::cr_mac, 100, 2) < rate(Protocol::cr_mac, 100, 8));
    CHECK(rate(Protocol::cr_mac, 100, 4) > rate(Protocol::aloha, 100, 4));
}

TEST_CASE("slot timing")
{
    SimConfig c;
    const double toa = time_on_air(c.params, c.frame_payload_bytes);
    CHECK(slot_duration(c) == doctest::Approx(toa + 1.024e-3));
    CHECK(beacon_period(c) == doctest::Approx(time_on_air(c.params, 10) + 100 * slot_duration(c)));
}
