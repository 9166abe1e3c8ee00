#ifndef CRLORA_MAC_SIM_HPP
#define CRLORA_MAC_SIM_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "crlora/channel.hpp"
#include "crlora/chirp.hpp"

namespace crlora {

enum class Protocol { aloha, cr_mac };
enum class BeaconListening { always, when_pending };

std::string to_string(Protocol p);
std::string to_string(BeaconListening b);

class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

struct SimConfig
{
    Protocol protocol = Protocol::cr_mac;
    int num_devices = 100;
    int frame_payload_bytes = 50;
    LoRaParams params = LoRaParams::preset(7);
    int sub_slots = 4;
    int slots_per_beacon = 100;
    int beacon_payload_bytes = 10;
    double duty_cycle = 0.01;
    double sim_duration = 3600.0;  ///< seconds; no first attempt starts after it
    std::uint64_t seed = 42;
    double tx_power_w = 0.066;
    double rx_power_w = 0.0195;
    std::uint64_t crc_cap = 4;
    bool retransmission = true;
    BeaconListening beacon_listening = BeaconListening::always;
    double traffic_jitter = 0.01;  ///< intervals are uniform in mean*(1 -/+ jitter); <= duty_cycle never queues

    void validate() const;
    bool operator==(const SimConfig&) const = default;
};

struct Metrics
{
    std::uint64_t frames_offered = 0;
    std::uint64_t frames_delivered = 0;
    std::uint64_t first_attempt_success = 0;
    std::uint64_t retransmissions = 0;
    std::uint64_t bits_delivered = 0;
    double energy_tx_j = 0.0;
    double energy_beacon_j = 0.0;
    double energy_j = 0.0;
    double delay_sum_s = 0.0;
    double mean_delay_s = 0.0;
    double elapsed_s = 0.0;  ///< time of the last event

    std::uint64_t clean = 0;
    std::uint64_t resolved_by_decoder = 0;
    std::uint64_t resolved_by_crc = 0;
    std::uint64_t lost_same_subslot = 0;
    std::uint64_t lost_aloha_overlap = 0;
    std::uint64_t lost_undecodable = 0;
    std::uint64_t crc_attempts = 0;
    std::uint64_t beacons = 0;

    double decode_success_fraction() const;
    /// Delivered payload bits per second of configured duration.
    double throughput_bps(double duration) const;
};

/// Bits delivered per joule. Zero when nothing was delivered.
double compute_energy_efficiency(const Metrics& m);

using Rng = std::mt19937_64;

/// Frame arrivals and sub-slot choices of the devices.
class Workload
{
public:
    virtual ~Workload() = default;
    /// Generation time of a device's first frame, nullopt for none.
    virtual std::optional<double> first_frame(int device, Rng& rng) = 0;
    /// Generation time of the frame after one completed at @p completed.
    virtual std::optional<double> next_frame(int device, double completed, Rng& rng) = 0;
    virtual int subslot(int device, int sub_slots, Rng& rng);
};

/// Each device offers frames at its duty-cycle limit, with uniform jitter.
class SaturatedWorkload : public Workload
{
public:
    SaturatedWorkload(double mean_interval, double jitter);
    std::optional<double> first_frame(int device, Rng& rng) override;
    std::optional<double> next_frame(int device, double completed, Rng& rng) override;

private:
    double mean_;
    double jitter_;
};

struct TxRecord
{
    int device = 0;
    double start = 0.0;
    double end = 0.0;
    bool retry = false;
};

struct SlotRecord
{
    std::int64_t slot = 0;
    double start = 0.0;
    const ObservationTrace* trace = nullptr;
    std::string outcome;
};

struct SimHooks
{
    Workload* workload = nullptr;  ///< SaturatedWorkload when null
    std::function<void(const TxRecord&)> on_transmission;
    std::function<void(const SlotRecord&)> on_slot;
};

Metrics run_aloha(const SimConfig& cfg, const SimHooks& hooks = {});
Metrics run_cr_mac(const SimConfig& cfg, const SimHooks& hooks = {});
Metrics run_simulation(const SimConfig& cfg, const SimHooks& hooks = {});

/// Slot length: longest frame plus one symbol of sub-slot offsets.
double slot_duration(const SimConfig& cfg);
double beacon_period(const SimConfig& cfg);

}  // namespace crlora

#endif  // CRLORA_MAC_SIM_HPP
