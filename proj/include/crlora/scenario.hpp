#ifndef CRLORA_SCENARIO_HPP
#define CRLORA_SCENARIO_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "crlora/analysis.hpp"
#include "crlora/mac_sim.hpp"

namespace crlora {

class ScenarioError : public ConfigError
{
public:
    ScenarioError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct Sweep
{
    std::string key;
    std::vector<std::string> values;

    bool operator==(const Sweep&) const = default;
};

/**
 * Flat `key = value` scenario. Settings are kept as written; sweeps expand
 * as a cartesian product, first sweep outermost, replications innermost.
 */
struct Scenario
{
    std::vector<std::pair<std::string, std::string>> settings;
    std::vector<Sweep> sweeps;

    bool operator==(const Scenario&) const = default;

    const std::string* get(const std::string& key) const;
    void set(const std::string& key, const std::string& value);
    void sweep(const std::string& key, std::vector<std::string> values);
};

/// Keys accepted in a scenario file, in serialization order.
const std::vector<std::string>& scenario_keys();

Scenario parse_scenario(std::istream& is);
Scenario parse_scenario(const std::string& text);
std::string serialize_scenario(const Scenario& s);

/// Preset sweep by id: 7, 8, 9, 10a, 10b, 11, 12, t5.
Scenario figure_scenario(const std::string& id);
const std::vector<std::string>& figure_ids();

struct RunSpec
{
    SimConfig config;
    int replication = 0;
};

/// Expanded runs in output order. ALOHA points ignore CR-MAC-only keys and
/// are emitted once. Seeds derive from the master seed and the replication.
std::vector<RunSpec> expand_scenario(const Scenario& s, std::optional<std::uint64_t> master_seed = {});

struct RunResult
{
    RunSpec spec;
    Metrics metrics;
    std::string trace_log;
};

/// Runs every spec on @p jobs workers; results come back in spec order.
std::vector<RunResult> run_all(const std::vector<RunSpec>& specs, unsigned jobs, bool keep_traces = false);

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const RunResult& r);
void write_csv(std::ostream& os, const std::vector<RunResult>& results);

RunRecord to_record(const RunResult& r);

}  // namespace crlora

#endif  // CRLORA_SCENARIO_HPP
