#ifndef CRLORA_ANALYSIS_HPP
#define CRLORA_ANALYSIS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace crlora {

/// Probability that n devices sharing a slot all pick distinct sub-slots out of s.
double p_distinct(int n, int s);

/// Monte-Carlo estimate of p_distinct; the result depends on the seed only.
double p_distinct_mc(int n, int s, std::uint64_t trials, std::uint64_t seed, unsigned threads = 1);

/// Rounds half-up to @p decimals places.
double round_half_up(double v, int decimals);

struct ProbabilityCell
{
    int n = 0;
    int s = 0;
    double p = 0.0;
};

/// Grid of p_distinct over n in [n_min, n_max] and the given sub-slot counts.
std::vector<ProbabilityCell> probability_table(int n_min, int n_max, const std::vector<int>& sub_slots);

/// One simulation result: configuration columns and numeric metrics.
struct RunRecord
{
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::pair<std::string, double>> metrics;

    const std::string* config_value(const std::string& key) const;
};

struct MetricSummary
{
    std::string name;
    double mean = 0.0;
    double stddev = 0.0;  ///< sample standard deviation, 0 for a single run
};

struct SummaryRow
{
    std::vector<std::pair<std::string, std::string>> group;
    std::size_t runs = 0;
    std::vector<MetricSummary> metrics;
};

/// Mean and standard deviation per group, groups in order of first appearance.
std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& runs, const std::vector<std::string>& group_by);

/// splitmix64 finalizer, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index);

}  // namespace crlora

#endif  // CRLORA_ANALYSIS_HPP
