#include "crlora/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <thread>

namespace crlora {

double p_distinct(int n, int s)
{
    if (n < 1 || s < 1)
        throw std::invalid_argument("p_distinct needs n >= 1 and s >= 1");
    if (n > s)
        return 0.0;
    // s!/((s-n)! s^n) as a running product of (s-i)/s.
    double p = 1.0;
    for (int i = 0; i < n; ++i)
        p *= static_cast<double>(s - i) / s;
    return p;
}

std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index)
{
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double p_distinct_mc(int n, int s, std::uint64_t trials, std::uint64_t seed, unsigned threads)
{
    if (n < 1 || s < 1 || trials < 1)
        throw std::invalid_argument("p_distinct_mc needs n, s, trials >= 1");
    if (n > s)
        return 0.0;

    // Fixed shard layout so the estimate does not depend on the thread count.
    constexpr std::uint64_t shards = 16;
    std::vector<std::uint64_t> hits(shards, 0);
    auto work = [&](std::uint64_t shard) {
        std::mt19937_64 rng(mix_seed(seed, shard));
        std::uniform_int_distribution<int> pick(0, s - 1);
        const std::uint64_t count = trials / shards + (shard < trials % shards ? 1 : 0);
        std::vector<char> used(static_cast<std::size_t>(s));
        std::uint64_t ok = 0;
        for (std::uint64_t t = 0; t < count; ++t) {
            std::fill(used.begin(), used.end(), 0);
            bool distinct = true;
            for (int i = 0; i < n; ++i) {
                auto k = pick(rng);
                if (used[k]) {
                    distinct = false;
                    break;
                }
                used[k] = 1;
            }
            ok += distinct;
        }
        hits[shard] = ok;
    };

    threads = std::max(1u, threads);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            for (std::uint64_t shard = w; shard < shards; shard += threads)
                work(shard);
        });
    }
    for (auto& t : pool)
        t.join();

    std::uint64_t total = 0;
    for (auto h : hits)
        total += h;
    return static_cast<double>(total) / static_cast<double>(trials);
}

double round_half_up(double v, int decimals)
{
    const double scale = std::pow(10.0, decimals);
    return std::floor(v * scale + 0.5) / scale;
}

std::vector<ProbabilityCell> probability_table(int n_min, int n_max, const std::vector<int>& sub_slots)
{
    std::vector<ProbabilityCell> cells;
    for (int n = n_min; n <= n_max; ++n) {
        for (int s : sub_slots)
            cells.push_back({n, s, p_distinct(n, s)});
    }
    return cells;
}

const std::string* RunRecord::config_value(const std::string& key) const
{
    for (const auto& [k, v] : config) {
        if (k == key)
            return &v;
    }
    return nullptr;
}

std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& runs, const std::vector<std::string>& group_by)
{
    using Key = std::vector<std::string>;
    std::vector<Key> order;
    std::map<Key, std::vector<const RunRecord*>> groups;
    for (const auto& r : runs) {
        Key key;
        bool complete = true;
        for (const auto& g : group_by) {
            const auto* v = r.config_value(g);
            if (!v) {
                complete = false;
                break;
            }
            key.push_back(*v);
        }
        if (!complete)
            continue;
        auto [it, fresh] = groups.try_emplace(key);
        if (fresh)
            order.push_back(key);
        it->second.push_back(&r);
    }

    std::vector<SummaryRow> out;
    for (const auto& key : order) {
        const auto& members = groups[key];
        SummaryRow row;
        for (std::size_t i = 0; i < group_by.size(); ++i)
            row.group.emplace_back(group_by[i], key[i]);
        row.runs = members.size();
        for (const auto& [name, unused] : members.front()->metrics) {
            std::vector<double> xs;
            for (const auto* m : members) {
                for (const auto& [n2, v] : m->metrics) {
                    if (n2 == name) {
                        xs.push_back(v);
                        break;
                    }
                }
            }
            double mean = 0.0;
            for (auto x : xs)
                mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (auto x : xs)
                var += (x - mean) * (x - mean);
            const double sd = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
            row.metrics.push_back({name, mean, sd});
        }
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace crlora
