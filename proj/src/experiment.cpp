#include "panq/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace panq {

std::vector<double> default_tau_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 18; ++i) grid.push_back(static_cast<double>(5 * i) / 100.0);
    return grid;
}

SweepResult sweep(const PreparedDataset& prepared, std::span<const double> taus,
                  const EvalConfig& cfg) {
    if (taus.empty()) throw EmptyGrid("threshold grid is empty");
    for (std::size_t i = 0; i < taus.size(); ++i) {
        if (!(taus[i] > 0.0 && taus[i] <= 1.0))
            throw EmptyGrid("threshold " + std::to_string(taus[i]) + " outside (0, 1]");
        if (i > 0 && taus[i] <= taus[i - 1])
            throw EmptyGrid("threshold grid must be strictly increasing");
    }

    SweepResult result;
    result.rows.reserve(taus.size());
    for (double tau : taus) {
        EvalConfig at = cfg;
        at.tau = tau;
        result.rows.push_back(evaluate_at(prepared, at));
    }
    result.optimal_tau = result.rows.front().tau;
    double best_pq = result.rows.front().pq;
    for (const MetricsRecord& row : result.rows) {
        if (row.pq > best_pq) {
            best_pq = row.pq;
            result.optimal_tau = row.tau;
        }
    }
    return result;
}

SweepResult sweep_dataset(std::span<const DatasetPair> pairs, std::span<const double> taus,
                          const EvalConfig& cfg, std::vector<Warning>* warnings) {
    return sweep(prepare_dataset(pairs, cfg.jobs, warnings), taus, cfg);
}

namespace {

// Fisher-Yates with rejection-sampled bounds. mt19937_64 output is fully
// specified by the standard, unlike std::shuffle, so plans reproduce across
// platforms and standard libraries.
void seeded_shuffle(std::vector<std::string>& values, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    const auto bounded = [&gen](std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = gen();
        } while (x >= limit);
        return x % n;
    };
    for (std::size_t i = values.size(); i > 1; --i)
        std::swap(values[i - 1], values[bounded(i)]);
}

}  // namespace

FoldPlan kfold_split(std::span<const SplitItem> items, int k, std::uint64_t seed) {
    if (k < 2) throw TooFewItems("fold count must be >= 2, got " + std::to_string(k));
    if (items.size() < static_cast<std::size_t>(k))
        throw TooFewItems(std::to_string(items.size()) + " items cannot fill " + std::to_string(k) +
                          " folds");

    // Ungrouped items become singleton groups; the \x01 prefix keeps them
    // from colliding with real group values.
    std::vector<std::string> group_keys;
    std::vector<std::string> key_of(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        key_of[i] = items[i].group ? *items[i].group : "\x01" + items[i].id;
        group_keys.push_back(key_of[i]);
    }
    std::sort(group_keys.begin(), group_keys.end());
    group_keys.erase(std::unique(group_keys.begin(), group_keys.end()), group_keys.end());
    if (group_keys.size() < static_cast<std::size_t>(k))
        throw TooFewItems(std::to_string(group_keys.size()) + " groups cannot fill " +
                          std::to_string(k) + " folds");

    seeded_shuffle(group_keys, seed);
    std::map<std::string, int> fold_of_group;
    for (std::size_t i = 0; i < group_keys.size(); ++i)
        fold_of_group[group_keys[i]] = static_cast<int>(i % k);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.fold_of.resize(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        plan.fold_of[i] = fold_of_group[key_of[i]];
        plan.by_id[items[i].id] = plan.fold_of[i];
    }
    return plan;
}

namespace {

Summary::Stat mean_and_std(const std::vector<double>& values) {
    Summary::Stat stat;
    stat.n = static_cast<int>(values.size());
    if (values.empty()) return stat;
    double sum = 0.0;
    for (double v : values) sum += v;
    stat.mean = sum / values.size();
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - stat.mean) * (v - stat.mean);
        stat.stddev = std::sqrt(ss / (values.size() - 1));
    }
    return stat;
}

}  // namespace

Summary aggregate(std::span<const MetricsRecord> fold_records) {
    if (fold_records.size() < 2)
        throw TooFewFolds("aggregation needs >= 2 fold records, got " +
                          std::to_string(fold_records.size()));
    const double tau = fold_records.front().tau;
    for (const MetricsRecord& r : fold_records)
        if (std::abs(r.tau - tau) > 1e-12)
            throw MixedThresholds("fold records mix thresholds " + std::to_string(tau) + " and " +
                                  std::to_string(r.tau));

    Summary summary;
    summary.tau = tau;
    summary.fold_count = static_cast<int>(fold_records.size());

    std::vector<double> rq, sq, pq, ap, dc;
    for (const MetricsRecord& r : fold_records) {
        rq.push_back(r.rq);
        pq.push_back(r.pq);
        ap.push_back(r.ap);
        dc.push_back(r.dice);
        if (r.sq) sq.push_back(*r.sq);
    }
    if (sq.size() < fold_records.size())
        summary.notices.push_back("sq undefined in " + std::to_string(fold_records.size() - sq.size()) +
                                  " of " + std::to_string(fold_records.size()) +
                                  " folds; excluded from its mean");
    summary.metrics["rq"] = mean_and_std(rq);
    summary.metrics["sq"] = mean_and_std(sq);
    summary.metrics["pq"] = mean_and_std(pq);
    summary.metrics["ap"] = mean_and_std(ap);
    summary.metrics["dice"] = mean_and_std(dc);
    return summary;
}

}  // namespace panq
