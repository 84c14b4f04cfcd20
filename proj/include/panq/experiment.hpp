#ifndef PANQ_EXPERIMENT_HPP
#define PANQ_EXPERIMENT_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panq/metrics.hpp"

namespace panq {

/// Metric rows over an increasing IoU-threshold grid plus the PQ-optimal
/// threshold (ties resolved toward the smallest, most lenient value).
struct SweepResult {
    std::vector<MetricsRecord> rows;
    double optimal_tau = 0.0;
};

/// The standard grid: 0.05 to 0.90 in steps of 0.05 (18 values).
std::vector<double> default_tau_grid();

/// Evaluates every threshold over shared per-pair overlap tables, so the
/// pixel passes run once regardless of grid size.
SweepResult sweep(const PreparedDataset& prepared, std::span<const double> taus,
                  const EvalConfig& cfg);
SweepResult sweep_dataset(std::span<const DatasetPair> pairs, std::span<const double> taus,
                          const EvalConfig& cfg, std::vector<Warning>* warnings = nullptr);

/// One unit of a dataset for splitting. Items sharing a group value (e.g. a
/// patient id) always land in the same fold; ungrouped items are their own
/// group.
struct SplitItem {
    std::string id;
    std::optional<std::string> group;
};

struct FoldPlan {
    int k = 0;
    std::uint64_t seed = 0;
    std::vector<int> fold_of;            // parallel to the input items
    std::map<std::string, int> by_id;    // item id -> fold index
};

/// Deterministic grouped k-fold assignment: group keys are sorted, shuffled
/// by a seeded generator, and dealt round-robin, so fold sizes differ by at
/// most one group and reruns with the same seed are identical.
FoldPlan kfold_split(std::span<const SplitItem> items, int k, std::uint64_t seed);

/// Mean and sample standard deviation (n-1) of each metric across folds.
struct Summary {
    struct Stat {
        double mean = 0.0;
        double stddev = 0.0;
        int n = 0;
    };
    double tau = 0.0;
    int fold_count = 0;
    std::map<std::string, Stat> metrics;  // keys: rq, sq, pq, ap, dice
    std::vector<std::string> notices;
};

/// Requires >= 2 records at one threshold. Undefined SQ entries are excluded
/// from that metric's n with a notice.
Summary aggregate(std::span<const MetricsRecord> fold_records);

}  // namespace panq

#endif
