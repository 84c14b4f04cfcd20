#ifndef PANQ_METRICS_HPP
#define PANQ_METRICS_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panq/core.hpp"
#include "panq/matching.hpp"

namespace panq {

struct EvalConfig {
    double tau = 0.5;
    bool class_aware = true;
    bool void_forgiveness = false;
    bool micro = false;           // pool counts across classes instead of macro averaging
    bool per_image_dice = false;  // mean of per-image Dice instead of dataset-pooled pixels
    bool exact_ap = false;        // all-points PR interpolation instead of 101-point
    int jobs = 0;                 // workers for dataset preparation; 0 = all cores

    MatchConfig match_config() const { return {tau, class_aware, void_forgiveness}; }
};

/// RQ = TP / (TP + FP/2 + FN/2), SQ = mean IoU over TPs, PQ = RQ * SQ.
/// Dataset values are unweighted means over categories with at least one
/// ground-truth instance; SQ averages only categories where it is defined
/// and is undefined when no category has a TP. PQ is 0 where TP = 0.
struct PanopticScores {
    std::map<int, ClassMetrics> per_class;
    double rq = 0.0;
    double pq = 0.0;
    std::optional<double> sq;
};
PanopticScores panoptic_quality(std::span<const MatchReport> reports, bool micro = false);
PanopticScores panoptic_quality(const MatchReport& report);

/// Confidence-ranked detection AP at one IoU threshold. Detections claim the
/// unclaimed same-category GT segment of highest IoU >= tau, in descending
/// confidence order (ties: smaller segment id). The mean is over categories
/// with at least one GT instance. Throws MissingConfidence when a scored
/// prediction lacks a confidence.
struct ApScores {
    std::map<int, double> per_class;
    double mean_ap = 0.0;
};
ApScores average_precision(const PanopticMap& gt, const PanopticMap& pred, double tau,
                           bool exact_interp = false);

/// Per-category semantic Dice 2|P&G| / (|P|+|G|). Categories empty on both
/// sides are excluded; the mean is unweighted over the rest.
struct DiceScores {
    std::map<int, double> per_class;
    double mean = 0.0;
};
DiceScores dice(const PanopticMap& gt, const PanopticMap& pred);

/// A gt/pred pair scheduled for evaluation. Maps must outlive the call.
struct DatasetPair {
    std::string image_id;
    const PanopticMap* gt = nullptr;
    const PanopticMap* pred = nullptr;
};

/// Per-pair overlap tables, computed once and shared by every tau.
struct PreparedPair {
    std::string image_id;
    PairCandidates candidates;
};
struct PreparedDataset {
    std::vector<PreparedPair> pairs;
};

/// Parallel over pairs; fills absent prediction confidences with 1.0 and
/// records a warning for each.
PreparedDataset prepare_dataset(std::span<const DatasetPair> pairs, int jobs,
                                std::vector<Warning>* warnings = nullptr);

/// Full metric record at cfg.tau from prepared overlap tables. Deterministic
/// regardless of the parallelism used during preparation.
MetricsRecord evaluate_at(const PreparedDataset& prepared, const EvalConfig& cfg);

/// prepare_dataset + evaluate_at.
MetricsRecord evaluate_dataset(std::span<const DatasetPair> pairs, const EvalConfig& cfg,
                               std::vector<Warning>* warnings = nullptr);

}  // namespace panq

#endif
