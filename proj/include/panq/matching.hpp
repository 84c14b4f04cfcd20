#ifndef PANQ_MATCHING_HPP
#define PANQ_MATCHING_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "panq/core.hpp"

namespace panq {

struct MatchConfig {
    double tau = 0.5;            // IoU threshold in (0, 1]
    bool class_aware = true;     // restrict pairs to equal categories
    bool void_forgiveness = false;  // drop FPs mostly over GT void
};

struct SegmentRef {
    std::uint32_t segment_id = 0;
    int category_id = 0;
    std::int64_t area = 0;
};

struct MatchPair {
    SegmentRef gt;
    SegmentRef pred;
    double iou = 0.0;
};

/// TP/FP/FN decomposition of one gt/pred map pair at a fixed threshold.
/// Each segment appears at most once across the report.
struct MatchReport {
    std::vector<MatchPair> tp;
    std::vector<SegmentRef> fp;
    std::vector<SegmentRef> fn;
};

/// |a & b| / |a | b|; 0 when both masks are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

/// Everything threshold matching needs from one gt/pred map pair, computed in
/// a single pass over the pixels. Reused across tau values by sweeps.
struct PairCandidates {
    struct Overlap {
        std::uint32_t gt_id = 0;
        std::uint32_t pred_id = 0;
        std::int64_t intersection = 0;
        double iou = 0.0;
    };
    int width = 0;
    int height = 0;
    std::vector<Segment> gt_segments;
    std::vector<Segment> pred_segments;
    std::vector<Overlap> overlaps;             // pairs with intersection > 0
    std::vector<std::int64_t> pred_void_overlap;  // per pred segment, pixels over GT void
    std::vector<int> gt_categories;            // parallel to gt_segments
    std::vector<int> pred_categories;          // parallel to pred_segments
};

PairCandidates compute_candidates(const PanopticMap& gt, const PanopticMap& pred);

/// Greedy one-to-one matching over precomputed candidates: pairs with
/// iou >= tau (and equal categories when class-aware) are accepted in
/// descending-IoU order, ties broken by smaller gt id then pred id. Because
/// raising tau only truncates the candidate list, TP(tau2) is exactly the
/// IoU-filtered TP(tau1) for tau2 > tau1.
MatchReport match_at(const PairCandidates& candidates, const MatchConfig& cfg);

/// compute_candidates + match_at in one call.
MatchReport match_segments(const PanopticMap& gt, const PanopticMap& pred, const MatchConfig& cfg);

}  // namespace panq

#endif
