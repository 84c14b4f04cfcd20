#include "panq/matching.hpp"

#include <algorithm>
#include <unordered_map>

namespace panq {

double iou(const BinaryMask& a, const BinaryMask& b) {
    if (a.width != b.width || a.height != b.height)
        throw DimensionMismatch("mask sizes differ: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                                " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
    std::int64_t inter = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) inter += (a.bits[i] && b.bits[i]) ? 1 : 0;
    const std::int64_t uni = a.area + b.area - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

// Dense index per segment id; index 0 is void.
std::vector<std::int32_t> id_lookup(const PanopticMap& map, std::uint32_t max_id) {
    std::vector<std::int32_t> lookup(static_cast<std::size_t>(max_id) + 1, -1);
    lookup[0] = 0;
    for (std::size_t i = 0; i < map.segments.size(); ++i)
        lookup[map.segments[i].id] = static_cast<std::int32_t>(i) + 1;
    return lookup;
}

}  // namespace

PairCandidates compute_candidates(const PanopticMap& gt, const PanopticMap& pred) {
    if (gt.width != pred.width || gt.height != pred.height)
        throw DimensionMismatch("gt is " + std::to_string(gt.width) + "x" + std::to_string(gt.height) +
                                " but pred is " + std::to_string(pred.width) + "x" + std::to_string(pred.height));

    PairCandidates out;
    out.width = gt.width;
    out.height = gt.height;
    out.gt_segments = gt.segments;
    out.pred_segments = pred.segments;
    for (const Segment& s : gt.segments) out.gt_categories.push_back(s.category_id);
    for (const Segment& s : pred.segments) out.pred_categories.push_back(s.category_id);
    out.pred_void_overlap.assign(pred.segments.size(), 0);

    std::uint32_t gt_max = 0, pred_max = 0;
    for (const Segment& s : gt.segments) gt_max = std::max(gt_max, s.id);
    for (const Segment& s : pred.segments) pred_max = std::max(pred_max, s.id);
    const std::vector<std::int32_t> gt_lookup = id_lookup(gt, gt_max);
    const std::vector<std::int32_t> pred_lookup = id_lookup(pred, pred_max);

    const std::size_t g = gt.segments.size() + 1;
    const std::size_t p = pred.segments.size() + 1;
    std::vector<std::int64_t> joint(g * p, 0);  // joint[gi * p + pi]

    for (std::size_t i = 0; i < gt.id_map.size(); ++i) {
        const std::uint32_t gid = gt.id_map[i];
        const std::uint32_t pid = pred.id_map[i];
        const std::int32_t gi = gid <= gt_max ? gt_lookup[gid] : -1;
        const std::int32_t pi = pid <= pred_max ? pred_lookup[pid] : -1;
        if (gi < 0)
            throw OverlapViolation("gt id " + std::to_string(gid) + " missing from segment table");
        if (pi < 0)
            throw OverlapViolation("pred id " + std::to_string(pid) + " missing from segment table");
        ++joint[static_cast<std::size_t>(gi) * p + pi];
    }

    for (std::size_t pi = 1; pi < p; ++pi) out.pred_void_overlap[pi - 1] = joint[pi];
    for (std::size_t gi = 1; gi < g; ++gi) {
        for (std::size_t pi = 1; pi < p; ++pi) {
            const std::int64_t inter = joint[gi * p + pi];
            if (inter == 0) continue;
            const std::int64_t uni =
                gt.segments[gi - 1].area + pred.segments[pi - 1].area - inter;
            out.overlaps.push_back({gt.segments[gi - 1].id, pred.segments[pi - 1].id, inter,
                                    static_cast<double>(inter) / static_cast<double>(uni)});
        }
    }
    return out;
}

MatchReport match_at(const PairCandidates& candidates, const MatchConfig& cfg) {
    if (!(cfg.tau > 0.0 && cfg.tau <= 1.0))
        throw Error("tau must be in (0, 1], got " + std::to_string(cfg.tau));

    std::unordered_map<std::uint32_t, const Segment*> gt_by_id, pred_by_id;
    for (const Segment& s : candidates.gt_segments) gt_by_id[s.id] = &s;
    for (const Segment& s : candidates.pred_segments) pred_by_id[s.id] = &s;

    std::vector<const PairCandidates::Overlap*> eligible;
    for (const PairCandidates::Overlap& o : candidates.overlaps) {
        if (o.iou < cfg.tau) continue;
        if (cfg.class_aware && gt_by_id[o.gt_id]->category_id != pred_by_id[o.pred_id]->category_id) continue;
        eligible.push_back(&o);
    }
    std::sort(eligible.begin(), eligible.end(),
              [](const PairCandidates::Overlap* a, const PairCandidates::Overlap* b) {
                  if (a->iou != b->iou) return a->iou > b->iou;
                  if (a->gt_id != b->gt_id) return a->gt_id < b->gt_id;
                  return a->pred_id < b->pred_id;
              });

    MatchReport report;
    std::unordered_map<std::uint32_t, bool> gt_used, pred_used;
    for (const PairCandidates::Overlap* o : eligible) {
        if (gt_used[o->gt_id] || pred_used[o->pred_id]) continue;
        gt_used[o->gt_id] = true;
        pred_used[o->pred_id] = true;
        const Segment* g = gt_by_id[o->gt_id];
        const Segment* q = pred_by_id[o->pred_id];
        report.tp.push_back({{g->id, g->category_id, g->area}, {q->id, q->category_id, q->area}, o->iou});
    }

    for (std::size_t i = 0; i < candidates.pred_segments.size(); ++i) {
        const Segment& s = candidates.pred_segments[i];
        if (pred_used[s.id]) continue;
        if (cfg.void_forgiveness &&
            2 * candidates.pred_void_overlap[i] > s.area)
            continue;  // mostly over unannotated pixels; not counted
        report.fp.push_back({s.id, s.category_id, s.area});
    }
    for (const Segment& s : candidates.gt_segments)
        if (!gt_used[s.id]) report.fn.push_back({s.id, s.category_id, s.area});
    return report;
}

MatchReport match_segments(const PanopticMap& gt, const PanopticMap& pred, const MatchConfig& cfg) {
    return match_at(compute_candidates(gt, pred), cfg);
}

}  // namespace panq
