#include "panq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "parallel.hpp"

namespace panq {

namespace {

void tally(std::map<int, ClassMetrics>& per_class, const MatchReport& report) {
    for (const MatchPair& pair : report.tp) {
        ClassMetrics& cm = per_class[pair.gt.category_id];
        cm.category_id = pair.gt.category_id;
        ++cm.tp_count;
        cm.iou_sum += pair.iou;
    }
    for (const SegmentRef& s : report.fp) {
        ClassMetrics& cm = per_class[s.category_id];
        cm.category_id = s.category_id;
        ++cm.fp_count;
    }
    for (const SegmentRef& s : report.fn) {
        ClassMetrics& cm = per_class[s.category_id];
        cm.category_id = s.category_id;
        ++cm.fn_count;
    }
}

void finish_class(ClassMetrics& cm) {
    const double denom = static_cast<double>(cm.tp_count) +
                         0.5 * static_cast<double>(cm.fp_count) +
                         0.5 * static_cast<double>(cm.fn_count);
    cm.rq = denom > 0.0 ? static_cast<double>(cm.tp_count) / denom : 0.0;
    if (cm.tp_count > 0) {
        cm.sq = cm.iou_sum / static_cast<double>(cm.tp_count);
        cm.pq = cm.rq * *cm.sq;
    } else {
        cm.sq.reset();
        cm.pq = 0.0;
    }
}

}  // namespace

PanopticScores panoptic_quality(std::span<const MatchReport> reports, bool micro) {
    PanopticScores scores;
    for (const MatchReport& report : reports) tally(scores.per_class, report);
    for (auto& [cat, cm] : scores.per_class) finish_class(cm);

    if (micro) {
        ClassMetrics pooled;
        for (const auto& [cat, cm] : scores.per_class) {
            pooled.tp_count += cm.tp_count;
            pooled.fp_count += cm.fp_count;
            pooled.fn_count += cm.fn_count;
            pooled.iou_sum += cm.iou_sum;
        }
        finish_class(pooled);
        scores.rq = pooled.rq;
        scores.pq = pooled.pq;
        scores.sq = pooled.sq;
        return scores;
    }

    // Macro mean over categories with ground truth; SQ averages only the
    // categories where it is defined.
    int included = 0;
    int sq_included = 0;
    double rq_sum = 0.0, pq_sum = 0.0, sq_sum = 0.0;
    for (const auto& [cat, cm] : scores.per_class) {
        if (cm.gt_count() < 1) continue;
        ++included;
        rq_sum += cm.rq;
        pq_sum += cm.pq;
        if (cm.sq) {
            ++sq_included;
            sq_sum += *cm.sq;
        }
    }
    if (included > 0) {
        scores.rq = rq_sum / included;
        scores.pq = pq_sum / included;
    }
    if (sq_included > 0) scores.sq = sq_sum / sq_included;
    return scores;
}

PanopticScores panoptic_quality(const MatchReport& report) {
    return panoptic_quality(std::span<const MatchReport>(&report, 1), false);
}

namespace {

struct Detection {
    double confidence = 0.0;
    std::size_t image_index = 0;
    std::uint32_t pred_id = 0;
    bool tp = false;
};

class ApAccumulator {
public:
    // Matches one image's detections against its ground truth. Claiming is
    // per category: detections in descending confidence order take the
    // unclaimed GT segment of highest IoU >= tau.
    void add_pair(const PairCandidates& cand, double tau, std::size_t image_index, bool strict) {
        for (const Segment& s : cand.gt_segments) ++gt_counts_[s.category_id];

        std::map<std::uint32_t, std::vector<std::pair<double, std::uint32_t>>> gt_options;  // pred -> (iou, gt)
        std::map<std::uint32_t, int> gt_category;
        for (const Segment& s : cand.gt_segments) gt_category[s.id] = s.category_id;
        std::map<std::uint32_t, int> pred_category;
        for (const Segment& s : cand.pred_segments) pred_category[s.id] = s.category_id;
        for (const PairCandidates::Overlap& o : cand.overlaps)
            if (gt_category[o.gt_id] == pred_category[o.pred_id] && o.iou >= tau)
                gt_options[o.pred_id].emplace_back(o.iou, o.gt_id);
        for (auto& [pred_id, options] : gt_options)
            std::sort(options.begin(), options.end(), [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : a.second < b.second;
            });

        std::map<int, std::vector<const Segment*>> preds_by_class;
        for (const Segment& s : cand.pred_segments) preds_by_class[s.category_id].push_back(&s);

        std::set<std::uint32_t> claimed;
        for (auto& [cat, preds] : preds_by_class) {
            std::sort(preds.begin(), preds.end(), [strict](const Segment* a, const Segment* b) {
                const double ca = a->confidence.value_or(1.0);
                const double cb = b->confidence.value_or(1.0);
                return ca != cb ? ca > cb : a->id < b->id;
            });
            for (const Segment* p : preds) {
                if (strict && !p->confidence)
                    throw MissingConfidence("prediction segment " + std::to_string(p->id) +
                                            " has no confidence; AP requires one");
                Detection det{p->confidence.value_or(1.0), image_index, p->id, false};
                auto it = gt_options.find(p->id);
                if (it != gt_options.end()) {
                    for (const auto& [iou_value, gt_id] : it->second) {
                        if (claimed.insert(gt_id).second) {
                            det.tp = true;
                            break;
                        }
                    }
                }
                detections_[cat].push_back(det);
            }
        }
    }

    ApScores finalize(bool exact_interp, bool micro) const {
        ApScores scores;
        std::int64_t gt_total = 0;
        std::vector<Detection> pooled;
        int included = 0;
        double ap_sum = 0.0;
        for (const auto& [cat, count] : gt_counts_) {
            if (count < 1) continue;
            std::vector<Detection> dets;
            auto it = detections_.find(cat);
            if (it != detections_.end()) dets = it->second;
            const double ap = curve_ap(dets, count, exact_interp);
            scores.per_class[cat] = ap;
            ++included;
            ap_sum += ap;
            gt_total += count;
            if (micro && it != detections_.end())
                pooled.insert(pooled.end(), it->second.begin(), it->second.end());
        }
        if (micro)
            scores.mean_ap = curve_ap(pooled, gt_total, exact_interp);
        else if (included > 0)
            scores.mean_ap = ap_sum / included;
        return scores;
    }

private:
    static double curve_ap(std::vector<Detection> dets, std::int64_t gt_total, bool exact_interp) {
        if (gt_total <= 0) return 0.0;
        std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
            if (a.confidence != b.confidence) return a.confidence > b.confidence;
            if (a.image_index != b.image_index) return a.image_index < b.image_index;
            return a.pred_id < b.pred_id;
        });
        const std::size_t n = dets.size();
        std::vector<double> precision(n), recall(n);
        std::int64_t tp = 0;
        for (std::size_t i = 0; i < n; ++i) {
            tp += dets[i].tp ? 1 : 0;
            precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
            recall[i] = static_cast<double>(tp) / static_cast<double>(gt_total);
        }
        // Interpolated precision: max precision at any recall >= r.
        std::vector<double> envelope(n);
        double running = 0.0;
        for (std::size_t i = n; i-- > 0;) {
            running = std::max(running, precision[i]);
            envelope[i] = running;
        }
        if (exact_interp) {
            double ap = 0.0;
            double prev_recall = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (recall[i] > prev_recall) {
                    ap += (recall[i] - prev_recall) * envelope[i];
                    prev_recall = recall[i];
                }
            }
            return ap;
        }
        double ap = 0.0;
        std::size_t idx = 0;
        for (int r = 0; r <= 100; ++r) {
            const double target = static_cast<double>(r) / 100.0;
            while (idx < n && recall[idx] < target) ++idx;
            if (idx < n) ap += envelope[idx];
        }
        return ap / 101.0;
    }

    std::map<int, std::vector<Detection>> detections_;
    std::map<int, std::int64_t> gt_counts_;
};

struct DicePixelCounts {
    std::int64_t gt = 0;
    std::int64_t pred = 0;
    std::int64_t inter = 0;
};

// Per-category pixel totals of one pair, derived from the overlap table:
// segments of a map never overlap each other, so category intersections are
// sums of same-category segment intersections.
std::map<int, DicePixelCounts> dice_counts(const PairCandidates& cand) {
    std::map<int, DicePixelCounts> counts;
    std::map<std::uint32_t, int> gt_category, pred_category;
    for (const Segment& s : cand.gt_segments) {
        counts[s.category_id].gt += s.area;
        gt_category[s.id] = s.category_id;
    }
    for (const Segment& s : cand.pred_segments) {
        counts[s.category_id].pred += s.area;
        pred_category[s.id] = s.category_id;
    }
    for (const PairCandidates::Overlap& o : cand.overlaps) {
        const int cat = gt_category[o.gt_id];
        if (cat == pred_category[o.pred_id]) counts[cat].inter += o.intersection;
    }
    return counts;
}

struct DiceResult {
    std::map<int, double> per_class;
    double mean = 0.0;
};

DiceResult dice_from_counts(const std::map<int, DicePixelCounts>& counts, bool micro) {
    DiceResult result;
    std::int64_t g_total = 0, p_total = 0, i_total = 0;
    int included = 0;
    double sum = 0.0;
    for (const auto& [cat, c] : counts) {
        if (c.gt == 0 && c.pred == 0) continue;
        const double value = 2.0 * static_cast<double>(c.inter) / static_cast<double>(c.gt + c.pred);
        result.per_class[cat] = value;
        ++included;
        sum += value;
        g_total += c.gt;
        p_total += c.pred;
        i_total += c.inter;
    }
    if (micro) {
        if (g_total + p_total > 0)
            result.mean = 2.0 * static_cast<double>(i_total) / static_cast<double>(g_total + p_total);
    } else if (included > 0) {
        result.mean = sum / included;
    }
    return result;
}

}  // namespace

ApScores average_precision(const PanopticMap& gt, const PanopticMap& pred, double tau,
                           bool exact_interp) {
    ApAccumulator acc;
    acc.add_pair(compute_candidates(gt, pred), tau, 0, /*strict=*/true);
    return acc.finalize(exact_interp, /*micro=*/false);
}

DiceScores dice(const PanopticMap& gt, const PanopticMap& pred) {
    const PairCandidates cand = compute_candidates(gt, pred);
    const DiceResult result = dice_from_counts(dice_counts(cand), /*micro=*/false);
    return {result.per_class, result.mean};
}

PreparedDataset prepare_dataset(std::span<const DatasetPair> pairs, int jobs,
                                std::vector<Warning>* warnings) {
    PreparedDataset prepared;
    prepared.pairs.resize(pairs.size());
    std::vector<std::vector<Warning>> slots(pairs.size());
    detail::parallel_for(pairs.size(), jobs, [&](std::size_t i) {
        const DatasetPair& p = pairs[i];
        PreparedPair out;
        out.image_id = p.image_id;
        out.candidates = compute_candidates(*p.gt, *p.pred);
        for (Segment& s : out.candidates.pred_segments) {
            if (!s.confidence) {
                s.confidence = 1.0;
                slots[i].push_back({p.image_id, "missing_confidence",
                                    "prediction segment " + std::to_string(s.id) +
                                        " has no confidence; defaulting to 1.0"});
            }
        }
        prepared.pairs[i] = std::move(out);
    });
    if (warnings)
        for (std::vector<Warning>& slot : slots)
            warnings->insert(warnings->end(), slot.begin(), slot.end());
    return prepared;
}

MetricsRecord evaluate_at(const PreparedDataset& prepared, const EvalConfig& cfg) {
    std::vector<MatchReport> reports;
    reports.reserve(prepared.pairs.size());
    ApAccumulator ap;
    std::map<int, DicePixelCounts> pooled_dice;
    std::vector<double> per_image_dice;
    std::map<int, DicePixelCounts> per_class_dice_counts;

    for (std::size_t i = 0; i < prepared.pairs.size(); ++i) {
        const PairCandidates& cand = prepared.pairs[i].candidates;
        reports.push_back(match_at(cand, cfg.match_config()));
        ap.add_pair(cand, cfg.tau, i, /*strict=*/false);
        const std::map<int, DicePixelCounts> counts = dice_counts(cand);
        for (const auto& [cat, c] : counts) {
            pooled_dice[cat].gt += c.gt;
            pooled_dice[cat].pred += c.pred;
            pooled_dice[cat].inter += c.inter;
        }
        if (cfg.per_image_dice) {
            const DiceResult image_dice = dice_from_counts(counts, cfg.micro);
            if (!image_dice.per_class.empty()) per_image_dice.push_back(image_dice.mean);
        }
    }

    const PanopticScores ps = panoptic_quality(reports, cfg.micro);
    const ApScores as = ap.finalize(cfg.exact_ap, cfg.micro);
    const DiceResult ds = dice_from_counts(pooled_dice, cfg.micro);

    MetricsRecord record;
    record.tau = cfg.tau;
    record.per_class = ps.per_class;
    record.rq = ps.rq;
    record.pq = ps.pq;
    record.sq = ps.sq;
    record.ap = as.mean_ap;
    for (const auto& [cat, value] : as.per_class) {
        ClassMetrics& cm = record.per_class[cat];
        cm.category_id = cat;
        cm.ap = value;
    }
    for (const auto& [cat, value] : ds.per_class) {
        ClassMetrics& cm = record.per_class[cat];
        cm.category_id = cat;
        cm.dice = value;
    }
    if (cfg.per_image_dice) {
        double sum = 0.0;
        for (double v : per_image_dice) sum += v;
        record.dice = per_image_dice.empty() ? 0.0 : sum / per_image_dice.size();
    } else {
        record.dice = ds.mean;
    }
    return record;
}

MetricsRecord evaluate_dataset(std::span<const DatasetPair> pairs, const EvalConfig& cfg,
                               std::vector<Warning>* warnings) {
    return evaluate_at(prepare_dataset(pairs, cfg.jobs, warnings), cfg);
}

}  // namespace panq
