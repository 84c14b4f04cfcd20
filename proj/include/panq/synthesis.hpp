#ifndef PANQ_SYNTHESIS_HPP
#define PANQ_SYNTHESIS_HPP

#include <vector>

#include "panq/core.hpp"
#include "panq/imgproc.hpp"

namespace panq {

struct SynthesisConfig {
    double sigma = 7.0;   // blur strength applied to each box crop
    int hull_k_start = 3; // starting neighbour count for the concave hull
    enum class Overlap { kFirstWins } overlap = Overlap::kFirstWins;
    enum class Fallback { kWholeBox } fallback = Fallback::kWholeBox;
};

/// One segment from one weak box: crop, blur, Otsu-threshold, then enclose
/// every foreground pixel in a single concave-hull segment clipped to the
/// box. Degenerate crops (uniform intensity, or too little foreground to
/// hull) fall back to the whole box and record a warning. The result is in
/// full-image coordinates and always lies within the box.
BinaryMask synthesize_segment(const GrayImage& img, const BoxAnnotation& box,
                              const SynthesisConfig& cfg,
                              std::vector<Warning>* warnings = nullptr);

/// Segments synthesized in annotation order get ids 1..n; pixels claimed by
/// an earlier segment are excluded from later ones, and segments emptied by
/// that rule are dropped with a warning. The result satisfies every
/// PanopticMap invariant.
PanopticMap build_panoptic(const GrayImage& img, const std::vector<BoxAnnotation>& annotations,
                           const SynthesisConfig& cfg, const CategoryTable& cats,
                           std::vector<Warning>* warnings = nullptr);

}  // namespace panq

#endif
