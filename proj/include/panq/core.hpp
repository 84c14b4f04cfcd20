#ifndef PANQ_CORE_HPP
#define PANQ_CORE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "panq/errors.hpp"

namespace panq {

/// 2-D intensity grid, row-major. Values are scalars in [0, 2^bitdepth);
/// filtered images keep fractional values, so storage is double.
struct GrayImage {
    int width = 0;
    int height = 0;
    int bitdepth = 8;  // 8 or 16
    std::vector<double> intensities;

    GrayImage() = default;
    GrayImage(int w, int h, int depth, double fill = 0.0);

    double at(int x, int y) const { return intensities[static_cast<std::size_t>(y) * width + x]; }
    double& at(int x, int y) { return intensities[static_cast<std::size_t>(y) * width + x]; }
    std::size_t pixel_count() const { return intensities.size(); }
};

/// One boolean per pixel with a cached population count.
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;
    std::int64_t area = 0;

    BinaryMask() = default;
    BinaryMask(int w, int h);

    bool test(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool value);
    void recount();
};

/// Object categories. Id 0 is reserved for void/background and never appears here.
struct CategoryTable {
    struct Entry {
        int id = 0;
        std::string name;
    };
    std::vector<Entry> entries;

    static CategoryTable from_entries(std::vector<Entry> entries);
    bool contains(int category_id) const;
    const Entry* find(int category_id) const;
};

struct Segment {
    std::uint32_t id = 0;  // > 0; 0 is void
    int category_id = 0;
    std::int64_t area = 0;
    std::optional<double> confidence;  // required on predictions scored by AP
};

/// Per-pixel segment-id grid plus its segment table. Segments are disjoint by
/// construction: the grid stores at most one id per pixel.
struct PanopticMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> id_map;  // row-major, 0 = void
    std::vector<Segment> segments;

    PanopticMap() = default;
    PanopticMap(int w, int h);

    std::uint32_t id_at(int x, int y) const { return id_map[static_cast<std::size_t>(y) * width + x]; }
    const Segment* find_segment(std::uint32_t id) const;
};

/// Weak label: axis-aligned box in integer pixel coordinates, [min, max).
struct BoxAnnotation {
    std::string image_id;
    int xmin = 0;
    int ymin = 0;
    int xmax = 0;
    int ymax = 0;
    int category_id = 0;

    int box_width() const { return xmax - xmin; }
    int box_height() const { return ymax - ymin; }
};

/// Per-category tallies and metric values at one IoU threshold.
/// sq is undefined when tp_count == 0; ap/dice are undefined when the
/// evaluation that produced the record did not cover this class.
struct ClassMetrics {
    int category_id = 0;
    std::int64_t tp_count = 0;
    std::int64_t fp_count = 0;
    std::int64_t fn_count = 0;
    double iou_sum = 0.0;
    double rq = 0.0;
    double pq = 0.0;
    std::optional<double> sq;
    std::optional<double> ap;
    std::optional<double> dice;

    std::int64_t gt_count() const { return tp_count + fn_count; }
};

/// Full metric set for one (dataset, tau) evaluation. All values are ratios
/// in [0, 1]; renderers scale to the familiar 0-100 range.
struct MetricsRecord {
    double tau = 0.5;
    double rq = 0.0;
    double pq = 0.0;
    double ap = 0.0;
    double dice = 0.0;
    std::optional<double> sq;
    std::map<int, ClassMetrics> per_class;
};

/// Non-fatal pipeline event, e.g. a synthesis fallback or a defaulted
/// confidence. Warnings never change exit codes; the CLI logs them as one
/// JSON line each.
struct Warning {
    std::string image_id;
    std::string code;
    std::string message;
};

/// Checks all PanopticMap invariants against a category table.
/// Throws OverlapViolation when the id grid and segment table disagree,
/// UnknownCategory for ids missing from the table, AreaMismatch when a
/// segment's cached area differs from its pixel count.
const PanopticMap& validate_panoptic(const PanopticMap& map, const CategoryTable& cats);

}  // namespace panq

#endif
