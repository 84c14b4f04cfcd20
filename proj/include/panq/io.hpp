#ifndef PANQ_IO_HPP
#define PANQ_IO_HPP

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panq/core.hpp"
#include "panq/experiment.hpp"

namespace panq::io {

// ---------------------------------------------------------------------------
// Rasters

/// Decodes an 8- or 16-bit single-channel PNG. Color, palette and alpha
/// inputs are rejected with UnsupportedFormat; broken files raise DecodeError.
GrayImage read_gray(const std::filesystem::path& path);

/// Writes intensities (clamped and rounded) as an 8- or 16-bit gray PNG.
void write_gray(const GrayImage& img, const std::filesystem::path& path);

/// Panoptic archive: a 24-bit RGB PNG storing id = R + 256*G + 65536*B per
/// pixel, plus a JSON sidecar listing the segments. Round-trips exactly.
void write_panoptic(const PanopticMap& map, const std::filesystem::path& png_path,
                    const std::filesystem::path& json_path,
                    const std::string& image_id = {});
PanopticMap read_panoptic(const std::filesystem::path& png_path,
                          const std::filesystem::path& json_path);

// ---------------------------------------------------------------------------
// Tables

/// CSV column names for bounding-box annotations; all six are required to
/// appear in the header row.
struct BoxColumns {
    std::string image_id = "image_id";
    std::string xmin = "xmin";
    std::string ymin = "ymin";
    std::string xmax = "xmax";
    std::string ymax = "ymax";
    std::string category = "category";
};

/// Reads one annotation per row. Rows violating the box invariants are
/// collected and reported together in a single MalformedRow error naming
/// each offending row number.
std::vector<BoxAnnotation> read_box_annotations(const std::filesystem::path& csv_path,
                                                const BoxColumns& columns = {});

/// Categories as a JSON array of {"id": int, "name": string}.
CategoryTable read_categories(const std::filesystem::path& path);
void write_categories(const CategoryTable& cats, const std::filesystem::path& path);

/// Assembles a PanopticMap from per-lesion binary mask PNGs listed (with
/// categories) in a JSON file: {"image_id": ..., "masks": [{"file": ...,
/// "category_id": ...}, ...]}. Masks become segments 1..n in listing order;
/// overlapping pixels stay with the earlier mask.
PanopticMap read_instance_masks(const std::filesystem::path& listing_path,
                                const CategoryTable& cats,
                                std::vector<Warning>* warnings = nullptr);

/// Dataset manifest rows. Optional columns (pred_path, group, fold) survive
/// a read/write round trip; absent cells stay absent.
struct ManifestItem {
    std::string image_id;
    std::string image_path;
    std::string gt_path;
    std::optional<std::string> pred_path;
    std::optional<std::string> group;
    std::optional<int> fold;
};
std::vector<ManifestItem> read_manifest(const std::filesystem::path& csv_path);
void write_manifest(std::span<const ManifestItem> items, const std::filesystem::path& csv_path);

// ---------------------------------------------------------------------------
// Reports

/// JSON keeps ratios in [0, 1] at full precision; CSV renders them scaled to
/// 0-100 with two decimals, undefined cells as an em dash.
void write_metrics_json(const MetricsRecord& record, const std::filesystem::path& path);
void write_metrics_csv(const MetricsRecord& record, const std::filesystem::path& path);
MetricsRecord read_metrics_json(const std::filesystem::path& path);

void write_sweep_json(const SweepResult& result, const std::filesystem::path& path);
void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path);

/// Line chart of PQ, RQ and SQ against the threshold grid; rows with
/// undefined SQ are left out of the SQ series.
void write_sweep_svg(const SweepResult& result, const std::filesystem::path& path,
                     const std::string& title = "PQ, RQ and SQ across IoU thresholds");

/// Summary cells render as "mean ± std" with two decimals, matching the
/// usual results-table style.
void write_summary_json(const Summary& summary, const std::filesystem::path& path);
void write_summary_csv(const Summary& summary, const std::filesystem::path& path);

/// Warnings as JSON lines, one object per line. Rewrites the file so reruns
/// over unchanged inputs produce identical bytes.
void write_warnings(std::span<const Warning> warnings, const std::filesystem::path& path);

}  // namespace panq::io

#endif
