#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "panq/io.hpp"

namespace panq::io {

namespace {

// Minimal CSV: comma separators, double-quoted fields with "" escapes,
// tolerant of CRLF line endings.
std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string csv_escape(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DecodeError("cannot open '" + path.string() + "' for reading");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

std::optional<int> parse_int(const std::string& text) {
    std::string trimmed = text;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    trimmed.erase(trimmed.find_last_not_of(" \t") + 1);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), value);
    if (ec != std::errc() || ptr != trimmed.data() + trimmed.size()) return std::nullopt;
    return value;
}

std::size_t require_column(const std::vector<std::string>& header, const std::string& name,
                           const std::filesystem::path& path) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw MissingColumn("'" + path.string() + "' has no column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

std::vector<BoxAnnotation> read_box_annotations(const std::filesystem::path& csv_path,
                                                const BoxColumns& columns) {
    const std::vector<std::string> lines = read_lines(csv_path);
    if (lines.empty()) throw DecodeError("'" + csv_path.string() + "' is empty");

    const std::vector<std::string> header = split_csv_row(lines[0]);
    const std::size_t col_image = require_column(header, columns.image_id, csv_path);
    const std::size_t col_xmin = require_column(header, columns.xmin, csv_path);
    const std::size_t col_ymin = require_column(header, columns.ymin, csv_path);
    const std::size_t col_xmax = require_column(header, columns.xmax, csv_path);
    const std::size_t col_ymax = require_column(header, columns.ymax, csv_path);
    const std::size_t col_category = require_column(header, columns.category, csv_path);

    std::vector<BoxAnnotation> annotations;
    std::vector<std::string> problems;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        if (lines[row].empty() || lines[row] == "\r") continue;
        const std::vector<std::string> fields = split_csv_row(lines[row]);
        const auto bad = [&](const std::string& why) {
            problems.push_back("row " + std::to_string(row + 1) + ": " + why);
        };
        const std::size_t needed =
            std::max({col_image, col_xmin, col_ymin, col_xmax, col_ymax, col_category});
        if (fields.size() <= needed) {
            bad("expected " + std::to_string(needed + 1) + " fields, got " +
                std::to_string(fields.size()));
            continue;
        }
        const auto xmin = parse_int(fields[col_xmin]);
        const auto ymin = parse_int(fields[col_ymin]);
        const auto xmax = parse_int(fields[col_xmax]);
        const auto ymax = parse_int(fields[col_ymax]);
        const auto category = parse_int(fields[col_category]);
        if (!xmin || !ymin || !xmax || !ymax) {
            bad("non-integer box coordinate");
            continue;
        }
        if (!category || *category <= 0) {
            bad("category '" + fields[col_category] + "' is not a positive integer");
            continue;
        }
        if (*xmin < 0 || *ymin < 0) {
            bad("negative box coordinate");
            continue;
        }
        if (*xmax <= *xmin || *ymax <= *ymin) {
            bad("empty box (xmax <= xmin or ymax <= ymin)");
            continue;
        }
        annotations.push_back({fields[col_image], *xmin, *ymin, *xmax, *ymax, *category});
    }
    if (!problems.empty()) {
        std::string joined;
        for (const std::string& p : problems) joined += (joined.empty() ? "" : "; ") + p;
        throw MalformedRow("'" + csv_path.string() + "': " + joined);
    }
    return annotations;
}

CategoryTable read_categories(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DecodeError("cannot open '" + path.string() + "' for reading");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError("bad JSON in '" + path.string() + "': " + e.what());
    }
    std::vector<CategoryTable::Entry> entries;
    for (const nlohmann::json& item : doc)
        entries.push_back({item.at("id").get<int>(), item.at("name").get<std::string>()});
    return CategoryTable::from_entries(std::move(entries));
}

void write_categories(const CategoryTable& cats, const std::filesystem::path& path) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const CategoryTable::Entry& e : cats.entries) {
        nlohmann::ordered_json item;
        item["id"] = e.id;
        item["name"] = e.name;
        doc.push_back(std::move(item));
    }
    std::ofstream out(path);
    if (!out) throw WriteError("cannot open '" + path.string() + "' for writing");
    out << doc.dump(2) << "\n";
    if (!out) throw WriteError("short write to '" + path.string() + "'");
}

PanopticMap read_instance_masks(const std::filesystem::path& listing_path,
                                const CategoryTable& cats, std::vector<Warning>* warnings) {
    std::ifstream in(listing_path);
    if (!in) throw DecodeError("cannot open '" + listing_path.string() + "' for reading");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError("bad JSON in '" + listing_path.string() + "': " + e.what());
    }
    const std::string image_id = doc.value("image_id", listing_path.stem().string());
    const std::filesystem::path base = listing_path.parent_path();

    PanopticMap map;
    std::uint32_t next_id = 1;
    for (const nlohmann::json& entry : doc.at("masks")) {
        const std::filesystem::path mask_path = base / entry.at("file").get<std::string>();
        const int category_id = entry.at("category_id").get<int>();
        if (!cats.contains(category_id))
            throw UnknownCategory("mask '" + mask_path.string() + "' references unknown category " +
                                  std::to_string(category_id));
        const GrayImage mask = read_gray(mask_path);
        if (map.width == 0) {
            map = PanopticMap(mask.width, mask.height);
        } else if (mask.width != map.width || mask.height != map.height) {
            throw DimensionMismatch("mask '" + mask_path.string() + "' is " +
                                    std::to_string(mask.width) + "x" + std::to_string(mask.height) +
                                    " but the image is " + std::to_string(map.width) + "x" +
                                    std::to_string(map.height));
        }
        const std::uint32_t id = next_id++;
        std::int64_t area = 0;
        for (std::size_t p = 0; p < mask.intensities.size(); ++p) {
            if (mask.intensities[p] != 0.0 && map.id_map[p] == 0) {
                map.id_map[p] = id;
                ++area;
            }
        }
        if (area == 0) {
            if (warnings)
                warnings->push_back({image_id, "segment_dropped",
                                     "mask '" + mask_path.string() +
                                         "' is empty after overlap resolution; dropped"});
            continue;
        }
        map.segments.push_back({id, category_id, area, std::nullopt});
        if (entry.contains("confidence"))
            map.segments.back().confidence = entry["confidence"].get<double>();
    }
    if (map.width == 0) throw DecodeError("'" + listing_path.string() + "' lists no masks");
    return map;
}

std::vector<ManifestItem> read_manifest(const std::filesystem::path& csv_path) {
    const std::vector<std::string> lines = read_lines(csv_path);
    if (lines.empty()) throw DecodeError("'" + csv_path.string() + "' is empty");
    const std::vector<std::string> header = split_csv_row(lines[0]);
    const std::size_t col_id = require_column(header, "image_id", csv_path);
    const std::size_t col_image = require_column(header, "image_path", csv_path);
    const std::size_t col_gt = require_column(header, "gt_path", csv_path);
    const auto col_pred = find_column(header, "pred_path");
    const auto col_group = find_column(header, "group");
    const auto col_fold = find_column(header, "fold");

    std::vector<ManifestItem> items;
    std::vector<std::string> problems;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        if (lines[row].empty() || lines[row] == "\r") continue;
        const std::vector<std::string> fields = split_csv_row(lines[row]);
        const auto cell = [&](std::size_t col) -> std::string {
            return col < fields.size() ? fields[col] : std::string();
        };
        ManifestItem item;
        item.image_id = cell(col_id);
        item.image_path = cell(col_image);
        item.gt_path = cell(col_gt);
        if (item.image_id.empty()) {
            problems.push_back("row " + std::to_string(row + 1) + ": empty image_id");
            continue;
        }
        if (col_pred && !cell(*col_pred).empty()) item.pred_path = cell(*col_pred);
        if (col_group && !cell(*col_group).empty()) item.group = cell(*col_group);
        if (col_fold && !cell(*col_fold).empty()) {
            const auto fold = parse_int(cell(*col_fold));
            if (!fold) {
                problems.push_back("row " + std::to_string(row + 1) + ": non-integer fold");
                continue;
            }
            item.fold = *fold;
        }
        items.push_back(std::move(item));
    }
    if (!problems.empty()) {
        std::string joined;
        for (const std::string& p : problems) joined += (joined.empty() ? "" : "; ") + p;
        throw MalformedRow("'" + csv_path.string() + "': " + joined);
    }
    std::vector<std::string> seen;
    for (const ManifestItem& item : items) seen.push_back(item.image_id);
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
        throw MalformedRow("'" + csv_path.string() + "': duplicate image_id values");
    return items;
}

void write_manifest(std::span<const ManifestItem> items, const std::filesystem::path& csv_path) {
    bool any_pred = false, any_group = false, any_fold = false;
    for (const ManifestItem& item : items) {
        any_pred |= item.pred_path.has_value();
        any_group |= item.group.has_value();
        any_fold |= item.fold.has_value();
    }
    std::ofstream out(csv_path);
    if (!out) throw WriteError("cannot open '" + csv_path.string() + "' for writing");
    out << "image_id,image_path,gt_path";
    if (any_pred) out << ",pred_path";
    if (any_group) out << ",group";
    if (any_fold) out << ",fold";
    out << "\n";
    for (const ManifestItem& item : items) {
        out << csv_escape(item.image_id) << "," << csv_escape(item.image_path) << ","
            << csv_escape(item.gt_path);
        if (any_pred) out << "," << csv_escape(item.pred_path.value_or(""));
        if (any_group) out << "," << csv_escape(item.group.value_or(""));
        if (any_fold) {
            out << ",";
            if (item.fold) out << *item.fold;
        }
        out << "\n";
    }
    if (!out) throw WriteError("short write to '" + csv_path.string() + "'");
}

}  // namespace panq::io
