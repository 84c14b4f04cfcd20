#include "panq/core.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace panq {

GrayImage::GrayImage(int w, int h, int depth, double fill)
    : width(w), height(h), bitdepth(depth) {
    if (w < 1 || h < 1)
        throw Error("GrayImage dimensions must be >= 1, got " + std::to_string(w) + "x" + std::to_string(h));
    if (depth != 8 && depth != 16)
        throw Error("GrayImage bitdepth must be 8 or 16, got " + std::to_string(depth));
    intensities.assign(static_cast<std::size_t>(w) * h, fill);
}

BinaryMask::BinaryMask(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1)
        throw Error("BinaryMask dimensions must be >= 1, got " + std::to_string(w) + "x" + std::to_string(h));
    bits.assign(static_cast<std::size_t>(w) * h, 0);
}

void BinaryMask::set(int x, int y, bool value) {
    std::uint8_t& cell = bits[static_cast<std::size_t>(y) * width + x];
    area += (value ? 1 : 0) - (cell ? 1 : 0);
    cell = value ? 1 : 0;
}

void BinaryMask::recount() {
    area = std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; });
}

CategoryTable CategoryTable::from_entries(std::vector<Entry> entries) {
    std::unordered_set<int> ids;
    std::unordered_set<std::string> names;
    for (const Entry& e : entries) {
        if (e.id <= 0)
            throw Error("category id must be > 0 (0 is reserved for void), got " + std::to_string(e.id));
        if (!ids.insert(e.id).second)
            throw Error("duplicate category id " + std::to_string(e.id));
        if (!names.insert(e.name).second)
            throw Error("duplicate category name '" + e.name + "'");
    }
    CategoryTable table;
    table.entries = std::move(entries);
    return table;
}

bool CategoryTable::contains(int category_id) const {
    return find(category_id) != nullptr;
}

const CategoryTable::Entry* CategoryTable::find(int category_id) const {
    for (const Entry& e : entries)
        if (e.id == category_id) return &e;
    return nullptr;
}

PanopticMap::PanopticMap(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1)
        throw Error("PanopticMap dimensions must be >= 1, got " + std::to_string(w) + "x" + std::to_string(h));
    id_map.assign(static_cast<std::size_t>(w) * h, 0);
}

const Segment* PanopticMap::find_segment(std::uint32_t id) const {
    for (const Segment& s : segments)
        if (s.id == id) return &s;
    return nullptr;
}

const PanopticMap& validate_panoptic(const PanopticMap& map, const CategoryTable& cats) {
    if (map.width < 1 || map.height < 1 ||
        map.id_map.size() != static_cast<std::size_t>(map.width) * map.height)
        throw Error("PanopticMap id grid size does not match its dimensions");

    std::unordered_map<std::uint32_t, std::int64_t> pixel_counts;
    for (std::uint32_t id : map.id_map)
        if (id != 0) ++pixel_counts[id];

    std::unordered_set<std::uint32_t> listed;
    for (const Segment& s : map.segments) {
        if (s.id == 0)
            throw OverlapViolation("segment table lists reserved void id 0");
        if (!listed.insert(s.id).second)
            throw OverlapViolation("segment id " + std::to_string(s.id) + " listed more than once");
        if (!cats.contains(s.category_id))
            throw UnknownCategory("segment " + std::to_string(s.id) + " references unknown category " +
                                  std::to_string(s.category_id));
        auto it = pixel_counts.find(s.id);
        if (it == pixel_counts.end())
            throw OverlapViolation("segment id " + std::to_string(s.id) + " does not appear in the id grid");
        if (it->second != s.area)
            throw AreaMismatch("segment " + std::to_string(s.id) + " area " + std::to_string(s.area) +
                               " != pixel count " + std::to_string(it->second));
        if (s.confidence && (*s.confidence < 0.0 || *s.confidence > 1.0))
            throw Error("segment " + std::to_string(s.id) + " confidence outside [0, 1]");
    }
    for (const auto& [id, count] : pixel_counts)
        if (!listed.count(id))
            throw OverlapViolation("id " + std::to_string(id) + " appears in the grid but not in the segment table");
    return map;
}

}  // namespace panq
