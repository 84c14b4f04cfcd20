#include "panq/synthesis.hpp"

namespace panq {

namespace {

void check_box(const GrayImage& img, const BoxAnnotation& box) {
    if (box.xmin < 0 || box.ymin < 0 || box.xmax > img.width || box.ymax > img.height ||
        box.xmin >= box.xmax || box.ymin >= box.ymax)
        throw BoxOutOfBounds("box [" + std::to_string(box.xmin) + "," + std::to_string(box.ymin) + ")-[" +
                             std::to_string(box.xmax) + "," + std::to_string(box.ymax) + ") outside " +
                             std::to_string(img.width) + "x" + std::to_string(img.height) + " image '" +
                             box.image_id + "'");
}

GrayImage crop(const GrayImage& img, const BoxAnnotation& box) {
    GrayImage out(box.box_width(), box.box_height(), img.bitdepth);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(x, y) = img.at(box.xmin + x, box.ymin + y);
    return out;
}

BinaryMask whole_box_mask(const GrayImage& img, const BoxAnnotation& box) {
    BinaryMask mask(img.width, img.height);
    for (int y = box.ymin; y < box.ymax; ++y)
        for (int x = box.xmin; x < box.xmax; ++x) mask.set(x, y, true);
    return mask;
}

void warn(std::vector<Warning>* warnings, const BoxAnnotation& box, const std::string& code,
          const std::string& message) {
    if (warnings) warnings->push_back({box.image_id, code, message});
}

}  // namespace

BinaryMask synthesize_segment(const GrayImage& img, const BoxAnnotation& box,
                              const SynthesisConfig& cfg, std::vector<Warning>* warnings) {
    check_box(img, box);
    const GrayImage region = blur(crop(img, box), cfg.sigma);

    int threshold = 0;
    try {
        threshold = otsu_threshold(region);
    } catch (const DegenerateRegion&) {
        warn(warnings, box, "degenerate_region",
             "box has a single distinct intensity after blurring; using the whole box");
        return whole_box_mask(img, box);
    }

    const BinaryMask foreground = threshold_foreground(region, threshold);
    const std::vector<BinaryMask> components = connected_components(foreground);

    // All areas of interest end up enclosed in one segment: the hull is taken
    // over the union of every component's pixels. Hull points are pixel
    // centers so the rasterized polygon covers each foreground pixel.
    std::vector<Point2> points;
    points.reserve(static_cast<std::size_t>(foreground.area));
    for (const BinaryMask& component : components)
        for (int y = 0; y < component.height; ++y)
            for (int x = 0; x < component.width; ++x)
                if (component.test(x, y)) points.push_back({x + 0.5, y + 0.5});

    Polygon hull;
    try {
        hull = concave_hull(points, cfg.hull_k_start);
    } catch (const TooFewPoints&) {
        warn(warnings, box, "hull_fallback", "fewer than 3 foreground pixels; using the whole box");
        return whole_box_mask(img, box);
    } catch (const CollinearPoints&) {
        warn(warnings, box, "hull_fallback", "foreground pixels are collinear; using the whole box");
        return whole_box_mask(img, box);
    }

    const BinaryMask local = rasterize(hull, box.box_width(), box.box_height());
    BinaryMask mask(img.width, img.height);
    for (int y = 0; y < local.height; ++y)
        for (int x = 0; x < local.width; ++x)
            if (local.test(x, y)) mask.set(box.xmin + x, box.ymin + y, true);
    return mask;
}

PanopticMap build_panoptic(const GrayImage& img, const std::vector<BoxAnnotation>& annotations,
                           const SynthesisConfig& cfg, const CategoryTable& cats,
                           std::vector<Warning>* warnings) {
    for (const BoxAnnotation& box : annotations) {
        check_box(img, box);
        if (!cats.contains(box.category_id))
            throw UnknownCategory("annotation on '" + box.image_id + "' references unknown category " +
                                  std::to_string(box.category_id));
    }

    PanopticMap map(img.width, img.height);
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        const BoxAnnotation& box = annotations[i];
        const BinaryMask mask = synthesize_segment(img, box, cfg, warnings);
        const std::uint32_t id = static_cast<std::uint32_t>(i) + 1;

        // First-wins: pixels already claimed by an earlier segment stay put.
        std::int64_t area = 0;
        for (std::size_t p = 0; p < mask.bits.size(); ++p) {
            if (mask.bits[p] && map.id_map[p] == 0) {
                map.id_map[p] = id;
                ++area;
            }
        }
        if (area == 0) {
            warn(warnings, box, "segment_dropped",
                 "segment " + std::to_string(id) + " fully overlapped by earlier segments; dropped");
            continue;
        }
        map.segments.push_back({id, box.category_id, area, std::nullopt});
    }
    return map;
}

}  // namespace panq
