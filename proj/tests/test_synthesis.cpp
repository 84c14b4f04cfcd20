#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "panq/synthesis.hpp"

using namespace panq;

using oracle::Blob;
using oracle::blob_image;
using oracle::blob_support;

TEST_SUITE("synthesis") {

TEST_CASE("a bright blob yields a segment close to its true support") {
    std::mt19937 rng(53);
    const std::vector<Blob> blobs = {{60, 60, 18}};
    const GrayImage img = blob_image(120, 120, blobs, rng);
    const BoxAnnotation box{"img", 30, 30, 92, 92, 1};
    std::vector<Warning> warnings;
    const BinaryMask mask = synthesize_segment(img, box, {}, &warnings);
    CHECK(warnings.empty());
    const BinaryMask support = blob_support(120, 120, blobs);
    CHECK(oracle::mask_iou(mask, support) >= 0.7);
}

TEST_CASE("a uniform box falls back to the whole box with a warning") {
    GrayImage img(40, 40, 8, 77.0);
    const BoxAnnotation box{"img", 4, 6, 20, 18, 1};
    std::vector<Warning> warnings;
    const BinaryMask mask = synthesize_segment(img, box, {}, &warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].code == "degenerate_region");
    CHECK(mask.area == 16 * 12);
    for (int y = box.ymin; y < box.ymax; ++y)
        for (int x = box.xmin; x < box.xmax; ++x) CHECK(mask.test(x, y));
}

TEST_CASE("two disjoint blobs in one box are enclosed in a single segment") {
    std::mt19937 rng(59);
    const std::vector<Blob> blobs = {{40, 50, 12}, {85, 60, 10}};
    const GrayImage img = blob_image(128, 110, blobs, rng);
    const BoxAnnotation box{"img", 20, 30, 108, 85, 1};
    const BinaryMask mask = synthesize_segment(img, box, {}, nullptr);

    // both supports are covered by the one mask
    const BinaryMask support = blob_support(128, 110, blobs);
    for (std::size_t i = 0; i < support.bits.size(); ++i)
        if (support.bits[i]) CHECK(mask.bits[i]);
}

TEST_CASE("synthesized segments never leave their box") {
    std::mt19937 rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        std::uniform_int_distribution<int> coord(25, 70);
        std::uniform_int_distribution<int> radius(6, 16);
        const Blob blob{coord(rng), coord(rng), radius(rng)};
        const GrayImage img = blob_image(96, 96, {blob}, rng);
        const BoxAnnotation box{"img", blob.cx - blob.r - 8, blob.cy - blob.r - 8,
                                blob.cx + blob.r + 8, blob.cy + blob.r + 8, 1};
        const BinaryMask mask = synthesize_segment(img, box, {}, nullptr);
        for (int y = 0; y < 96; ++y)
            for (int x = 0; x < 96; ++x)
                if (mask.test(x, y)) {
                    CHECK(x >= box.xmin);
                    CHECK(x < box.xmax);
                    CHECK(y >= box.ymin);
                    CHECK(y < box.ymax);
                }
    }
}

TEST_CASE("16-bit images synthesize through the same pipeline") {
    std::mt19937 rng(131);
    const Blob blob{48, 48, 14};
    GrayImage img = blob_image(96, 96, {blob}, rng);
    img.bitdepth = 16;
    for (double& v : img.intensities) v *= 256.0;  // spread over the 16-bit range
    const BoxAnnotation box{"img16", 24, 24, 72, 72, 1};
    const BinaryMask mask = synthesize_segment(img, box, {}, nullptr);
    const BinaryMask support = blob_support(96, 96, {blob});
    CHECK(oracle::mask_iou(mask, support) >= 0.7);
}

TEST_CASE("out-of-bounds boxes are rejected") {
    GrayImage img(32, 32, 8, 0.0);
    CHECK_THROWS_AS(synthesize_segment(img, {"img", -1, 0, 8, 8, 1}, {}, nullptr), BoxOutOfBounds);
    CHECK_THROWS_AS(synthesize_segment(img, {"img", 0, 0, 33, 8, 1}, {}, nullptr), BoxOutOfBounds);
    CHECK_THROWS_AS(synthesize_segment(img, {"img", 8, 8, 8, 16, 1}, {}, nullptr), BoxOutOfBounds);
}

TEST_CASE("build_panoptic: no annotations give an all-void map") {
    GrayImage img(24, 24, 8, 0.0);
    const CategoryTable cats = CategoryTable::from_entries({{1, "lesion"}});
    const PanopticMap map = build_panoptic(img, {}, {}, cats, nullptr);
    CHECK(map.segments.empty());
    for (std::uint32_t id : map.id_map) CHECK(id == 0);
    CHECK_NOTHROW(validate_panoptic(map, cats));
}

TEST_CASE("build_panoptic: two disjoint boxes give segments 1 and 2") {
    std::mt19937 rng(67);
    const std::vector<Blob> blobs = {{30, 30, 10}, {90, 80, 12}};
    const GrayImage img = blob_image(128, 112, blobs, rng);
    const std::vector<BoxAnnotation> annotations = {
        {"img", 14, 14, 46, 46, 3},
        {"img", 72, 62, 108, 98, 5},
    };
    const CategoryTable cats = CategoryTable::from_entries({{3, "BI-RADS 3"}, {5, "BI-RADS 5"}});
    std::vector<Warning> warnings;
    const PanopticMap map = build_panoptic(img, annotations, {}, cats, &warnings);
    CHECK_NOTHROW(validate_panoptic(map, cats));
    REQUIRE(map.segments.size() == 2);
    CHECK(map.segments[0].id == 1);
    CHECK(map.segments[0].category_id == 3);
    CHECK(map.segments[1].id == 2);
    CHECK(map.segments[1].category_id == 5);
}

TEST_CASE("build_panoptic: overlapping boxes resolve first-wins at pixel level") {
    std::mt19937 rng(71);
    const std::vector<Blob> blobs = {{50, 50, 14}};
    const GrayImage img = blob_image(100, 100, blobs, rng);
    const std::vector<BoxAnnotation> annotations = {
        {"img", 28, 28, 72, 72, 1},
        {"img", 32, 32, 76, 76, 1},  // heavily overlapping, same blob
    };
    const CategoryTable cats = CategoryTable::from_entries({{1, "lesion"}});
    std::vector<Warning> warnings;
    const PanopticMap map = build_panoptic(img, annotations, {}, cats, &warnings);
    CHECK_NOTHROW(validate_panoptic(map, cats));

    // segment 1 is exactly what its lone synthesis produces
    const BinaryMask first = synthesize_segment(img, annotations[0], {}, nullptr);
    for (std::size_t i = 0; i < first.bits.size(); ++i) {
        if (first.bits[i]) CHECK(map.id_map[i] == 1);
        if (map.id_map[i] == 2) CHECK(!first.bits[i]);  // second only keeps the remainder
    }
    // second segment either dropped (with a warning) or present with leftovers
    if (map.segments.size() == 1) {
        bool dropped_warning = false;
        for (const Warning& w : warnings) dropped_warning |= w.code == "segment_dropped";
        CHECK(dropped_warning);
    } else {
        CHECK(map.segments[1].id == 2);
        CHECK(map.segments[1].area > 0);
    }
}

TEST_CASE("build_panoptic: identical inputs give bit-identical maps") {
    std::mt19937 rng(73);
    const std::vector<Blob> blobs = {{40, 36, 11}, {20, 70, 8}};
    const GrayImage img = blob_image(96, 96, blobs, rng);
    const std::vector<BoxAnnotation> annotations = {
        {"img", 24, 20, 56, 52, 1},
        {"img", 8, 58, 34, 84, 2},
    };
    const CategoryTable cats = CategoryTable::from_entries({{1, "a"}, {2, "b"}});
    const PanopticMap a = build_panoptic(img, annotations, {}, cats, nullptr);
    const PanopticMap b = build_panoptic(img, annotations, {}, cats, nullptr);
    CHECK(a.id_map == b.id_map);
    REQUIRE(a.segments.size() == b.segments.size());
    for (std::size_t i = 0; i < a.segments.size(); ++i) {
        CHECK(a.segments[i].id == b.segments[i].id);
        CHECK(a.segments[i].area == b.segments[i].area);
    }
}

TEST_CASE("build_panoptic: unknown categories are rejected") {
    GrayImage img(32, 32, 8, 0.0);
    const CategoryTable cats = CategoryTable::from_entries({{1, "lesion"}});
    CHECK_THROWS_AS(build_panoptic(img, {{"img", 0, 0, 8, 8, 9}}, {}, cats, nullptr),
                    UnknownCategory);
}

}  // TEST_SUITE
