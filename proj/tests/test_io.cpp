#include <clocale>
#include <fstream>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "panq/io.hpp"
#include "png_oracle.hpp"

using namespace panq;

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0;
    for (std::size_t at = text.find(needle); at != std::string::npos;
         at = text.find(needle, at + needle.size()))
        ++count;
    return count;
}

bool maps_equal(const PanopticMap& a, const PanopticMap& b) {
    if (a.width != b.width || a.height != b.height || a.id_map != b.id_map) return false;
    if (a.segments.size() != b.segments.size()) return false;
    for (std::size_t i = 0; i < a.segments.size(); ++i) {
        const Segment& x = a.segments[i];
        const Segment& y = b.segments[i];
        if (x.id != y.id || x.category_id != y.category_id || x.area != y.area) return false;
        if (x.confidence.has_value() != y.confidence.has_value()) return false;
        if (x.confidence && *x.confidence != *y.confidence) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("read_gray: 8-bit fixture from an independent encoder") {
    oracle::TempDir dir("gray8");
    std::vector<std::uint16_t> samples;
    for (int i = 0; i < 16; ++i) samples.push_back(static_cast<std::uint16_t>(i * 13 % 256));
    png_oracle::write_file(dir.path / "img.png", png_oracle::encode(4, 4, 8, 0, samples));

    const GrayImage img = io::read_gray(dir.path / "img.png");
    CHECK(img.width == 4);
    CHECK(img.height == 4);
    CHECK(img.bitdepth == 8);
    for (int i = 0; i < 16; ++i) CHECK(img.intensities[i] == static_cast<double>(samples[i]));
}

TEST_CASE("read_gray: 16-bit fixture keeps full precision") {
    oracle::TempDir dir("gray16");
    std::vector<std::uint16_t> samples = {0, 1, 255, 256, 4095, 40000, 65535, 777, 9};
    png_oracle::write_file(dir.path / "img.png", png_oracle::encode(3, 3, 16, 0, samples));
    const GrayImage img = io::read_gray(dir.path / "img.png");
    CHECK(img.bitdepth == 16);
    for (int i = 0; i < 9; ++i) CHECK(img.intensities[i] == static_cast<double>(samples[i]));
}

TEST_CASE("read_gray: truncated and color inputs are rejected") {
    oracle::TempDir dir("bad");
    const png_oracle::Bytes good = png_oracle::encode(4, 4, 8, 0, std::vector<std::uint16_t>(16, 7));
    png_oracle::Bytes truncated(good.begin(), good.begin() + good.size() / 2);
    png_oracle::write_file(dir.path / "trunc.png", truncated);
    CHECK_THROWS_AS(io::read_gray(dir.path / "trunc.png"), DecodeError);

    std::vector<std::uint16_t> rgb(4 * 4 * 3, 100);
    png_oracle::write_file(dir.path / "rgb.png", png_oracle::encode(4, 4, 8, 2, rgb));
    CHECK_THROWS_AS(io::read_gray(dir.path / "rgb.png"), UnsupportedFormat);

    CHECK_THROWS_AS(io::read_gray(dir.path / "absent.png"), DecodeError);
}

TEST_CASE("gray round trip through our own writer") {
    oracle::TempDir dir("grayrt");
    std::mt19937 rng(97);
    GrayImage img(9, 5, 16);
    std::uniform_int_distribution<int> value(0, 65535);
    for (double& v : img.intensities) v = value(rng);
    io::write_gray(img, dir.path / "img.png");
    const GrayImage back = io::read_gray(dir.path / "img.png");
    CHECK(back.intensities == img.intensities);
}

TEST_CASE("panoptic round trip is exact, including ids near 2^24 - 1") {
    oracle::TempDir dir("pano");
    std::mt19937 rng(101);
    oracle::MapSpec spec;
    spec.with_confidence = true;
    for (int trial = 0; trial < 20; ++trial) {
        PanopticMap map = oracle::random_map(rng, spec);
        if (trial % 4 == 0 && !map.segments.empty()) {
            // push one id to the top of the 24-bit range
            const std::uint32_t big = (1u << 24) - 1 - static_cast<std::uint32_t>(trial);
            const std::uint32_t old = map.segments.back().id;
            map.segments.back().id = big;
            for (std::uint32_t& id : map.id_map)
                if (id == old) id = big;
        }
        io::write_panoptic(map, dir.path / "m.png", dir.path / "m.json", "m");
        const PanopticMap back = io::read_panoptic(dir.path / "m.png", dir.path / "m.json");
        PanopticMap sorted = map;
        std::sort(sorted.segments.begin(), sorted.segments.end(),
                  [](const Segment& a, const Segment& b) { return a.id < b.id; });
        CHECK(maps_equal(sorted, back));
    }
}

TEST_CASE("panoptic id encoding: 70000 becomes RGB (112, 17, 1)") {
    oracle::TempDir dir("enc");
    PanopticMap map(3, 1);
    map.id_map[1] = 70000;
    map.segments.push_back({70000, 1, 1, std::nullopt});
    io::write_panoptic(map, dir.path / "m.png", dir.path / "m.json");

    const png_oracle::Decoded decoded = png_oracle::decode(png_oracle::read_file(dir.path / "m.png"));
    REQUIRE(decoded.color_type == 2);
    REQUIRE(decoded.bit_depth == 8);
    CHECK(decoded.pixels[3] == 112);  // R
    CHECK(decoded.pixels[4] == 17);   // G
    CHECK(decoded.pixels[5] == 1);    // B
}

TEST_CASE("panoptic: ids beyond 24 bits and sidecar disagreements are rejected") {
    oracle::TempDir dir("panobad");
    PanopticMap map(2, 1);
    map.id_map[0] = 1u << 24;
    map.segments.push_back({1u << 24, 1, 1, std::nullopt});
    CHECK_THROWS_AS(io::write_panoptic(map, dir.path / "m.png", dir.path / "m.json"), IdOverflow);

    PanopticMap ok(2, 1);
    ok.id_map[0] = 5;
    ok.segments.push_back({5, 1, 1, std::nullopt});
    io::write_panoptic(ok, dir.path / "ok.png", dir.path / "ok.json");

    std::ofstream tampered(dir.path / "ok.json");
    tampered << R"({"width":2,"height":1,"segments":[{"id":6,"category_id":1,"area":1}]})";
    tampered.close();
    CHECK_THROWS_AS(io::read_panoptic(dir.path / "ok.png", dir.path / "ok.json"), SidecarMismatch);
}

TEST_CASE("box annotations: well-formed rows parse, bad rows are reported together") {
    oracle::TempDir dir("csv");
    {
        std::ofstream csv(dir.path / "boxes.csv");
        csv << "image_id,xmin,ymin,xmax,ymax,category\n"
            << "a,0,0,10,12,3\n"
            << "b,5,5,9,9,4\n"
            << "c,100,40,180,90,5\n";
    }
    const std::vector<BoxAnnotation> boxes = io::read_box_annotations(dir.path / "boxes.csv");
    REQUIRE(boxes.size() == 3);
    CHECK(boxes[0].image_id == "a");
    CHECK(boxes[0].category_id == 3);
    CHECK(boxes[1].category_id == 4);
    CHECK(boxes[2].category_id == 5);
    CHECK(boxes[2].xmax == 180);

    {
        std::ofstream csv(dir.path / "bad.csv");
        csv << "image_id,xmin,ymin,xmax,ymax,category\n"
            << "a,0,0,10,12,3\n"
            << "b,9,5,9,9,4\n"      // xmax <= xmin
            << "c,1,1,4,4,zero\n";  // non-integer category
    }
    try {
        io::read_box_annotations(dir.path / "bad.csv");
        FAIL("expected MalformedRow");
    } catch (const MalformedRow& e) {
        const std::string what = e.what();
        CHECK(what.find("row 3") != std::string::npos);
        CHECK(what.find("row 4") != std::string::npos);
    }

    {
        std::ofstream csv(dir.path / "missing.csv");
        csv << "image_id,xmin,ymin,xmax,category\n";
    }
    CHECK_THROWS_AS(io::read_box_annotations(dir.path / "missing.csv"), MissingColumn);
}

TEST_CASE("box annotations: custom column names") {
    oracle::TempDir dir("csvcols");
    {
        std::ofstream csv(dir.path / "boxes.csv");
        csv << "study,x0,y0,x1,y1,birads\n"
            << "s1,2,3,20,30,4\n";
    }
    io::BoxColumns columns{"study", "x0", "y0", "x1", "y1", "birads"};
    const std::vector<BoxAnnotation> boxes = io::read_box_annotations(dir.path / "boxes.csv", columns);
    REQUIRE(boxes.size() == 1);
    CHECK(boxes[0].image_id == "s1");
    CHECK(boxes[0].category_id == 4);
}

TEST_CASE("instance masks: listing order, overlap resolution and errors") {
    oracle::TempDir dir("inst");
    const CategoryTable cats = CategoryTable::from_entries({{1, "benign"}, {2, "malignant"}});

    const auto write_mask = [&](const std::string& name, int w, int h, int x0, int x1) {
        std::vector<std::uint16_t> samples(static_cast<std::size_t>(w) * h, 0);
        for (int x = x0; x < x1; ++x) samples[static_cast<std::size_t>(x)] = 255;
        png_oracle::write_file(dir.path / name, png_oracle::encode(w, h, 8, 0, samples));
    };
    write_mask("m1.png", 12, 3, 0, 5);
    write_mask("m2.png", 12, 3, 7, 11);
    {
        std::ofstream listing(dir.path / "img.json");
        listing << R"({"image_id":"img","masks":[
            {"file":"m1.png","category_id":1},
            {"file":"m2.png","category_id":2}]})";
    }
    const PanopticMap map = io::read_instance_masks(dir.path / "img.json", cats);
    REQUIRE(map.segments.size() == 2);
    CHECK(map.segments[0].id == 1);
    CHECK(map.segments[0].category_id == 1);
    CHECK(map.segments[0].area == 5);
    CHECK(map.segments[1].category_id == 2);
    CHECK_NOTHROW(validate_panoptic(map, cats));

    write_mask("o1.png", 12, 3, 0, 8);
    write_mask("o2.png", 12, 3, 4, 12);
    {
        std::ofstream listing(dir.path / "overlap.json");
        listing << R"({"image_id":"overlap","masks":[
            {"file":"o1.png","category_id":1},
            {"file":"o2.png","category_id":2}]})";
    }
    const PanopticMap overlap = io::read_instance_masks(dir.path / "overlap.json", cats);
    REQUIRE(overlap.segments.size() == 2);
    CHECK(overlap.segments[0].area == 8);  // first wins the contested pixels
    CHECK(overlap.segments[1].area == 4);

    write_mask("small.png", 6, 2, 0, 3);
    {
        std::ofstream listing(dir.path / "bad.json");
        listing << R"({"image_id":"bad","masks":[
            {"file":"m1.png","category_id":1},
            {"file":"small.png","category_id":2}]})";
    }
    CHECK_THROWS_AS(io::read_instance_masks(dir.path / "bad.json", cats), DimensionMismatch);

    {
        std::ofstream listing(dir.path / "cat.json");
        listing << R"({"image_id":"cat","masks":[{"file":"m1.png","category_id":9}]})";
    }
    CHECK_THROWS_AS(io::read_instance_masks(dir.path / "cat.json", cats), UnknownCategory);
}

TEST_CASE("summary CSV renders mean and deviation in table style") {
    Summary summary;
    summary.tau = 0.1;
    summary.fold_count = 5;
    summary.metrics["rq"] = {0.4619, 0.0339, 5};
    summary.metrics["sq"] = {0.5526, 0.0122, 5};
    summary.metrics["pq"] = {0.2544, 0.0187, 5};
    summary.metrics["ap"] = {0.4025, 0.0490, 5};
    summary.metrics["dice"] = {0.3886, 0.0277, 5};

    oracle::TempDir dir("summary");
    io::write_summary_csv(summary, dir.path / "summary.csv");
    const std::string text = slurp(dir.path / "summary.csv");
    CHECK(text.find("25.44 ± 1.87") != std::string::npos);
    CHECK(text.find("46.19 ± 3.39") != std::string::npos);

    summary.metrics["sq"].n = 0;  // undefined across folds renders as an em dash
    io::write_summary_csv(summary, dir.path / "summary2.csv");
    CHECK(slurp(dir.path / "summary2.csv").find("—") != std::string::npos);
}

TEST_CASE("metrics JSON survives a full-precision round trip") {
    MetricsRecord record;
    record.tau = 0.35;
    record.rq = 0.123456789012345;
    record.sq = 0.987654321098765;
    record.pq = record.rq * *record.sq;
    record.ap = 1.0 / 3.0;
    record.dice = 2.0 / 7.0;
    ClassMetrics cm;
    cm.category_id = 3;
    cm.tp_count = 4;
    cm.fp_count = 1;
    cm.fn_count = 2;
    cm.iou_sum = 2.718281828459045;
    cm.rq = 0.5;
    cm.sq = cm.iou_sum / 4.0;
    cm.pq = cm.rq * *cm.sq;
    cm.ap = 0.25;
    cm.dice = 0.4;
    record.per_class[3] = cm;

    oracle::TempDir dir("json");
    io::write_metrics_json(record, dir.path / "report.json");
    const MetricsRecord back = io::read_metrics_json(dir.path / "report.json");
    CHECK(back.tau == record.tau);
    CHECK(back.rq == record.rq);
    CHECK(back.sq == record.sq);
    CHECK(back.pq == record.pq);
    CHECK(back.ap == record.ap);
    CHECK(back.dice == record.dice);
    REQUIRE(back.per_class.count(3) == 1);
    CHECK(back.per_class.at(3).iou_sum == cm.iou_sum);
    CHECK(back.per_class.at(3).sq == cm.sq);
}

TEST_CASE("sweep SVG carries three series over the full grid") {
    SweepResult result;
    for (double tau : default_tau_grid()) {
        MetricsRecord row;
        row.tau = tau;
        row.rq = 1.0 - tau / 2.0;
        row.sq = 0.5 + tau / 3.0;
        row.pq = row.rq * *row.sq;
        row.ap = 0.4;
        row.dice = 0.4;
        result.rows.push_back(row);
    }
    result.optimal_tau = 0.05;

    oracle::TempDir dir("svg");
    io::write_sweep_svg(result, dir.path / "sweep.svg");
    const std::string svg = slurp(dir.path / "sweep.svg");
    CHECK(count_occurrences(svg, "<polyline") == 3);
    CHECK(svg.find("series-PQ") != std::string::npos);
    CHECK(svg.find("series-RQ") != std::string::npos);
    CHECK(svg.find("series-SQ") != std::string::npos);
    CHECK(svg.find(">PQ</text>") != std::string::npos);
    CHECK(count_occurrences(svg, "0.05") >= 1);
    CHECK(count_occurrences(svg, "0.90") >= 1);
}

TEST_CASE("manifest: optional columns survive a round trip") {
    std::vector<io::ManifestItem> items;
    items.push_back({"a", "imgs/a.png", "gt/a.png", std::nullopt, "patient-1", std::nullopt});
    items.push_back({"b", "imgs/b.png", "gt/b.png", std::string("pred/b.png"), "patient-2", 3});
    items.push_back({"c,with,commas", "imgs/c.png", "gt/c.png", std::nullopt, std::nullopt, 0});

    oracle::TempDir dir("manifest");
    io::write_manifest(items, dir.path / "manifest.csv");
    const std::vector<io::ManifestItem> back = io::read_manifest(dir.path / "manifest.csv");
    REQUIRE(back.size() == 3);
    CHECK(back[0].group == "patient-1");
    CHECK(!back[0].fold.has_value());
    CHECK(back[1].pred_path == "pred/b.png");
    CHECK(back[1].fold == 3);
    CHECK(back[2].image_id == "c,with,commas");
    CHECK(back[2].fold == 0);
}

TEST_CASE("report rendering ignores the C locale") {
    const char* previous = std::setlocale(LC_ALL, nullptr);
    const std::string saved = previous ? previous : "C";
    const bool switched = std::setlocale(LC_ALL, "de_DE.UTF-8") != nullptr ||
                          std::setlocale(LC_ALL, "fr_FR.UTF-8") != nullptr;
    Summary summary;
    summary.tau = 0.5;
    summary.fold_count = 2;
    summary.metrics["pq"] = {0.2544, 0.0187, 2};
    summary.metrics["rq"] = {0.5, 0.25, 2};
    summary.metrics["sq"] = {0.5, 0.25, 2};
    summary.metrics["ap"] = {0.5, 0.25, 2};
    summary.metrics["dice"] = {0.5, 0.25, 2};
    oracle::TempDir dir("locale");
    io::write_summary_csv(summary, dir.path / "summary.csv");
    std::setlocale(LC_ALL, saved.c_str());
    const std::string text = slurp(dir.path / "summary.csv");
    CHECK(text.find("25.44") != std::string::npos);
    CHECK(text.find("25,44") == std::string::npos);
    (void)switched;
}

}  // TEST_SUITE
