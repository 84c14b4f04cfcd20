#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "panq/experiment.hpp"

using namespace panq;

namespace {

void add_run(PanopticMap& map, std::uint32_t id, int category, int y, int x0, int x1,
             std::optional<double> confidence = std::nullopt) {
    std::int64_t area = 0;
    for (int x = x0; x < x1; ++x) {
        map.id_map[static_cast<std::size_t>(y) * map.width + x] = id;
        ++area;
    }
    map.segments.push_back({id, category, area, confidence});
}

MetricsRecord record_with(double tau, double rq, std::optional<double> sq, double pq, double ap,
                          double dice_value) {
    MetricsRecord r;
    r.tau = tau;
    r.rq = rq;
    r.sq = sq;
    r.pq = pq;
    r.ap = ap;
    r.dice = dice_value;
    return r;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("default grid runs 0.05 to 0.90 in 18 steps") {
    const std::vector<double> grid = default_tau_grid();
    REQUIRE(grid.size() == 18);
    CHECK(grid.front() == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(grid.back() == doctest::Approx(0.90).epsilon(1e-15));
    for (std::size_t i = 1; i < grid.size(); ++i)
        CHECK(grid[i] - grid[i - 1] == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("sweep: IoU exactly 0.5 everywhere plateaus then drops; optimal tau is 0.05") {
    // each pred is one pixel of its 2-pixel gt: intersection 1, union 2
    PanopticMap gt(32, 4), pred(32, 4);
    add_run(gt, 1, 1, 0, 0, 2);
    add_run(pred, 1, 1, 0, 0, 1, 0.9);
    add_run(gt, 2, 1, 2, 10, 12);
    add_run(pred, 2, 1, 2, 10, 11, 0.8);

    const DatasetPair pair{"img", &gt, &pred};
    EvalConfig cfg;
    cfg.jobs = 1;
    const SweepResult result = sweep_dataset({&pair, 1}, default_tau_grid(), cfg);
    REQUIRE(result.rows.size() == 18);
    for (const MetricsRecord& row : result.rows) {
        if (row.tau <= 0.5) {
            CHECK(row.pq == doctest::Approx(0.5).epsilon(1e-12));  // RQ 1 * SQ 0.5
            CHECK(row.rq == doctest::Approx(1.0).epsilon(1e-12));
        } else {
            CHECK(row.pq == 0.0);
            CHECK(row.rq == 0.0);
        }
    }
    CHECK(result.optimal_tau == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("sweep: a single exact match scores PQ 1 at every threshold, optimal 0.05") {
    PanopticMap gt(16, 2);
    add_run(gt, 1, 1, 0, 0, 8);
    PanopticMap pred = gt;
    pred.segments[0].confidence = 0.7;
    const DatasetPair pair{"img", &gt, &pred};
    EvalConfig cfg;
    cfg.jobs = 1;
    const SweepResult result = sweep_dataset({&pair, 1}, default_tau_grid(), cfg);
    for (const MetricsRecord& row : result.rows) CHECK(row.pq == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.optimal_tau == doctest::Approx(0.05).epsilon(1e-15));
}

TEST_CASE("sweep: RQ never increases and SQ never decreases along the grid") {
    std::mt19937 rng(79);
    oracle::MapSpec spec;
    spec.with_confidence = true;
    for (int trial = 0; trial < 15; ++trial) {
        const PanopticMap gt = oracle::random_map(rng, spec);
        const PanopticMap pred = oracle::perturbed_map(rng, gt, spec);
        const DatasetPair pair{"img", &gt, &pred};
        EvalConfig cfg;
        cfg.jobs = 1;
        const SweepResult result = sweep_dataset({&pair, 1}, default_tau_grid(), cfg);
        for (std::size_t i = 1; i < result.rows.size(); ++i) {
            CHECK(result.rows[i].rq <= result.rows[i - 1].rq + 1e-12);
            if (result.rows[i].sq && result.rows[i - 1].sq)
                CHECK(*result.rows[i].sq >= *result.rows[i - 1].sq - 1e-12);
        }
    }
}

TEST_CASE("sweep: grids must be non-empty, increasing and inside (0, 1]") {
    PanopticMap gt(8, 2);
    add_run(gt, 1, 1, 0, 0, 4);
    const DatasetPair pair{"img", &gt, &gt};
    EvalConfig cfg;
    cfg.jobs = 1;
    const PreparedDataset prepared = prepare_dataset({&pair, 1}, 1);
    CHECK_THROWS_AS(sweep(prepared, std::vector<double>{}, cfg), EmptyGrid);
    CHECK_THROWS_AS(sweep(prepared, std::vector<double>{0.5, 0.5}, cfg), EmptyGrid);
    CHECK_THROWS_AS(sweep(prepared, std::vector<double>{0.0, 0.5}, cfg), EmptyGrid);
    CHECK_THROWS_AS(sweep(prepared, std::vector<double>{0.5, 1.5}, cfg), EmptyGrid);
}

TEST_CASE("kfold: ten ungrouped items split into five folds of two") {
    std::vector<SplitItem> items;
    for (int i = 0; i < 10; ++i) items.push_back({"item-" + std::to_string(i), std::nullopt});
    const FoldPlan plan = kfold_split(items, 5, 1);
    std::map<int, int> sizes;
    for (int fold : plan.fold_of) ++sizes[fold];
    REQUIRE(sizes.size() == 5);
    for (const auto& [fold, size] : sizes) CHECK(size == 2);
}

TEST_CASE("kfold: grouped items keep each patient inside one fold") {
    const std::vector<std::pair<std::string, int>> patients = {
        {"A", 3}, {"B", 2}, {"C", 2}, {"D", 2}, {"E", 1}};
    std::vector<SplitItem> items;
    for (const auto& [patient, count] : patients)
        for (int i = 0; i < count; ++i)
            items.push_back({patient + "-" + std::to_string(i), patient});
    const FoldPlan plan = kfold_split(items, 5, 7);

    std::map<std::string, std::set<int>> folds_of_patient;
    for (std::size_t i = 0; i < items.size(); ++i)
        folds_of_patient[*items[i].group].insert(plan.fold_of[i]);
    for (const auto& [patient, folds] : folds_of_patient) CHECK(folds.size() == 1);
}

TEST_CASE("kfold: same seed reproduces the same plan, different seeds differ") {
    std::vector<SplitItem> items;
    for (int i = 0; i < 40; ++i) items.push_back({"img-" + std::to_string(i), std::nullopt});
    const FoldPlan a = kfold_split(items, 5, 42);
    const FoldPlan b = kfold_split(items, 5, 42);
    CHECK(a.fold_of == b.fold_of);
    const FoldPlan c = kfold_split(items, 5, 43);
    CHECK(a.fold_of != c.fold_of);
}

TEST_CASE("kfold: assignments partition the items with balanced group counts") {
    std::mt19937 rng(83);
    std::vector<SplitItem> items;
    for (int i = 0; i < 101; ++i) {
        SplitItem item{"img-" + std::to_string(i), std::nullopt};
        if (i % 3 != 0) item.group = "g" + std::to_string(i % 17);
        items.push_back(item);
    }
    const FoldPlan plan = kfold_split(items, 4, rng());
    REQUIRE(plan.fold_of.size() == items.size());
    std::set<std::string> groups_seen;
    std::map<int, std::set<std::string>> groups_per_fold;
    for (std::size_t i = 0; i < items.size(); ++i) {
        CHECK(plan.fold_of[i] >= 0);
        CHECK(plan.fold_of[i] < 4);
        const std::string key = items[i].group ? *items[i].group : "!" + items[i].id;
        groups_seen.insert(key);
        groups_per_fold[plan.fold_of[i]].insert(key);
    }
    std::size_t min_groups = items.size(), max_groups = 0;
    for (const auto& [fold, groups] : groups_per_fold) {
        min_groups = std::min(min_groups, groups.size());
        max_groups = std::max(max_groups, groups.size());
    }
    CHECK(max_groups - min_groups <= 1);
}

TEST_CASE("kfold: too few items or groups is an error") {
    std::vector<SplitItem> three = {{"a", std::nullopt}, {"b", std::nullopt}, {"c", std::nullopt}};
    CHECK_THROWS_AS(kfold_split(three, 5, 0), TooFewItems);
    CHECK_THROWS_AS(kfold_split(three, 1, 0), TooFewItems);
    std::vector<SplitItem> one_group = {{"a", "G"}, {"b", "G"}, {"c", "G"}, {"d", "G"}};
    CHECK_THROWS_AS(kfold_split(one_group, 2, 0), TooFewItems);
}

TEST_CASE("aggregate: identical folds have zero deviation") {
    std::vector<MetricsRecord> folds(5, record_with(0.5, 0.4, 0.6, 0.24, 0.5, 0.45));
    const Summary summary = aggregate(folds);
    for (const char* key : {"rq", "sq", "pq", "ap", "dice"}) {
        CHECK(summary.metrics.at(key).stddev == 0.0);
        CHECK(summary.metrics.at(key).n == 5);
    }
    CHECK(summary.metrics.at("pq").mean == doctest::Approx(0.24).epsilon(1e-12));
}

TEST_CASE("aggregate: values 1..5 give mean 3 and sample std sqrt(2.5)") {
    std::vector<MetricsRecord> folds;
    for (int i = 1; i <= 5; ++i)
        folds.push_back(record_with(0.5, i, i, i, i, i));  // scaled fixture
    const Summary summary = aggregate(folds);
    CHECK(summary.metrics.at("pq").mean == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(summary.metrics.at("pq").stddev == doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
    CHECK(std::abs(summary.metrics.at("pq").stddev - 1.5811) < 1e-4);
}

TEST_CASE("aggregate: undefined SQ entries shrink that metric's n with a notice") {
    std::vector<MetricsRecord> folds = {
        record_with(0.5, 0.5, 0.5, 0.25, 0.5, 0.5),
        record_with(0.5, 0.0, std::nullopt, 0.0, 0.0, 0.0),
        record_with(0.5, 0.4, 0.7, 0.28, 0.4, 0.4),
    };
    const Summary summary = aggregate(folds);
    CHECK(summary.metrics.at("sq").n == 2);
    CHECK(summary.metrics.at("rq").n == 3);
    REQUIRE(summary.notices.size() == 1);
}

TEST_CASE("aggregate: mixed thresholds and single folds are rejected") {
    std::vector<MetricsRecord> mixed = {record_with(0.5, 1, 1, 1, 1, 1),
                                        record_with(0.3, 1, 1, 1, 1, 1)};
    CHECK_THROWS_AS(aggregate(mixed), MixedThresholds);
    std::vector<MetricsRecord> one = {record_with(0.5, 1, 1, 1, 1, 1)};
    CHECK_THROWS_AS(aggregate(one), TooFewFolds);
}

TEST_CASE("aggregate: shifting every fold by a constant shifts the mean, not the std") {
    std::mt19937 rng(89);
    std::uniform_real_distribution<double> value(0.0, 0.5);
    std::vector<MetricsRecord> base;
    for (int i = 0; i < 5; ++i)
        base.push_back(record_with(0.5, value(rng), value(rng), value(rng), value(rng), value(rng)));
    std::vector<MetricsRecord> shifted = base;
    const double c = 0.25;
    for (MetricsRecord& r : shifted) {
        r.rq += c;
        *r.sq += c;
        r.pq += c;
        r.ap += c;
        r.dice += c;
    }
    const Summary a = aggregate(base);
    const Summary b = aggregate(shifted);
    for (const char* key : {"rq", "sq", "pq", "ap", "dice"}) {
        CHECK(b.metrics.at(key).mean ==
              doctest::Approx(a.metrics.at(key).mean + c).epsilon(1e-12));
        CHECK(b.metrics.at(key).stddev == doctest::Approx(a.metrics.at(key).stddev).epsilon(1e-9));
    }
}

}  // TEST_SUITE
