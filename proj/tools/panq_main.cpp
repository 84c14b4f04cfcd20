// panq: synthesize panoptic ground truth from box annotations and score
// panoptic/instance/semantic predictions (RQ/SQ/PQ, AP, Dice) with threshold
// sweeps, grouped k-fold splits and fold aggregation.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "panq/experiment.hpp"
#include "panq/io.hpp"
#include "panq/metrics.hpp"
#include "panq/synthesis.hpp"

#include "../src/parallel.hpp"

namespace fs = std::filesystem;

namespace {

void log_warnings(const std::vector<panq::Warning>& warnings) {
    for (const panq::Warning& w : warnings) {
        nlohmann::ordered_json j;
        j["level"] = "warning";
        j["code"] = w.code;
        j["image_id"] = w.image_id;
        j["message"] = w.message;
        std::cerr << j.dump() << "\n";
    }
}

void log_error(const std::string& message) {
    nlohmann::ordered_json j;
    j["level"] = "error";
    j["message"] = message;
    std::cerr << j.dump() << "\n";
}

std::vector<std::string> png_ids(const fs::path& dir) {
    std::vector<std::string> ids;
    for (const fs::directory_entry& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png")
            ids.push_back(entry.path().stem().string());
    std::sort(ids.begin(), ids.end());
    return ids;
}

bool same_categories(const panq::CategoryTable& a, const panq::CategoryTable& b) {
    if (a.entries.size() != b.entries.size()) return false;
    for (const panq::CategoryTable::Entry& e : a.entries) {
        const panq::CategoryTable::Entry* other = b.find(e.id);
        if (!other || other->name != e.name) return false;
    }
    return true;
}

panq::CategoryTable derive_categories(const std::vector<panq::PanopticMap>& maps) {
    std::set<int> ids;
    for (const panq::PanopticMap& map : maps)
        for (const panq::Segment& s : map.segments) ids.insert(s.category_id);
    std::vector<panq::CategoryTable::Entry> entries;
    for (int id : ids) entries.push_back({id, "category-" + std::to_string(id)});
    return panq::CategoryTable::from_entries(std::move(entries));
}

struct EvalInputs {
    std::vector<std::string> ids;
    std::vector<panq::PanopticMap> gt;
    std::vector<panq::PanopticMap> pred;
    std::vector<panq::DatasetPair> pairs;
};

EvalInputs load_eval_inputs(const fs::path& gt_dir, const fs::path& pred_dir,
                            const std::string& categories_path, int jobs,
                            std::vector<panq::Warning>& warnings) {
    EvalInputs inputs;
    inputs.ids = png_ids(gt_dir);
    if (inputs.ids.empty()) throw panq::EmptyInput("no panoptic PNGs under '" + gt_dir.string() + "'");

    for (const std::string& id : png_ids(pred_dir))
        if (!std::binary_search(inputs.ids.begin(), inputs.ids.end(), id))
            warnings.push_back({id, "unmatched_prediction",
                                "prediction '" + id + "' has no ground truth; skipped"});

    inputs.gt.resize(inputs.ids.size());
    inputs.pred.resize(inputs.ids.size());
    std::vector<std::optional<panq::Warning>> missing(inputs.ids.size());
    panq::detail::parallel_for(inputs.ids.size(), jobs, [&](std::size_t i) {
        const std::string& id = inputs.ids[i];
        inputs.gt[i] = panq::io::read_panoptic(gt_dir / (id + ".png"), gt_dir / (id + ".json"));
        const fs::path pred_png = pred_dir / (id + ".png");
        if (fs::exists(pred_png)) {
            inputs.pred[i] = panq::io::read_panoptic(pred_png, pred_dir / (id + ".json"));
            if (inputs.pred[i].width != inputs.gt[i].width ||
                inputs.pred[i].height != inputs.gt[i].height)
                throw panq::DimensionMismatch("prediction '" + id + "' size differs from ground truth");
        } else {
            inputs.pred[i] = panq::PanopticMap(inputs.gt[i].width, inputs.gt[i].height);
            missing[i] = panq::Warning{id, "missing_prediction",
                                       "no prediction for '" + id + "'; scored as empty"};
        }
    });
    for (const auto& w : missing)
        if (w) warnings.push_back(*w);

    panq::CategoryTable cats;
    if (!categories_path.empty()) {
        cats = panq::io::read_categories(categories_path);
    } else {
        const fs::path gt_cats = gt_dir / "categories.json";
        const fs::path pred_cats = pred_dir / "categories.json";
        if (fs::exists(gt_cats) && fs::exists(pred_cats) &&
            !same_categories(panq::io::read_categories(gt_cats),
                             panq::io::read_categories(pred_cats)))
            throw panq::CategoryTableMismatch("'" + gt_cats.string() + "' and '" +
                                              pred_cats.string() + "' disagree");
        if (fs::exists(gt_cats)) {
            cats = panq::io::read_categories(gt_cats);
        } else if (fs::exists(pred_cats)) {
            cats = panq::io::read_categories(pred_cats);
        } else {
            std::vector<panq::PanopticMap> all = inputs.gt;
            all.insert(all.end(), inputs.pred.begin(), inputs.pred.end());
            cats = derive_categories(all);
        }
    }
    for (std::size_t i = 0; i < inputs.ids.size(); ++i) {
        panq::validate_panoptic(inputs.gt[i], cats);
        panq::validate_panoptic(inputs.pred[i], cats);
        inputs.pairs.push_back({inputs.ids[i], &inputs.gt[i], &inputs.pred[i]});
    }
    return inputs;
}

int run_synthesize(const fs::path& images_dir, const fs::path& annotations_csv,
                   const fs::path& out_dir, const std::string& categories_path, double sigma,
                   int hull_k, int jobs, const panq::io::BoxColumns& columns) {
    const std::vector<panq::BoxAnnotation> annotations =
        panq::io::read_box_annotations(annotations_csv, columns);
    std::map<std::string, std::vector<panq::BoxAnnotation>> by_image;
    for (const panq::BoxAnnotation& a : annotations) by_image[a.image_id].push_back(a);

    panq::CategoryTable cats;
    if (!categories_path.empty()) {
        cats = panq::io::read_categories(categories_path);
    } else {
        std::set<int> ids;
        for (const panq::BoxAnnotation& a : annotations) ids.insert(a.category_id);
        std::vector<panq::CategoryTable::Entry> entries;
        for (int id : ids) entries.push_back({id, "category-" + std::to_string(id)});
        cats = panq::CategoryTable::from_entries(std::move(entries));
    }

    const std::vector<std::string> ids = png_ids(images_dir);
    if (ids.empty()) throw panq::EmptyInput("no PNG images under '" + images_dir.string() + "'");
    for (const auto& [image_id, boxes] : by_image)
        if (!std::binary_search(ids.begin(), ids.end(), image_id))
            throw panq::DecodeError("annotations reference missing image '" + image_id + "'");

    fs::create_directories(out_dir);
    panq::SynthesisConfig cfg;
    cfg.sigma = sigma;
    cfg.hull_k_start = hull_k;

    std::vector<std::vector<panq::Warning>> slots(ids.size());
    panq::detail::parallel_for(ids.size(), jobs, [&](std::size_t i) {
        const std::string& id = ids[i];
        const panq::GrayImage img = panq::io::read_gray(images_dir / (id + ".png"));
        const auto it = by_image.find(id);
        static const std::vector<panq::BoxAnnotation> none;
        const panq::PanopticMap map =
            panq::build_panoptic(img, it == by_image.end() ? none : it->second, cfg, cats, &slots[i]);
        panq::io::write_panoptic(map, out_dir / (id + ".png"), out_dir / (id + ".json"), id);
    });

    std::vector<panq::Warning> warnings;
    for (std::vector<panq::Warning>& slot : slots)
        warnings.insert(warnings.end(), slot.begin(), slot.end());
    log_warnings(warnings);
    panq::io::write_warnings(warnings, out_dir / "warnings.jsonl");
    panq::io::write_categories(cats, out_dir / "categories.json");
    return 0;
}

int run_evaluate(const fs::path& gt_dir, const fs::path& pred_dir, const fs::path& out_dir,
                 const std::string& categories_path, const panq::EvalConfig& cfg) {
    std::vector<panq::Warning> warnings;
    const EvalInputs inputs = load_eval_inputs(gt_dir, pred_dir, categories_path, cfg.jobs, warnings);
    const panq::MetricsRecord record = panq::evaluate_dataset(inputs.pairs, cfg, &warnings);

    fs::create_directories(out_dir);
    panq::io::write_metrics_json(record, out_dir / "report.json");
    panq::io::write_metrics_csv(record, out_dir / "report.csv");
    log_warnings(warnings);
    panq::io::write_warnings(warnings, out_dir / "warnings.jsonl");

    std::ifstream csv(out_dir / "report.csv");
    std::string line;
    std::getline(csv, line);
    std::cout << line << "\n";
    if (std::getline(csv, line)) std::cout << line << "\n";
    return 0;
}

int run_sweep(const fs::path& gt_dir, const fs::path& pred_dir, const fs::path& out_dir,
              const std::string& categories_path, const panq::EvalConfig& cfg,
              const std::vector<double>& taus) {
    std::vector<panq::Warning> warnings;
    const EvalInputs inputs = load_eval_inputs(gt_dir, pred_dir, categories_path, cfg.jobs, warnings);
    const panq::PreparedDataset prepared = panq::prepare_dataset(inputs.pairs, cfg.jobs, &warnings);
    const panq::SweepResult result = panq::sweep(prepared, taus, cfg);

    fs::create_directories(out_dir);
    panq::io::write_sweep_json(result, out_dir / "sweep.json");
    panq::io::write_sweep_csv(result, out_dir / "sweep.csv");
    panq::io::write_sweep_svg(result, out_dir / "sweep.svg");
    log_warnings(warnings);
    panq::io::write_warnings(warnings, out_dir / "warnings.jsonl");
    std::cout << "optimal_tau=" << result.optimal_tau << "\n";
    return 0;
}

int run_split(const fs::path& manifest_path, const fs::path& out_path, int k, std::uint64_t seed,
              bool ungrouped) {
    std::vector<panq::io::ManifestItem> items = panq::io::read_manifest(manifest_path);
    std::vector<panq::SplitItem> split_items;
    for (const panq::io::ManifestItem& item : items)
        split_items.push_back({item.image_id, ungrouped ? std::nullopt : item.group});
    const panq::FoldPlan plan = panq::kfold_split(split_items, k, seed);
    for (std::size_t i = 0; i < items.size(); ++i) items[i].fold = plan.fold_of[i];
    panq::io::write_manifest(items, out_path);
    return 0;
}

int run_aggregate(const std::vector<std::string>& fold_paths, const fs::path& out_dir) {
    std::vector<panq::MetricsRecord> records;
    for (const std::string& path : fold_paths) records.push_back(panq::io::read_metrics_json(path));
    const panq::Summary summary = panq::aggregate(records);
    for (const std::string& notice : summary.notices)
        log_warnings({{std::string(), "aggregate", notice}});
    fs::create_directories(out_dir);
    panq::io::write_summary_json(summary, out_dir / "summary.json");
    panq::io::write_summary_csv(summary, out_dir / "summary.csv");

    std::ifstream csv(out_dir / "summary.csv");
    std::string line;
    while (std::getline(csv, line)) std::cout << line << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"panoptic mask synthesis and segmentation evaluation"};
    app.require_subcommand(1);

    // synthesize
    auto* synth = app.add_subcommand("synthesize", "build panoptic ground truth from box annotations");
    std::string synth_images, synth_annotations, synth_out, synth_categories;
    double sigma = 7.0;
    int hull_k = 3;
    int synth_jobs = 0;
    panq::io::BoxColumns columns;
    synth->add_option("--images", synth_images, "directory of grayscale PNGs")->required();
    synth->add_option("--annotations", synth_annotations, "bounding-box CSV")->required();
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--categories", synth_categories, "categories JSON (derived from data when absent)");
    synth->add_option("--sigma", sigma, "Gaussian blur strength")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--hull-k", hull_k, "starting neighbour count for the concave hull")
        ->check(CLI::Range(3, 1000))
        ->capture_default_str();
    synth->add_option("--jobs", synth_jobs, "worker threads (0 = all cores)");
    synth->add_option("--col-image-id", columns.image_id)->capture_default_str();
    synth->add_option("--col-xmin", columns.xmin)->capture_default_str();
    synth->add_option("--col-ymin", columns.ymin)->capture_default_str();
    synth->add_option("--col-xmax", columns.xmax)->capture_default_str();
    synth->add_option("--col-ymax", columns.ymax)->capture_default_str();
    synth->add_option("--col-category", columns.category)->capture_default_str();

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "score predictions against ground truth at one threshold");
    std::string eval_gt, eval_pred, eval_out, eval_categories;
    panq::EvalConfig eval_cfg;
    bool class_agnostic = false;
    eval->add_option("--gt", eval_gt, "ground-truth panoptic directory")->required();
    eval->add_option("--pred", eval_pred, "prediction panoptic directory")->required();
    eval->add_option("--out", eval_out, "output directory")->required();
    eval->add_option("--categories", eval_categories, "categories JSON");
    eval->add_option("--tau", eval_cfg.tau, "IoU threshold")
        ->check(CLI::Range(1e-9, 1.0))
        ->capture_default_str();
    eval->add_flag("--class-agnostic", class_agnostic, "match segments across categories");
    eval->add_flag("--void-forgiveness", eval_cfg.void_forgiveness,
                   "discard unmatched predictions mostly over GT void");
    eval->add_flag("--micro", eval_cfg.micro, "pool counts across categories");
    eval->add_flag("--per-image-dice", eval_cfg.per_image_dice, "average Dice per image");
    eval->add_flag("--exact-ap", eval_cfg.exact_ap, "all-points AP interpolation");
    eval->add_option("--jobs", eval_cfg.jobs, "worker threads (0 = all cores)");

    // sweep
    auto* swp = app.add_subcommand("sweep", "evaluate across an IoU-threshold grid");
    std::string sweep_gt, sweep_pred, sweep_out, sweep_categories;
    panq::EvalConfig sweep_cfg;
    bool sweep_class_agnostic = false;
    double tau_min = 0.05, tau_max = 0.90, tau_step = 0.05;
    swp->add_option("--gt", sweep_gt, "ground-truth panoptic directory")->required();
    swp->add_option("--pred", sweep_pred, "prediction panoptic directory")->required();
    swp->add_option("--out", sweep_out, "output directory")->required();
    swp->add_option("--categories", sweep_categories, "categories JSON");
    swp->add_option("--tau-min", tau_min)->capture_default_str();
    swp->add_option("--tau-max", tau_max)->capture_default_str();
    swp->add_option("--tau-step", tau_step)->check(CLI::PositiveNumber)->capture_default_str();
    swp->add_flag("--class-agnostic", sweep_class_agnostic, "match segments across categories");
    swp->add_flag("--void-forgiveness", sweep_cfg.void_forgiveness,
                  "discard unmatched predictions mostly over GT void");
    swp->add_flag("--micro", sweep_cfg.micro, "pool counts across categories");
    swp->add_flag("--per-image-dice", sweep_cfg.per_image_dice, "average Dice per image");
    swp->add_flag("--exact-ap", sweep_cfg.exact_ap, "all-points AP interpolation");
    swp->add_option("--jobs", sweep_cfg.jobs, "worker threads (0 = all cores)");

    // split
    auto* split = app.add_subcommand("split", "assign k-fold indices to a dataset manifest");
    std::string split_manifest, split_out;
    int split_k = 5;
    std::uint64_t split_seed = 0;
    bool split_ungrouped = false;
    split->add_option("--manifest", split_manifest, "dataset manifest CSV")->required();
    split->add_option("--out", split_out, "output CSV (defaults to rewriting the manifest)");
    split->add_option("--k", split_k, "fold count")->check(CLI::Range(2, 1000))->capture_default_str();
    split->add_option("--seed", split_seed, "shuffle seed")->capture_default_str();
    split->add_flag("--ungrouped", split_ungrouped, "ignore the manifest group column");

    // aggregate
    auto* agg = app.add_subcommand("aggregate", "mean +/- std across fold metric reports");
    std::vector<std::string> fold_paths;
    std::string agg_out;
    agg->add_option("--out", agg_out, "output directory")->required();
    agg->add_option("folds", fold_paths, "fold report.json files")->required()->expected(-1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed())
            return run_synthesize(synth_images, synth_annotations, synth_out, synth_categories,
                                  sigma, hull_k, synth_jobs, columns);
        if (eval->parsed()) {
            eval_cfg.class_aware = !class_agnostic;
            return run_evaluate(eval_gt, eval_pred, eval_out, eval_categories, eval_cfg);
        }
        if (swp->parsed()) {
            sweep_cfg.class_aware = !sweep_class_agnostic;
            std::vector<double> taus;
            if (tau_min == 0.05 && tau_max == 0.90 && tau_step == 0.05) {
                taus = panq::default_tau_grid();
            } else {
                for (int i = 0; tau_min + i * tau_step <= tau_max + 1e-12; ++i)
                    taus.push_back(tau_min + i * tau_step);
            }
            return run_sweep(sweep_gt, sweep_pred, sweep_out, sweep_categories, sweep_cfg, taus);
        }
        if (split->parsed())
            return run_split(split_manifest, split_out.empty() ? split_manifest : split_out,
                             split_k, split_seed, split_ungrouped);
        if (agg->parsed()) return run_aggregate(fold_paths, agg_out);
    } catch (const panq::Error& e) {
        log_error(e.what());
        return 1;
    } catch (const std::exception& e) {
        log_error(e.what());
        return 1;
    }
    return 0;
}
