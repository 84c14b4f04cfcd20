#include <charconv>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "panq/io.hpp"

namespace panq::io {

namespace {

constexpr const char* kUndefinedCell = "—";  // em dash
constexpr const char* kPlusMinus = "±";

// Locale-independent fixed-point rendering.
std::string fixed(double value, int decimals) {
    char buf[64];
    const auto [ptr, ec] =
        std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
    return std::string(buf, ptr);
}

// Tables render ratios scaled to 0-100 with two decimals.
std::string percent_cell(double ratio) { return fixed(ratio * 100.0, 2); }
std::string percent_cell(const std::optional<double>& ratio) {
    return ratio ? percent_cell(*ratio) : std::string(kUndefinedCell);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw WriteError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw WriteError("short write to '" + path.string() + "'");
}

nlohmann::ordered_json class_metrics_json(const ClassMetrics& cm) {
    nlohmann::ordered_json j;
    j["category_id"] = cm.category_id;
    j["tp"] = cm.tp_count;
    j["fp"] = cm.fp_count;
    j["fn"] = cm.fn_count;
    j["iou_sum"] = cm.iou_sum;
    j["rq"] = cm.rq;
    j["sq"] = cm.sq ? nlohmann::ordered_json(*cm.sq) : nlohmann::ordered_json(nullptr);
    j["pq"] = cm.pq;
    j["ap"] = cm.ap ? nlohmann::ordered_json(*cm.ap) : nlohmann::ordered_json(nullptr);
    j["dice"] = cm.dice ? nlohmann::ordered_json(*cm.dice) : nlohmann::ordered_json(nullptr);
    return j;
}

nlohmann::ordered_json record_json(const MetricsRecord& record) {
    nlohmann::ordered_json j;
    j["tau"] = record.tau;
    j["rq"] = record.rq;
    j["sq"] = record.sq ? nlohmann::ordered_json(*record.sq) : nlohmann::ordered_json(nullptr);
    j["pq"] = record.pq;
    j["ap"] = record.ap;
    j["dice"] = record.dice;
    j["per_class"] = nlohmann::ordered_json::object();
    for (const auto& [cat, cm] : record.per_class)
        j["per_class"][std::to_string(cat)] = class_metrics_json(cm);
    return j;
}

std::string record_csv_rows(const MetricsRecord& record) {
    std::string text = "scope,tau,rq,sq,pq,ap,dice\n";
    text += "mean," + fixed(record.tau, 2) + "," + percent_cell(record.rq) + "," +
            percent_cell(record.sq) + "," + percent_cell(record.pq) + "," +
            percent_cell(record.ap) + "," + percent_cell(record.dice) + "\n";
    for (const auto& [cat, cm] : record.per_class) {
        text += "category:" + std::to_string(cat) + "," + fixed(record.tau, 2) + "," +
                percent_cell(cm.rq) + "," + percent_cell(cm.sq) + "," + percent_cell(cm.pq) + "," +
                percent_cell(cm.ap) + "," + percent_cell(cm.dice) + "\n";
    }
    return text;
}

}  // namespace

void write_metrics_json(const MetricsRecord& record, const std::filesystem::path& path) {
    write_text(path, record_json(record).dump(2) + "\n");
}

void write_metrics_csv(const MetricsRecord& record, const std::filesystem::path& path) {
    write_text(path, record_csv_rows(record));
}

MetricsRecord read_metrics_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DecodeError("cannot open '" + path.string() + "' for reading");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError("bad JSON in '" + path.string() + "': " + e.what());
    }
    MetricsRecord record;
    try {
        record.tau = j.at("tau").get<double>();
        record.rq = j.at("rq").get<double>();
        record.pq = j.at("pq").get<double>();
        record.ap = j.at("ap").get<double>();
        record.dice = j.at("dice").get<double>();
        if (!j.at("sq").is_null()) record.sq = j["sq"].get<double>();
        const nlohmann::json per_class = j.value("per_class", nlohmann::json::object());
        for (const auto& [key, value] : per_class.items()) {
            ClassMetrics cm;
            cm.category_id = value.at("category_id").get<int>();
            cm.tp_count = value.at("tp").get<std::int64_t>();
            cm.fp_count = value.at("fp").get<std::int64_t>();
            cm.fn_count = value.at("fn").get<std::int64_t>();
            cm.iou_sum = value.at("iou_sum").get<double>();
            cm.rq = value.at("rq").get<double>();
            cm.pq = value.at("pq").get<double>();
            if (!value.at("sq").is_null()) cm.sq = value["sq"].get<double>();
            if (!value.at("ap").is_null()) cm.ap = value["ap"].get<double>();
            if (!value.at("dice").is_null()) cm.dice = value["dice"].get<double>();
            record.per_class[cm.category_id] = cm;
        }
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError("'" + path.string() + "' is not a metrics record: " + e.what());
    }
    return record;
}

void write_sweep_json(const SweepResult& result, const std::filesystem::path& path) {
    if (result.rows.empty()) throw EmptyInput("sweep result has no rows");
    nlohmann::ordered_json j;
    j["optimal_tau"] = result.optimal_tau;
    j["rows"] = nlohmann::ordered_json::array();
    for (const MetricsRecord& row : result.rows) j["rows"].push_back(record_json(row));
    write_text(path, j.dump(2) + "\n");
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
    if (result.rows.empty()) throw EmptyInput("sweep result has no rows");
    std::string text = "tau,rq,sq,pq,ap,dice\n";
    for (const MetricsRecord& row : result.rows) {
        text += fixed(row.tau, 2) + "," + percent_cell(row.rq) + "," + percent_cell(row.sq) + "," +
                percent_cell(row.pq) + "," + percent_cell(row.ap) + "," + percent_cell(row.dice) +
                "\n";
    }
    write_text(path, text);
}

namespace {

struct Series {
    const char* name;
    const char* color;
    std::vector<std::pair<double, double>> points;  // (tau, value)
};

}  // namespace

void write_sweep_svg(const SweepResult& result, const std::filesystem::path& path,
                     const std::string& title) {
    if (result.rows.empty()) throw EmptyInput("sweep result has no rows");

    const double width = 720, height = 480;
    const double left = 70, right = 20, top = 48, bottom = 64;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    const double tau_min = result.rows.front().tau;
    const double tau_max = result.rows.back().tau;
    const double tau_span = tau_max > tau_min ? tau_max - tau_min : 1.0;

    const auto x_of = [&](double tau) { return left + (tau - tau_min) / tau_span * plot_w; };
    const auto y_of = [&](double v) { return top + (1.0 - v) * plot_h; };

    Series series[3] = {{"PQ", "#4c72b0", {}}, {"RQ", "#dd8452", {}}, {"SQ", "#55a868", {}}};
    for (const MetricsRecord& row : result.rows) {
        series[0].points.emplace_back(row.tau, row.pq);
        series[1].points.emplace_back(row.tau, row.rq);
        if (row.sq) series[2].points.emplace_back(row.tau, *row.sq);
    }

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) +
           "\" height=\"" + fixed(height, 0) + "\" viewBox=\"0 0 " + fixed(width, 0) + " " +
           fixed(height, 0) + "\">\n";
    svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "  <text x=\"" + fixed(width / 2, 1) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">" + title + "</text>\n";

    // frame and gridlines
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        const double y = y_of(v);
        svg += "  <line x1=\"" + fixed(left, 1) + "\" y1=\"" + fixed(y, 1) + "\" x2=\"" +
               fixed(left + plot_w, 1) + "\" y2=\"" + fixed(y, 1) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "  <text x=\"" + fixed(left - 8, 1) + "\" y=\"" + fixed(y + 4, 1) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
               fixed(v, 1) + "</text>\n";
    }
    for (const MetricsRecord& row : result.rows) {
        const double x = x_of(row.tau);
        svg += "  <line x1=\"" + fixed(x, 1) + "\" y1=\"" + fixed(top + plot_h, 1) + "\" x2=\"" +
               fixed(x, 1) + "\" y2=\"" + fixed(top + plot_h + 5, 1) +
               "\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
        svg += "  <text x=\"" + fixed(x, 1) + "\" y=\"" + fixed(top + plot_h + 18, 1) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" +
               fixed(row.tau, 2) + "</text>\n";
    }
    svg += "  <rect x=\"" + fixed(left, 1) + "\" y=\"" + fixed(top, 1) + "\" width=\"" +
           fixed(plot_w, 1) + "\" height=\"" + fixed(plot_h, 1) +
           "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
    svg += "  <text x=\"" + fixed(left + plot_w / 2, 1) + "\" y=\"" + fixed(height - 16, 1) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">IoU threshold"
           "</text>\n";
    svg += "  <text x=\"20\" y=\"" + fixed(top + plot_h / 2, 1) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 20 " + fixed(top + plot_h / 2, 1) + ")\">score</text>\n";

    for (const Series& s : series) {
        std::string points;
        for (const auto& [tau, v] : s.points) {
            if (!points.empty()) points += " ";
            points += fixed(x_of(tau), 1) + "," + fixed(y_of(v), 1);
        }
        svg += "  <polyline class=\"series-" + std::string(s.name) + "\" fill=\"none\" stroke=\"" +
               s.color + "\" stroke-width=\"2\" points=\"" + points + "\"/>\n";
        for (const auto& [tau, v] : s.points)
            svg += "  <circle cx=\"" + fixed(x_of(tau), 1) + "\" cy=\"" + fixed(y_of(v), 1) +
                   "\" r=\"2.5\" fill=\"" + s.color + "\"/>\n";
    }

    // legend
    double ly = top + 12;
    for (const Series& s : series) {
        const double lx = left + plot_w - 90;
        svg += "  <line x1=\"" + fixed(lx, 1) + "\" y1=\"" + fixed(ly - 4, 1) + "\" x2=\"" +
               fixed(lx + 24, 1) + "\" y2=\"" + fixed(ly - 4, 1) + "\" stroke=\"" + s.color +
               "\" stroke-width=\"2\"/>\n";
        svg += "  <text x=\"" + fixed(lx + 30, 1) + "\" y=\"" + fixed(ly, 1) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + s.name + "</text>\n";
        ly += 18;
    }
    svg += "</svg>\n";
    write_text(path, svg);
}

void write_summary_json(const Summary& summary, const std::filesystem::path& path) {
    if (summary.metrics.empty()) throw EmptyInput("summary has no metrics");
    nlohmann::ordered_json j;
    j["tau"] = summary.tau;
    j["folds"] = summary.fold_count;
    j["metrics"] = nlohmann::ordered_json::object();
    for (const char* key : {"rq", "sq", "pq", "ap", "dice"}) {
        const auto it = summary.metrics.find(key);
        if (it == summary.metrics.end()) continue;
        nlohmann::ordered_json stat;
        stat["mean"] = it->second.mean;
        stat["std"] = it->second.stddev;
        stat["n"] = it->second.n;
        j["metrics"][key] = std::move(stat);
    }
    j["notices"] = summary.notices;
    write_text(path, j.dump(2) + "\n");
}

void write_summary_csv(const Summary& summary, const std::filesystem::path& path) {
    if (summary.metrics.empty()) throw EmptyInput("summary has no metrics");
    std::string text = "tau,rq,sq,pq,ap,dice\n";
    text += fixed(summary.tau, 2);
    for (const char* key : {"rq", "sq", "pq", "ap", "dice"}) {
        text += ",";
        const auto it = summary.metrics.find(key);
        if (it == summary.metrics.end() || it->second.n == 0) {
            text += kUndefinedCell;
            continue;
        }
        text += percent_cell(it->second.mean) + " " + kPlusMinus + " " +
                percent_cell(it->second.stddev);
    }
    text += "\n";
    write_text(path, text);
}

void write_warnings(std::span<const Warning> warnings, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw WriteError("cannot open '" + path.string() + "' for writing");
    for (const Warning& w : warnings) {
        nlohmann::ordered_json j;
        j["level"] = "warning";
        j["code"] = w.code;
        j["image_id"] = w.image_id;
        j["message"] = w.message;
        out << j.dump() << "\n";
    }
    if (!out) throw WriteError("short write to '" + path.string() + "'");
}

}  // namespace panq::io
