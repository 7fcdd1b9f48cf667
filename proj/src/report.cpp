#include "sglab/report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "sglab/text.hpp"

namespace sglab {

using nlohmann::json;

void RunSummary::save(const std::filesystem::path& path) const {
    json acc = json::object();
    for (const auto& [k, v] : accuracy) acc[k] = v;
    json j{{"run_dir", run_dir}, {"accuracy", acc}};
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) j[key] = *v;
    };
    put("train_nmi", train_nmi);
    put("pscore_shape", pscore_shape);
    put("pscore_color", pscore_color);
    put("dci_d_shape", dci_d_shape);
    put("dci_c_shape", dci_c_shape);
    put("dci_d_color", dci_d_color);
    put("dci_c_color", dci_c_color);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

RunSummary RunSummary::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    json j = json::parse(in);
    RunSummary s;
    s.run_dir = j.at("run_dir").get<std::string>();
    for (const auto& [k, v] : j.at("accuracy").items()) s.accuracy[k] = v.get<double>();
    auto get = [&](const char* key) -> std::optional<double> {
        if (j.contains(key)) return j.at(key).get<double>();
        return std::nullopt;
    };
    s.train_nmi = get("train_nmi");
    s.pscore_shape = get("pscore_shape");
    s.pscore_color = get("pscore_color");
    s.dci_d_shape = get("dci_d_shape");
    s.dci_c_shape = get("dci_c_shape");
    s.dci_d_color = get("dci_d_color");
    s.dci_c_color = get("dci_c_color");
    return s;
}

namespace report {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

const char* kPalette[] = {"#4c72b0", "#55a868", "#c44e52", "#8172b2"};

}  // namespace

std::string svg_grouped_bars(const std::string& title, const std::vector<std::string>& x_labels,
                             const std::vector<Series>& series) {
    const int width = 640, height = 360;
    const double left = 56, right = 16, top = 40, bottom = 48;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    double lo = 0.0, hi = 0.0;
    for (const auto& s : series) {
        for (size_t i = 0; i < s.values.size(); ++i) {
            const double e = i < s.errors.size() ? s.errors[i] : 0.0;
            lo = std::min(lo, s.values[i] - e);
            hi = std::max(hi, s.values[i] + e);
        }
    }
    if (hi <= lo) hi = lo + 1.0;
    hi += 0.05 * (hi - lo);
    if (lo < 0.0) lo -= 0.05 * (hi - lo);

    auto ypix = [&](double v) { return top + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fmt(width / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
           title + "</text>\n";

    // y axis with 5 ticks
    for (int t = 0; t <= 5; ++t) {
        const double v = lo + (hi - lo) * t / 5.0;
        const double y = ypix(v);
        out += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
               fmt(width - right) + "\" y2=\"" + fmt(y) + "\" stroke=\"#dddddd\"/>\n";
        out += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(y + 4) +
               "\" text-anchor=\"end\" font-size=\"10\">" + fmt(v) + "</text>\n";
    }
    const double zero_y = ypix(std::max(lo, 0.0));

    const size_t groups = x_labels.size();
    const double group_w = plot_w / std::max<size_t>(groups, 1);
    const double bar_w = group_w * 0.8 / std::max<size_t>(series.size(), 1);

    for (size_t g = 0; g < groups; ++g) {
        const double gx = left + group_w * g + group_w * 0.1;
        for (size_t s = 0; s < series.size(); ++s) {
            if (g >= series[s].values.size()) continue;
            const double v = series[s].values[g];
            const double x = gx + bar_w * s;
            const double y0 = ypix(std::max(v, 0.0));
            const double h = std::abs(ypix(0.0 > lo ? 0.0 : lo) - ypix(v));
            out += "<rect x=\"" + fmt(x) + "\" y=\"" + fmt(std::min(y0, zero_y)) + "\" width=\"" +
                   fmt(bar_w * 0.92) + "\" height=\"" + fmt(h) + "\" fill=\"" +
                   kPalette[s % 4] + "\"/>\n";
            if (g < series[s].errors.size() && series[s].errors[g] > 0) {
                const double cx = x + bar_w * 0.46;
                out += "<line x1=\"" + fmt(cx) + "\" y1=\"" + fmt(ypix(v - series[s].errors[g])) +
                       "\" x2=\"" + fmt(cx) + "\" y2=\"" + fmt(ypix(v + series[s].errors[g])) +
                       "\" stroke=\"black\"/>\n";
            }
        }
        out += "<text x=\"" + fmt(gx + group_w * 0.4) + "\" y=\"" + fmt(height - bottom + 16) +
               "\" text-anchor=\"middle\" font-size=\"11\">" + x_labels[g] + "</text>\n";
    }
    // legend
    for (size_t s = 0; s < series.size(); ++s) {
        const double y = top + 14.0 * s;
        out += "<rect x=\"" + fmt(width - right - 110) + "\" y=\"" + fmt(y - 8) +
               "\" width=\"10\" height=\"10\" fill=\"" + kPalette[s % 4] + "\"/>\n";
        out += "<text x=\"" + fmt(width - right - 96) + "\" y=\"" + fmt(y) +
               "\" font-size=\"11\">" + series[s].name + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

std::string svg_scatter(const std::string& title, const std::string& x_label,
                        const std::string& y_label,
                        const std::vector<std::pair<double, double>>& points) {
    const int width = 480, height = 360;
    const double left = 60, right = 16, top = 40, bottom = 52;
    const double plot_w = width - left - right, plot_h = height - top - bottom;

    double xlo = 0, xhi = 1, ylo = 0, yhi = 1;
    if (!points.empty()) {
        xlo = xhi = points[0].first;
        ylo = yhi = points[0].second;
        for (const auto& [x, y] : points) {
            xlo = std::min(xlo, x);
            xhi = std::max(xhi, x);
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    }
    if (xhi <= xlo) xhi = xlo + 1;
    if (yhi <= ylo) yhi = ylo + 1;
    const double mx = 0.06 * (xhi - xlo), my = 0.06 * (yhi - ylo);
    xlo -= mx;
    xhi += mx;
    ylo -= my;
    yhi += my;

    auto xpix = [&](double v) { return left + plot_w * (v - xlo) / (xhi - xlo); };
    auto ypix = [&](double v) { return top + plot_h * (1.0 - (v - ylo) / (yhi - ylo)); };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + fmt(width / 2.0) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
           title + "</text>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = xlo + (xhi - xlo) * t / 4.0;
        const double yv = ylo + (yhi - ylo) * t / 4.0;
        out += "<text x=\"" + fmt(xpix(xv)) + "\" y=\"" + fmt(height - bottom + 16) +
               "\" text-anchor=\"middle\" font-size=\"10\">" + fmt(xv) + "</text>\n";
        out += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(ypix(yv) + 4) +
               "\" text-anchor=\"end\" font-size=\"10\">" + fmt(yv) + "</text>\n";
        out += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(ypix(yv)) + "\" x2=\"" +
               fmt(width - right) + "\" y2=\"" + fmt(ypix(yv)) + "\" stroke=\"#eeeeee\"/>\n";
    }
    out += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(plot_w) +
           "\" height=\"" + fmt(plot_h) + "\" fill=\"none\" stroke=\"#888888\"/>\n";
    for (const auto& [x, y] : points) {
        out += "<circle cx=\"" + fmt(xpix(x)) + "\" cy=\"" + fmt(ypix(y)) +
               "\" r=\"4\" fill=\"#4c72b0\" fill-opacity=\"0.8\"/>\n";
    }
    out += "<text x=\"" + fmt(left + plot_w / 2) + "\" y=\"" + fmt(height - 8.0) +
           "\" text-anchor=\"middle\" font-size=\"12\">" + x_label + "</text>\n";
    out += "<text x=\"14\" y=\"" + fmt(top + plot_h / 2) +
           "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 " +
           fmt(top + plot_h / 2) + ")\">" + y_label + "</text>\n";
    out += "</svg>\n";
    return out;
}

std::string markdown_table(const AggregateTable& table) {
    // rows: axis values; columns: attribute/split pairs
    std::set<double> values;
    std::set<std::string> columns;
    for (const auto& [key, cell] : table.cells) {
        const auto p1 = key.find('|');
        const auto p2 = key.rfind('|');
        values.insert(std::stod(key.substr(0, p1)));
        columns.insert(key.substr(p1 + 1, p2 - p1 - 1) + "/" + key.substr(p2 + 1));
    }
    std::string out = "| " + table.axis + " |";
    for (const auto& c : columns) out += " " + c + " |";
    out += "\n|---|";
    for (size_t i = 0; i < columns.size(); ++i) out += "---|";
    out += "\n";
    for (double v : values) {
        char vb[32];
        std::snprintf(vb, sizeof(vb), "%g", v);
        out += std::string("| ") + vb + " |";
        for (const auto& c : columns) {
            const auto slash = c.find('/');
            const auto key = AggregateTable::key(v, c.substr(0, slash), c.substr(slash + 1));
            auto it = table.cells.find(key);
            if (it == table.cells.end()) {
                out += " - |";
            } else {
                char cb[64];
                std::snprintf(cb, sizeof(cb), " %.3f ± %.3f |", it->second.mean,
                              it->second.stderr_);
                out += cb;
            }
        }
        out += "\n";
    }
    return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

// 4-panel (one per attribute) accuracy or delta-vs-baseline chart.
void write_axis_charts(const AggregateTable& table, const std::filesystem::path& out_dir) {
    std::set<double> values;
    for (const auto& [key, cell] : table.cells) {
        values.insert(std::stod(key.substr(0, key.find('|'))));
    }
    const bool delta = table.axis == "p_burst" || table.axis == "jitter";
    const double baseline_value = 0.0;

    for (Attribute a : kAttributes) {
        std::vector<std::string> x_labels;
        Series id_series{"test-ID", {}, {}}, ood_series{"test-OOD", {}, {}};
        for (double v : values) {
            if (delta && v == baseline_value) continue;
            char vb[32];
            std::snprintf(vb, sizeof(vb), "%g", v);
            x_labels.push_back(vb);
            for (auto* s : {&id_series, &ood_series}) {
                const std::string split = s->name == "test-ID" ? "test_id" : "test_ood";
                auto it = table.cells.find(AggregateTable::key(v, label(a), split));
                double mean = it != table.cells.end() ? it->second.mean : 0.0;
                double se = it != table.cells.end() ? it->second.stderr_ : 0.0;
                if (delta) {
                    auto base =
                        table.cells.find(AggregateTable::key(baseline_value, label(a), split));
                    if (base != table.cells.end()) mean -= base->second.mean;
                }
                s->values.push_back(mean);
                s->errors.push_back(se);
            }
        }
        const std::string what = delta ? "delta accuracy" : "accuracy";
        const std::string title = label(a) + " " + what + " vs " + table.axis;
        write_file(out_dir / (table.axis + "_" + label(a) + ".svg"),
                   svg_grouped_bars(title, x_labels, {id_series, ood_series}));
    }
    write_file(out_dir / (table.axis + "_table.md"), markdown_table(table));
}

}  // namespace

void write_reports(const std::vector<AggregateTable>& tables, const std::vector<RunSummary>& runs,
                   const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& table : tables) write_axis_charts(table, out_dir);

    std::vector<std::pair<double, double>> nmi_ood, pscore_ood, nmi_pscore;
    for (const auto& r : runs) {
        auto acc = r.accuracy.find("shape|test_ood");
        if (acc == r.accuracy.end()) continue;
        if (r.train_nmi) nmi_ood.emplace_back(*r.train_nmi, acc->second);
        if (r.pscore_shape) pscore_ood.emplace_back(*r.pscore_shape, acc->second);
        if (r.train_nmi && r.pscore_shape) nmi_pscore.emplace_back(*r.train_nmi, *r.pscore_shape);
    }
    if (!nmi_ood.empty()) {
        write_file(out_dir / "nmi_vs_ood_shape.svg",
                   svg_scatter("train NMI vs OOD shape accuracy", "NMI (color, shape)",
                               "OOD shape accuracy", nmi_ood));
    }
    if (!pscore_ood.empty()) {
        write_file(out_dir / "pscore_vs_ood_shape.svg",
                   svg_scatter("p-score vs OOD shape accuracy", "p-score (shape)",
                               "OOD shape accuracy", pscore_ood));
    }
    if (!nmi_pscore.empty()) {
        write_file(out_dir / "nmi_vs_pscore.svg",
                   svg_scatter("train NMI vs p-score", "NMI (color, shape)", "p-score (shape)",
                               nmi_pscore));
    }
}

}  // namespace report
}  // namespace sglab
