#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sglab/sweep.hpp"

namespace sglab {

// Per-run analysis summary, as written by `analyze` into analysis.json.
struct RunSummary {
    std::string run_dir;
    std::map<std::string, double> accuracy;  // key: attribute|split
    std::optional<double> train_nmi;         // (color, shape), arithmetic norm
    std::optional<double> pscore_shape;      // shape studied / color secondary
    std::optional<double> pscore_color;
    std::optional<double> dci_d_shape, dci_c_shape;
    std::optional<double> dci_d_color, dci_c_color;

    void save(const std::filesystem::path& path) const;
    static RunSummary load(const std::filesystem::path& path);
};

namespace report {

struct Series {
    std::string name;
    std::vector<double> values;
    std::vector<double> errors;  // empty or same length
};

// Deterministic SVG bytes for a grouped bar chart with error whiskers.
std::string svg_grouped_bars(const std::string& title, const std::vector<std::string>& x_labels,
                             const std::vector<Series>& series);

std::string svg_scatter(const std::string& title, const std::string& x_label,
                        const std::string& y_label,
                        const std::vector<std::pair<double, double>>& points);

std::string markdown_table(const AggregateTable& table);

// Emits the standard chart set for an aggregate table (per-attribute panels;
// delta charts relative to the axis' zero cell for p_burst/jitter axes) plus
// scatters across run summaries when present.
void write_reports(const std::vector<AggregateTable>& tables,
                   const std::vector<RunSummary>& runs, const std::filesystem::path& out_dir);

}  // namespace report
}  // namespace sglab
