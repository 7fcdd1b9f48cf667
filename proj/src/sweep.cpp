#include "sglab/sweep.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sglab/dataset.hpp"

namespace sglab {

using nlohmann::json;

std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
    if (xs.empty()) throw ConfigError("mean of an empty sample");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() == 1) return {mean, 0.0};
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

std::string AggregateTable::key(double value, const std::string& attribute,
                                const std::string& split) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", value);
    return std::string(buf) + "|" + attribute + "|" + split;
}

void AggregateTable::save_json(const std::filesystem::path& path) const {
    json cells_json = json::object();
    for (const auto& [k, c] : cells) {
        cells_json[k] = json{{"mean", c.mean}, {"stderr", c.stderr_}, {"n", c.n}};
    }
    json j{{"axis", axis}, {"cells", cells_json}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

AggregateTable AggregateTable::load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    json j = json::parse(in);
    AggregateTable t;
    t.axis = j.at("axis").get<std::string>();
    for (const auto& [k, c] : j.at("cells").items()) {
        t.cells[k] = AggregateCell{c.at("mean").get<double>(), c.at("stderr").get<double>(),
                                   c.at("n").get<int>()};
    }
    return t;
}

void AggregateTable::save_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "axis,value,attribute,split,mean,stderr,n\n";
    for (const auto& [k, c] : cells) {
        std::string flat = k;
        std::replace(flat.begin(), flat.end(), '|', ',');
        out << axis << ',' << flat << ',' << c.mean << ',' << c.stderr_ << ',' << c.n << '\n';
    }
}

ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis, double value) {
    ExperimentConfig c = base;
    if (axis == "n_colors") {
        const int n = static_cast<int>(std::lround(value));
        divisions_from_color_count(n);
        c.dataset.n_colors = n;
    } else if (axis == "p_burst") {
        c.dataset.p_burst = value;
    } else if (axis == "jitter") {
        c.dataset.jitter = value;
    } else if (axis == "train_fraction") {
        c.dataset.train_fraction = value;
    } else if (axis == "hidden_dim") {
        c.model.hidden_dim = static_cast<int>(std::lround(value));
    } else {
        throw ConfigError("unknown sweep axis: " + axis);
    }
    return c;
}

std::string dataset_dir_name(const DatasetConfig& c) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "n%d_r%g_b%g_j%g_f%g_s%d_p%d_sz%d_t%d_seed%llu", c.n_colors,
                  c.common_ratio, c.p_burst, c.jitter, c.train_fraction, c.image_side,
                  c.patch_side, c.train_size, c.test_size,
                  static_cast<unsigned long long>(c.seed));
    return buf;
}

SweepResult run_sweep(const ExperimentConfig& base, const SweepSpec& spec,
                      const std::filesystem::path& out_root) {
    if (std::find(kSweepAxes.begin(), kSweepAxes.end(), spec.axis) == kSweepAxes.end()) {
        throw ConfigError("unknown sweep axis: " + spec.axis);
    }
    if (spec.values.empty()) throw ConfigError("sweep needs at least one value");
    if (spec.seeds < 1) throw ConfigError("sweep needs at least one seed");

    SweepResult result;
    result.aggregate.axis = spec.axis;
    // per (value, attribute, split) accumulation of final accuracies
    std::map<std::string, std::vector<double>> pools;

    for (double value : spec.values) {
        ExperimentConfig cell_config = apply_axis(base, spec.axis, value);
        const auto dataset_dir = out_root / "datasets" / dataset_dir_name(cell_config.dataset);
        DatasetManifest manifest;
        try {
            std::filesystem::create_directories(dataset_dir.parent_path());
            manifest = build_dataset(cell_config.dataset, dataset_dir);
        } catch (const std::exception& e) {
            for (int s = 0; s < spec.seeds; ++s) {
                char name[96];
                std::snprintf(name, sizeof(name), "%s=%g_seed%d", spec.axis.c_str(), value, s);
                result.cells.push_back(
                    SweepCell{value, static_cast<uint64_t>(s), (out_root / "runs" / name).string(),
                              std::string("failed: ") + e.what()});
            }
            continue;
        }

        for (int s = 0; s < spec.seeds; ++s) {
            char name[96];
            std::snprintf(name, sizeof(name), "%s=%g_seed%d", spec.axis.c_str(), value, s);
            const auto run_dir = out_root / "runs" / name;
            SweepCell cell{value, static_cast<uint64_t>(s), run_dir.string(), ""};
            try {
                ModelConfig mc = resolve_model_config(cell_config.model, manifest);
                mc.seed = static_cast<uint64_t>(s);
                TrainConfig tc = cell_config.train;
                tc.seed = static_cast<uint64_t>(s);
                RunRecord record = train(manifest, mc, tc, run_dir);
                cell.status = record.status;
                for (Attribute a : kAttributes) {
                    for (const char* split : {"test_id", "test_ood"}) {
                        pools[AggregateTable::key(value, label(a), split)].push_back(
                            record.final_accuracy(split, a));
                    }
                }
            } catch (const std::exception& e) {
                cell.status = std::string("failed: ") + e.what();
            }
            result.cells.push_back(std::move(cell));
        }
    }

    for (const auto& [key, values] : pools) {
        auto [mean, se] = mean_stderr(values);
        result.aggregate.cells[key] = AggregateCell{mean, se, static_cast<int>(values.size())};
    }
    return result;
}

}  // namespace sglab
