// Command-line front end: generate datasets, train models, run sweeps,
// analyze checkpoints and emit report charts.

#include <CLI11.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sglab/analysis.hpp"
#include "sglab/config.hpp"
#include "sglab/dataset.hpp"
#include "sglab/report.hpp"
#include "sglab/runtime.hpp"
#include "sglab/sweep.hpp"
#include "sglab/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sglab;

namespace {

void add_dataset_overrides(CLI::App* app, ExperimentConfig& cfg, int& divisions) {
    app->add_option("--n", divisions, "palette channel divisions (colors = n^3)");
    app->add_option("--colors", cfg.dataset.n_colors, "total color count (n^3)");
    app->add_option("--ratio", cfg.dataset.common_ratio, "common color ratio in [0,1]");
    app->add_option("--p-burst", cfg.dataset.p_burst, "burstiness probability");
    app->add_option("--burst-cap", cfg.dataset.burst_cap, "max distinct colors when bursty");
    app->add_option("--jitter", cfg.dataset.jitter, "hue jitter half-range in [0,0.5]");
    app->add_option("--train-size", cfg.dataset.train_size, "train scene count");
    app->add_option("--test-size", cfg.dataset.test_size, "test scene count per split");
    app->add_option("--fraction", cfg.dataset.train_fraction, "train fraction in (0,1]");
    app->add_option("--image-side", cfg.dataset.image_side, "image side in pixels");
    app->add_option("--patch-side", cfg.dataset.patch_side, "patch side in pixels");
    app->add_option("--data-seed", cfg.dataset.seed, "dataset generation seed");
}

void add_train_overrides(CLI::App* app, ExperimentConfig& cfg) {
    app->add_option("--hidden-dim", cfg.model.hidden_dim, "residual stream width");
    app->add_option("--layers", cfg.model.n_layers, "encoder layers");
    app->add_option("--heads", cfg.model.n_heads, "attention heads");
    app->add_option("--mlp-ratio", cfg.model.mlp_ratio, "feed-forward width multiplier");
    app->add_option("--epochs", cfg.train.epochs, "training epochs");
    app->add_option("--batch-size", cfg.train.batch_size, "batch size");
    app->add_option("--lr", cfg.train.learning_rate, "Adam learning rate");
    app->add_option("--mlm-probability", cfg.train.mlm_probability, "mask probability");
    app->add_option("--seed", cfg.train.seed, "training seed (init, shuffle, masking)");
    app->add_option("--eval-every", cfg.train.eval_every, "epochs between periodic evals");
    app->add_option("--eval-max-samples", cfg.train.eval_max_samples,
                    "cap on periodic eval samples (0 = all)");
    app->add_option("--checkpoint-every", cfg.train.checkpoint_every,
                    "epochs between resumable snapshots (0 = end only)");
    app->add_flag("--save-best-id", cfg.train.save_best_id, "keep best test-ID checkpoint");
}

int cmd_generate(ExperimentConfig cfg, int divisions, const std::string& out_dir) {
    if (divisions > 0) cfg.dataset.n_colors = divisions * divisions * divisions;
    const fs::path dir = out_dir.empty() ? fs::path(cfg.output_dir) / "datasets" /
                                               dataset_dir_name(cfg.dataset)
                                         : fs::path(out_dir);
    if (!dir.parent_path().empty()) fs::create_directories(dir.parent_path());
    DatasetManifest manifest = build_dataset(cfg.dataset, dir);

    const auto tables = dataset_attribute_table(manifest, Subset::Train);
    const double train_nmi = nmi(tables.at("color_shape"));
    std::cout << "manifest: " << (dir / "manifest.json").string() << "\n"
              << "sizes: train=" << manifest.size(Subset::Train)
              << " test_id=" << manifest.size(Subset::TestId)
              << " test_ood=" << manifest.size(Subset::TestOod) << "\n"
              << "train NMI(color, shape) = " << train_nmi << "\n";
    return 0;
}

int cmd_train(ExperimentConfig cfg, const std::string& dataset_dir, const std::string& run_dir) {
    DatasetManifest manifest;
    if (!dataset_dir.empty()) {
        manifest = load_manifest(dataset_dir);
    } else {
        const fs::path dir =
            fs::path(cfg.output_dir) / "datasets" / dataset_dir_name(cfg.dataset);
        fs::create_directories(dir.parent_path());
        manifest = build_dataset(cfg.dataset, dir);
    }
    const fs::path out = run_dir.empty() ? fs::path(cfg.output_dir) / "runs" / "run0"
                                         : fs::path(run_dir);
    ModelConfig mc = resolve_model_config(cfg.model, manifest);
    mc.seed = cfg.train.seed;
    RunRecord record = train(manifest, mc, cfg.train, out);
    std::cout << "run: " << out.string() << " status=" << record.status << "\n";
    for (Attribute a : kAttributes) {
        std::cout << "  " << label(a) << ": test_id=" << record.final_accuracy("test_id", a)
                  << " test_ood=" << record.final_accuracy("test_ood", a) << "\n";
    }
    return record.status == "complete" ? 0 : 1;
}

int cmd_sweep(ExperimentConfig cfg, const std::string& axis, const std::string& values_csv,
              int seeds, const std::string& out_root) {
    SweepSpec spec;
    spec.axis = axis;
    spec.seeds = seeds;
    for (size_t pos = 0; pos < values_csv.size();) {
        const size_t comma = values_csv.find(',', pos);
        const std::string tok = values_csv.substr(pos, comma - pos);
        try {
            spec.values.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError("bad sweep value: " + tok);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    const fs::path root = out_root.empty() ? fs::path(cfg.output_dir) : fs::path(out_root);
    SweepResult result = run_sweep(cfg, spec, root);
    result.aggregate.save_json(root / ("aggregate_" + axis + ".json"));
    result.aggregate.save_csv(root / ("aggregate_" + axis + ".csv"));

    bool any_failed = false;
    for (const auto& cell : result.cells) {
        std::cout << cell.run_dir << ": " << cell.status << "\n";
        if (cell.status != "complete") any_failed = true;
    }
    std::cout << "aggregate: " << (root / ("aggregate_" + axis + ".json")).string() << "\n";
    return any_failed ? 1 : 0;
}

int cmd_analyze(const std::vector<std::string>& run_dirs, bool do_nmi, bool do_pscore,
                bool do_dci, int n_images, uint64_t seed) {
    std::vector<RunSummary> summaries;
    for (const auto& run_dir : run_dirs) {
        const fs::path dir(run_dir);
        RunRecord record = load_run_record(dir / "run.json");
        if (record.status != "complete") {
            throw IntegrityError("run is not complete: " + run_dir);
        }
        DatasetManifest manifest = load_manifest(record.dataset_dir);

        RunSummary summary;
        summary.run_dir = run_dir;
        for (Attribute a : kAttributes) {
            for (const char* split : {"test_id", "test_ood"}) {
                summary.accuracy[label(a) + std::string("|") + split] =
                    record.final_accuracy(split, a);
            }
        }

        {
            json eval_json{{"splits", {"test_id", "test_ood"}},
                           {"restricted_to", "cubes+cylinders"},
                           {"accuracy", json::object()},
                           {"checkpoint", record.checkpoint_path},
                           {"manifest_hash", record.manifest_hash}};
            std::ofstream csv(dir / "eval.csv");
            csv << "attribute,split,accuracy\n";
            for (const auto& [key, acc] : summary.accuracy) {
                eval_json["accuracy"][key] = acc;
                std::string flat = key;
                std::replace(flat.begin(), flat.end(), '|', ',');
                csv << flat << ',' << acc << '\n';
            }
            std::ofstream out(dir / "eval.json");
            out << eval_json.dump(2) << '\n';
        }

        if (do_nmi) {
            const auto tables = dataset_attribute_table(manifest, Subset::Train);
            summary.train_nmi = nmi(tables.at("color_shape"));
        }
        if (do_pscore || do_dci) {
            Checkpoint ckpt = load_checkpoint(record.checkpoint_path);
            EmbeddingSet embeddings = extract_embeddings(ckpt.params, manifest, n_images, seed);
            embeddings.save(dir / "embeddings.bin");
            EmbeddingSet shape_task = filter_by_masked(embeddings, Attribute::Shape);
            EmbeddingSet color_task = filter_by_masked(embeddings, Attribute::Color);
            if (do_pscore) {
                PscoreOptions opt;
                opt.seed = seed;
                PscoreResult ps = pscore(shape_task, Attribute::Shape, Attribute::Color, opt);
                PscoreResult pc = pscore(color_task, Attribute::Color, Attribute::Shape, opt);
                summary.pscore_shape = ps.mean;
                summary.pscore_color = pc.mean;
                json j{{"shape", {{"mean", ps.mean}, {"stderr", ps.stderr_}}},
                       {"color", {{"mean", pc.mean}, {"stderr", pc.stderr_}}},
                       {"n_pairs", opt.n_pairs},
                       {"n_runs", opt.n_runs}};
                std::ofstream out(dir / "pscore.json");
                out << j.dump(2) << '\n';
            }
            if (do_dci) {
                DciResult ds = dci(shape_task);
                DciResult dc = dci(color_task);
                summary.dci_d_shape = ds.disentanglement;
                summary.dci_c_shape = ds.completeness;
                summary.dci_d_color = dc.disentanglement;
                summary.dci_c_color = dc.completeness;
                json j{{"shape", {{"D", ds.disentanglement}, {"C", ds.completeness}}},
                       {"color", {{"D", dc.disentanglement}, {"C", dc.completeness}}},
                       {"probe", ds.probe}};
                std::ofstream out(dir / "dci.json");
                out << j.dump(2) << '\n';
            }
        }
        summary.save(dir / "analysis.json");
        summaries.push_back(std::move(summary));
        std::cout << "analyzed " << run_dir << "\n";
    }

    if (summaries.size() >= 3) {
        std::vector<double> nmis, pscores, oods;
        for (const auto& s : summaries) {
            if (!s.train_nmi || !s.pscore_shape) continue;
            nmis.push_back(*s.train_nmi);
            pscores.push_back(*s.pscore_shape);
            oods.push_back(s.accuracy.at("shape|test_ood"));
        }
        if (nmis.size() >= 3) {
            json j;
            const Correlation cn = correlate(nmis, oods);
            const Correlation cp = correlate(pscores, oods);
            j["nmi_vs_ood_shape"] = {{"r", cn.r}, {"p_value", cn.p_value}, {"n", cn.n}};
            j["pscore_vs_ood_shape"] = {{"r", cp.r}, {"p_value", cp.p_value}, {"n", cp.n}};
            const fs::path out_path =
                fs::path(run_dirs.front()).parent_path() / "correlations.json";
            std::ofstream out(out_path);
            out << j.dump(2) << '\n';
            std::cout << "correlations: " << out_path.string() << "\n";
        }
    }
    return 0;
}

int cmd_report(const std::vector<std::string>& aggregate_files,
               const std::vector<std::string>& run_dirs, const std::string& out_dir) {
    std::vector<AggregateTable> tables;
    for (const auto& f : aggregate_files) tables.push_back(AggregateTable::load_json(f));
    std::vector<RunSummary> runs;
    for (const auto& d : run_dirs) {
        const fs::path p = fs::path(d) / "analysis.json";
        if (fs::exists(p)) runs.push_back(RunSummary::load(p));
    }
    if (tables.empty() && runs.empty()) {
        std::cerr << "warning: nothing to report\n";
        return 0;
    }
    report::write_reports(tables, runs, out_dir);
    std::cout << "reports written to " << out_dir << "\n";
    return 0;
}

// --config/--preset set the base; explicit flags override on top. The base is
// resolved before CLI11 binds the remaining options, by scanning argv first.
ExperimentConfig resolve_base(int argc, char** argv) {
    std::string config_path, preset_name;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        auto value_of = [&](const std::string& flag) -> std::string {
            if (arg == flag && i + 1 < argc) return argv[i + 1];
            if (arg.rfind(flag + "=", 0) == 0) return arg.substr(flag.size() + 1);
            return "";
        };
        if (auto v = value_of("--config"); !v.empty()) config_path = v;
        if (auto v = value_of("--preset"); !v.empty()) preset_name = v;
    }
    ExperimentConfig base = preset_name.empty() ? preset("desk") : preset(preset_name);
    if (!config_path.empty()) base = ExperimentConfig::from_file(config_path);
    return base;
}

}  // namespace

int main(int argc, char** argv) {
    tune_allocator();
    CLI::App app{"systematic-generalization data laboratory"};
    app.require_subcommand(1);

    ExperimentConfig base;
    try {
        base = resolve_base(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    std::string config_path, preset_name;  // consumed by resolve_base
    ExperimentConfig gen_cfg = base, train_cfg = base, sweep_cfg = base;
    int gen_divisions = 0, train_divisions = 0, sweep_divisions = 0;
    std::string gen_out, train_dataset, train_out, sweep_axis, sweep_values, sweep_out;
    int sweep_seeds = 3;

    auto add_base_flags = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config JSON");
        cmd->add_option("--preset", preset_name, "named preset: desk or paper");
    };

    auto* generate = app.add_subcommand("generate", "build a dataset on disk");
    add_base_flags(generate);
    add_dataset_overrides(generate, gen_cfg, gen_divisions);
    generate->add_option("--out", gen_out, "dataset output directory");

    auto* train_cmd = app.add_subcommand("train", "train one model");
    add_base_flags(train_cmd);
    add_dataset_overrides(train_cmd, train_cfg, train_divisions);
    add_train_overrides(train_cmd, train_cfg);
    train_cmd->add_option("--dataset", train_dataset, "existing dataset directory");
    train_cmd->add_option("--out", train_out, "run output directory");

    auto* sweep_cmd = app.add_subcommand("sweep", "run a sweep over one axis");
    add_base_flags(sweep_cmd);
    add_dataset_overrides(sweep_cmd, sweep_cfg, sweep_divisions);
    add_train_overrides(sweep_cmd, sweep_cfg);
    sweep_cmd
        ->add_option("--axis", sweep_axis,
                     "one of n_colors, p_burst, jitter, train_fraction, hidden_dim")
        ->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated axis values")->required();
    sweep_cmd->add_option("--seeds", sweep_seeds, "seeds per value");
    sweep_cmd->add_option("--out", sweep_out, "sweep output root");

    auto* analyze = app.add_subcommand("analyze", "compute reports for finished runs");
    std::vector<std::string> analyze_runs;
    bool no_nmi = false, no_pscore = false, no_dci = false;
    int analyze_images = 1024;
    uint64_t analyze_seed = 0;
    analyze->add_option("runs", analyze_runs, "run directories")->required();
    analyze->add_flag("--no-nmi", no_nmi, "skip dataset NMI");
    analyze->add_flag("--no-pscore", no_pscore, "skip p-score");
    analyze->add_flag("--no-dci", no_dci, "skip DCI");
    analyze->add_option("--images", analyze_images, "embedding extraction image count");
    analyze->add_option("--seed", analyze_seed, "analysis sampling seed");

    auto* report_cmd = app.add_subcommand("report", "emit SVG charts and markdown tables");
    std::vector<std::string> report_aggregates, report_runs;
    std::string report_out = "report";
    report_cmd->add_option("--aggregate", report_aggregates, "aggregate table JSON files");
    report_cmd->add_option("--runs", report_runs, "analyzed run directories");
    report_cmd->add_option("--out", report_out, "report output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e);
            return 0;  // --help
        }
        app.exit(e);
        return 2;
    }

    try {
        if (generate->parsed()) return cmd_generate(gen_cfg, gen_divisions, gen_out);
        if (train_cmd->parsed()) {
            if (train_divisions > 0) {
                train_cfg.dataset.n_colors = train_divisions * train_divisions * train_divisions;
            }
            return cmd_train(train_cfg, train_dataset, train_out);
        }
        if (sweep_cmd->parsed()) {
            if (sweep_divisions > 0) {
                sweep_cfg.dataset.n_colors = sweep_divisions * sweep_divisions * sweep_divisions;
            }
            return cmd_sweep(sweep_cfg, sweep_axis, sweep_values, sweep_seeds, sweep_out);
        }
        if (analyze->parsed()) {
            return cmd_analyze(analyze_runs, !no_nmi, !no_pscore, !no_dci, analyze_images,
                               analyze_seed);
        }
        if (report_cmd->parsed()) {
            return cmd_report(report_aggregates, report_runs, report_out);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
