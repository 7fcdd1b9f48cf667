#include "sglab/trainer.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <fstream>

#include "sglab/patches.hpp"
#include "sglab/png_io.hpp"
#include "sglab/raster.hpp"
#include "sglab/runtime.hpp"

namespace sglab {

using nlohmann::json;

namespace {

#ifndef SGLAB_SOURCE_REV
#define SGLAB_SOURCE_REV "unknown"
#endif

constexpr uint64_t kShuffleStream = 0x5f5f;
constexpr uint64_t kMaskStream = 0x3a5c;
constexpr uint64_t kJitterStream = 0x717e;

json train_config_json(const TrainConfig& c) {
    return json{{"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"epochs", c.epochs},
                {"mlm_probability", c.mlm_probability},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"adam_eps", c.adam_eps},
                {"seed", c.seed},
                {"eval_every", c.eval_every},
                {"eval_max_samples", c.eval_max_samples},
                {"checkpoint_every", c.checkpoint_every},
                {"save_best_id", c.save_best_id}};
}

}  // namespace

double RunRecord::final_accuracy(const std::string& split, Attribute a) const {
    double value = -1.0;
    int best_epoch = -1;
    for (const auto& e : evals) {
        if (e.split == split && e.attribute == label(a) && e.epoch >= best_epoch) {
            best_epoch = e.epoch;
            value = e.accuracy;
        }
    }
    if (best_epoch < 0) throw ConfigError("run record has no eval for " + split + "/" + label(a));
    return value;
}

void save_run_record(const RunRecord& r, const std::filesystem::path& path) {
    json evals = json::array();
    for (const auto& e : r.evals) {
        evals.push_back(json{{"epoch", e.epoch},
                             {"split", e.split},
                             {"attribute", e.attribute},
                             {"accuracy", e.accuracy}});
    }
    json j{{"status", r.status},
           {"dataset_dir", r.dataset_dir},
           {"manifest_hash", r.manifest_hash},
           {"source_rev", r.source_rev},
           {"param_count", r.param_count},
           {"wall_seconds", r.wall_seconds},
           {"epoch_losses", r.epoch_losses},
           {"evals", evals},
           {"checkpoint_path", r.checkpoint_path},
           {"config", json::parse(r.config_json)}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

RunRecord load_run_record(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    json j = json::parse(in);
    RunRecord r;
    r.status = j.at("status").get<std::string>();
    r.dataset_dir = j.at("dataset_dir").get<std::string>();
    r.manifest_hash = j.at("manifest_hash").get<std::string>();
    r.source_rev = j.at("source_rev").get<std::string>();
    r.param_count = j.at("param_count").get<size_t>();
    r.wall_seconds = j.at("wall_seconds").get<double>();
    r.epoch_losses = j.at("epoch_losses").get<std::vector<double>>();
    for (const auto& e : j.at("evals")) {
        r.evals.push_back(EvalEntry{e.at("epoch").get<int>(), e.at("split").get<std::string>(),
                                    e.at("attribute").get<std::string>(),
                                    e.at("accuracy").get<double>()});
    }
    r.checkpoint_path = j.at("checkpoint_path").get<std::string>();
    r.config_json = j.at("config").dump();
    return r;
}

ModelConfig resolve_model_config(ModelConfig base, const DatasetManifest& manifest) {
    const auto& dc = manifest.config;
    base.vocab_size = static_cast<int>(manifest.vocab_tokens.size());
    base.patch_dim = dc.patch_side * dc.patch_side * 3;
    const int n_patches = (dc.image_side / dc.patch_side) * (dc.image_side / dc.patch_side);
    const int max_text = 10 * (kTokensPerEntity + 1) - 1;
    base.max_seq_len = n_patches + max_text;
    base.validate();
    return base;
}

Trainer::Trainer(const DatasetManifest& manifest, const ModelConfig& model_config,
                 const TrainConfig& train_config)
    : manifest_(manifest), config_(train_config) {
    tune_allocator();
    config_.validate();
    ModelConfig mc = model_config;
    mc.validate();
    const Vocabulary vocab = manifest.vocabulary();
    if (mc.vocab_size != vocab.size()) {
        throw CompatibilityError("model vocab_size does not match the dataset vocabulary");
    }
    params_ = Parameters<float>::init(mc);
    grads_ = Parameters<float>::zeros(mc);
    adam_ = AdamState::zeros(mc);

    const auto records = load_records(manifest_, Subset::Train);
    samples_.reserve(records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        CachedSample s;
        s.image = read_png(manifest_.image_path(Subset::Train, i));
        QuerySequence seq = serialize(records[i].scene, vocab);
        s.token_ids = seq.ids;
        samples_.push_back(std::move(s));
    }
}

void Trainer::adam_step() {
    adam_.step += 1;
    const float lr = static_cast<float>(config_.learning_rate);
    const float b1 = static_cast<float>(config_.beta1);
    const float b2 = static_cast<float>(config_.beta2);
    const float eps = static_cast<float>(config_.adam_eps);
    const float bc1 = 1.0f - std::pow(b1, static_cast<float>(adam_.step));
    const float bc2 = 1.0f - std::pow(b2, static_cast<float>(adam_.step));

    auto ps = params_.tensors();
    auto gs = grads_.tensors();
    auto ms = adam_.m.tensors();
    auto vs = adam_.v.tensors();
    for (size_t i = 0; i < ps.size(); ++i) {
        auto& p = *ps[i];
        auto& g = *gs[i];
        auto& m = *ms[i];
        auto& v = *vs[i];
        m = b1 * m + (1.0f - b1) * g;
        v = (b2 * v.array() + (1.0f - b2) * g.array().square()).matrix();
        p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    }
}

void Trainer::run_epoch(int epoch) {
    const auto& dc = manifest_.config;
    std::vector<size_t> order(samples_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng = make_rng(config_.seed, kShuffleStream, static_cast<uint64_t>(epoch));
    shuffle(shuffle_rng, order);

    double loss_sum = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += config_.batch_size) {
        const size_t end = std::min(order.size(), start + config_.batch_size);
        std::vector<BatchSample<float>> batch;
        batch.reserve(end - start);
        for (size_t bi = start; bi < end; ++bi) {
            const size_t idx = order[bi];
            const CachedSample& s = samples_[idx];

            BatchSample<float> item;
            if (dc.jitter > 0.0) {
                Rng jitter_rng = make_rng(
                    config_.seed, kJitterStream + (dc.jitter_redraw ? epoch : 0), idx);
                Image jittered = hue_jitter(s.image, dc.jitter, jitter_rng);
                item.patches = patchify(jittered, dc.patch_side).patches;
            } else {
                item.patches = patchify(s.image, dc.patch_side).patches;
            }

            QuerySequence seq;
            seq.ids = s.token_ids;
            Rng mask_rng = make_rng(config_.seed, kMaskStream + epoch, idx);
            QuerySequence masked = mask_for_training(seq, config_.mlm_probability, mask_rng);
            if (masked.masks.empty()) continue;  // rare double-blank draw
            item.token_ids = std::move(masked.ids);
            item.masks = std::move(masked.masks);
            batch.push_back(std::move(item));
        }
        if (batch.empty()) continue;

        const float loss = loss_and_grads(batch, params_, grads_);
        if (!std::isfinite(loss)) throw NumericError("NaN loss at epoch " + std::to_string(epoch));
        adam_step();
        loss_sum += loss;
        ++batches;
    }
    last_loss_ = batches > 0 ? loss_sum / static_cast<double>(batches) : 0.0;
}

Checkpoint Trainer::snapshot(int epoch) const {
    Checkpoint ckpt;
    ckpt.params = params_;
    ckpt.step = adam_.step;
    ckpt.epoch = epoch;
    ckpt.manifest_hash = file_hash(manifest_.root / "manifest.json");
    ckpt.adam = adam_;
    return ckpt;
}

void Trainer::restore(const Checkpoint& ckpt) {
    params_ = ckpt.params;
    if (ckpt.adam) {
        adam_ = *ckpt.adam;
    } else {
        adam_ = AdamState::zeros(params_.config);
        adam_.step = ckpt.step;
    }
}

EvalReport Trainer::evaluate_subset(Subset subset, int max_samples) const {
    EvalOptions opt;
    opt.max_samples = max_samples;
    return evaluate(params_, manifest_, subset, opt);
}

RunRecord train(const DatasetManifest& manifest, const ModelConfig& model_config,
                const TrainConfig& train_config, const std::filesystem::path& run_dir) {
    const auto record_path = run_dir / "run.json";
    std::ifstream manifest_in(manifest.root / "manifest.json");
    json full_config{{"dataset", json::parse(manifest_in).at("config")},
                     {"model", json::parse(model_config_to_json_str(model_config))},
                     {"train", train_config_json(train_config)}};

    if (std::filesystem::exists(record_path)) {
        RunRecord existing = load_run_record(record_path);
        if (existing.status == "complete") {
            if (json::parse(existing.config_json) != full_config) {
                throw IoError("run directory holds a different config: " + run_dir.string());
            }
            return existing;
        }
    }
    std::filesystem::create_directories(run_dir);

    const auto t0 = std::chrono::steady_clock::now();
    Trainer trainer(manifest, model_config, train_config);

    RunRecord record;
    record.dataset_dir = manifest.root.string();
    record.manifest_hash = file_hash(manifest.root / "manifest.json");
    record.source_rev = SGLAB_SOURCE_REV;
    record.param_count = trainer.params().param_count();
    record.config_json = full_config.dump();

    int start_epoch = 0;
    const auto resume_path = run_dir / "checkpoint_last.bin";
    if (std::filesystem::exists(resume_path)) {
        Checkpoint ckpt = load_checkpoint(resume_path);
        trainer.restore(ckpt);
        start_epoch = ckpt.epoch + 1;
    }

    std::ofstream metrics(run_dir / "metrics.csv",
                          start_epoch > 0 ? std::ios::app : std::ios::out);
    if (start_epoch == 0) metrics << "epoch,loss,split,attribute,accuracy\n";

    double best_id_accuracy = -1.0;
    // Periodic evals may subsample; the final eval always covers the full
    // test sets.
    auto run_eval = [&](int epoch, int max_samples) {
        for (Subset subset : {Subset::TestId, Subset::TestOod}) {
            EvalReport report = trainer.evaluate_subset(subset, max_samples);
            for (Attribute a : kAttributes) {
                record.evals.push_back(
                    EvalEntry{epoch, report.split, label(a), report.accuracy(a)});
                metrics << epoch << ",," << report.split << ',' << label(a) << ','
                        << report.accuracy(a) << '\n';
            }
            if (subset == Subset::TestId && train_config.save_best_id) {
                const double shape_acc = report.accuracy(Attribute::Shape);
                if (shape_acc > best_id_accuracy) {
                    best_id_accuracy = shape_acc;
                    save_checkpoint(trainer.snapshot(epoch), run_dir / "checkpoint_best_id.bin");
                }
            }
        }
        metrics.flush();
    };

    try {
        for (int epoch = start_epoch; epoch < train_config.epochs; ++epoch) {
            trainer.run_epoch(epoch);
            record.epoch_losses.push_back(trainer.last_epoch_loss());
            metrics << epoch << ',' << trainer.last_epoch_loss() << ",,,\n";
            metrics.flush();

            const bool last = epoch + 1 == train_config.epochs;
            if (!last && train_config.eval_every > 0 &&
                (epoch + 1) % train_config.eval_every == 0) {
                run_eval(epoch, train_config.eval_max_samples);
            }
            if (!last && train_config.checkpoint_every > 0 &&
                (epoch + 1) % train_config.checkpoint_every == 0) {
                save_checkpoint(trainer.snapshot(epoch), resume_path);
            }
        }
        run_eval(train_config.epochs - 1, 0);
    } catch (const NumericError& e) {
        record.status = std::string("failed: ") + e.what();
        record.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        save_run_record(record, record_path);
        throw;
    }

    const auto ckpt_path = run_dir / "checkpoint.bin";
    save_checkpoint(trainer.snapshot(train_config.epochs - 1), ckpt_path);
    std::filesystem::remove(resume_path);

    record.status = "complete";
    record.checkpoint_path = ckpt_path.string();
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_run_record(record, record_path);
    return record;
}

}  // namespace sglab
