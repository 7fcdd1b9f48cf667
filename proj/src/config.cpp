#include "sglab/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

#include "sglab/checkpoint.hpp"

namespace sglab {

using nlohmann::json;

namespace {

json dataset_json(const DatasetConfig& c) {
    return json{{"n_colors", c.n_colors},
                {"common_ratio", c.common_ratio},
                {"p_burst", c.p_burst},
                {"burst_cap", c.burst_cap},
                {"jitter", c.jitter},
                {"jitter_redraw", c.jitter_redraw},
                {"train_size", c.train_size},
                {"test_size", c.test_size},
                {"train_fraction", c.train_fraction},
                {"image_side", c.image_side},
                {"patch_side", c.patch_side},
                {"seed", c.seed}};
}

DatasetConfig dataset_from(const json& j) {
    DatasetConfig c;
    c.n_colors = j.value("n_colors", c.n_colors);
    c.common_ratio = j.value("common_ratio", c.common_ratio);
    c.p_burst = j.value("p_burst", c.p_burst);
    c.burst_cap = j.value("burst_cap", c.burst_cap);
    c.jitter = j.value("jitter", c.jitter);
    c.jitter_redraw = j.value("jitter_redraw", c.jitter_redraw);
    c.train_size = j.value("train_size", c.train_size);
    c.test_size = j.value("test_size", c.test_size);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.image_side = j.value("image_side", c.image_side);
    c.patch_side = j.value("patch_side", c.patch_side);
    c.seed = j.value("seed", c.seed);
    return c;
}

json train_json(const TrainConfig& c) {
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

TrainConfig train_from(const json& j) {
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.mlm_probability = j.value("mlm_probability", c.mlm_probability);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.seed = j.value("seed", c.seed);
    c.eval_every = j.value("eval_every", c.eval_every);
    c.eval_max_samples = j.value("eval_max_samples", c.eval_max_samples);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.save_best_id = j.value("save_best_id", c.save_best_id);
    return c;
}

json model_json(const ModelConfig& c) { return json::parse(model_config_to_json_str(c)); }

ModelConfig model_from(const json& j) {
    ModelConfig c;
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.n_layers = j.value("n_layers", c.n_layers);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.patch_dim = j.value("patch_dim", c.patch_dim);
    c.max_seq_len = j.value("max_seq_len", c.max_seq_len);
    c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
    c.seed = j.value("seed", c.seed);
    return c;
}

}  // namespace

std::string ExperimentConfig::to_json_str() const {
    json j{{"dataset", dataset_json(dataset)},
           {"model", model_json(model)},
           {"train", train_json(train)},
           {"analysis", json{{"nmi", run_nmi}, {"pscore", run_pscore}, {"dci", run_dci}}},
           {"output_dir", output_dir}};
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_str(const std::string& s) {
    json j = json::parse(s);
    ExperimentConfig c;
    if (j.contains("dataset")) c.dataset = dataset_from(j.at("dataset"));
    if (j.contains("model")) c.model = model_from(j.at("model"));
    if (j.contains("train")) c.train = train_from(j.at("train"));
    if (j.contains("analysis")) {
        const auto& a = j.at("analysis");
        c.run_nmi = a.value("nmi", c.run_nmi);
        c.run_pscore = a.value("pscore", c.run_pscore);
        c.run_dci = a.value("dci", c.run_dci);
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_str(text);
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config: " + path.string());
    out << to_json_str() << '\n';
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    if (name == "desk") {
        c.dataset.n_colors = 8;
        c.dataset.train_size = 8000;
        c.dataset.test_size = 2000;
        c.dataset.image_side = 64;
        c.dataset.patch_side = 8;
        c.model.hidden_dim = 128;
        c.model.n_layers = 2;
        c.model.n_heads = 4;
        c.train.epochs = 200;
        c.train.batch_size = 128;
    } else if (name == "paper") {
        c.dataset.n_colors = 8;
        c.dataset.train_size = 75000;
        c.dataset.test_size = 15000;
        c.dataset.image_side = 224;
        c.dataset.patch_side = 16;
        c.model.hidden_dim = 256;
        c.model.n_layers = 4;
        c.model.n_heads = 4;
        c.train.epochs = 1000;
        c.train.batch_size = 256;
    } else {
        throw ConfigError("unknown preset: " + name + " (expected desk or paper)");
    }
    return c;
}

}  // namespace sglab
