#include <doctest.h>

#include <filesystem>

#include "sglab/config.hpp"
#include "sglab/sweep.hpp"
#include "sglab/trainer.hpp"

using namespace sglab;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

DatasetManifest toy_dataset(const fs::path& dir, int train = 32, int test = 8) {
    DatasetConfig c;
    c.n_colors = 8;
    c.train_size = train;
    c.test_size = test;
    c.image_side = 32;
    c.patch_side = 8;
    c.seed = 77;
    return build_dataset(c, dir);
}

ModelConfig toy_model(const DatasetManifest& manifest, uint64_t seed = 0) {
    ModelConfig mc;
    mc.hidden_dim = 16;
    mc.n_layers = 1;
    mc.n_heads = 2;
    mc.seed = seed;
    return resolve_model_config(mc, manifest);
}

TrainConfig toy_train(int epochs = 1) {
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 8;
    tc.epochs = epochs;
    tc.eval_every = 0;
    tc.seed = 0;
    return tc;
}

}  // namespace

TEST_CASE("one epoch on a toy set reduces the loss for most seeds") {
    const fs::path dir = fresh_dir("sglab_train_toy");
    DatasetManifest manifest = toy_dataset(dir);
    int improved = 0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        ModelConfig mc = toy_model(manifest, seed);
        TrainConfig tc = toy_train(2);
        tc.seed = seed;
        Trainer trainer(manifest, mc, tc);
        trainer.run_epoch(0);
        const double first = trainer.last_epoch_loss();
        trainer.run_epoch(1);
        const double second = trainer.last_epoch_loss();
        improved += second < first;
    }
    CHECK(improved >= 9);
    fs::remove_all(dir);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
    const fs::path dir = fresh_dir("sglab_train_lr0");
    DatasetManifest manifest = toy_dataset(dir);
    ModelConfig mc = toy_model(manifest);
    TrainConfig tc = toy_train(1);
    tc.learning_rate = 0.0;
    Trainer trainer(manifest, mc, tc);
    Parameters<float> before = trainer.params();
    trainer.run_epoch(0);
    Parameters<float> after = trainer.params();
    auto b = before.tensors();
    auto a = after.tensors();
    for (size_t i = 0; i < a.size(); ++i) CHECK((*a[i] == *b[i]));
    fs::remove_all(dir);
}

TEST_CASE("restoring a snapshot reproduces the uninterrupted run bitwise") {
    const fs::path dir = fresh_dir("sglab_train_resume");
    DatasetManifest manifest = toy_dataset(dir);
    ModelConfig mc = toy_model(manifest);
    TrainConfig tc = toy_train(2);

    Trainer straight(manifest, mc, tc);
    straight.run_epoch(0);
    straight.run_epoch(1);

    Trainer first(manifest, mc, tc);
    first.run_epoch(0);
    Checkpoint snap = first.snapshot(0);

    Trainer resumed(manifest, mc, tc);
    resumed.restore(snap);
    resumed.run_epoch(1);

    Parameters<float> sp = straight.params();
    Parameters<float> rp = resumed.params();
    auto a = sp.tensors();
    auto b = rp.tensors();
    for (size_t i = 0; i < a.size(); ++i) CHECK((*a[i] == *b[i]));
    fs::remove_all(dir);
}

TEST_CASE("train writes run artifacts and is idempotent") {
    const fs::path dir = fresh_dir("sglab_train_files");
    const fs::path run_dir = dir / "run";
    DatasetManifest manifest = toy_dataset(dir / "data");
    ModelConfig mc = toy_model(manifest);
    TrainConfig tc = toy_train(1);
    tc.eval_every = 1;

    RunRecord record = train(manifest, mc, tc, run_dir);
    CHECK(record.status == "complete");
    CHECK(record.param_count == Parameters<float>::init(mc).param_count());
    CHECK(fs::exists(run_dir / "run.json"));
    CHECK(fs::exists(run_dir / "metrics.csv"));
    CHECK(fs::exists(run_dir / "checkpoint.bin"));
    CHECK(record.epoch_losses.size() == 1);
    CHECK(record.final_accuracy("test_ood", Attribute::Shape) >= 0.0);

    RunRecord again = train(manifest, mc, tc, run_dir);  // returns the stored record
    CHECK(again.status == "complete");
    CHECK(again.epoch_losses == record.epoch_losses);

    RunRecord loaded = load_run_record(run_dir / "run.json");
    CHECK(loaded.manifest_hash == record.manifest_hash);
    CHECK(loaded.config_json == record.config_json);
    fs::remove_all(dir);
}

TEST_CASE("mean and stderr match hand-computed three-value cases") {
    auto [m1, s1] = mean_stderr({1.0, 2.0, 3.0});
    CHECK(m1 == doctest::Approx(2.0));
    CHECK(s1 == doctest::Approx(1.0 / std::sqrt(3.0)));
    auto [m2, s2] = mean_stderr({0.4});
    CHECK(m2 == doctest::Approx(0.4));
    CHECK(s2 == 0.0);
}

TEST_CASE("sweep applies axes and aggregates per cell") {
    // degenerate sweep: one value, one seed == one train call
    const fs::path dir = fresh_dir("sglab_sweep_toy");
    ExperimentConfig base;
    base.dataset.n_colors = 8;
    base.dataset.train_size = 12;
    base.dataset.test_size = 4;
    base.dataset.image_side = 32;
    base.dataset.patch_side = 8;
    base.dataset.seed = 3;
    base.model.hidden_dim = 16;
    base.model.n_layers = 1;
    base.model.n_heads = 2;
    base.train = toy_train(1);

    SweepSpec spec{"n_colors", {8.0}, 1};
    SweepResult result = run_sweep(base, spec, dir);
    REQUIRE(result.cells.size() == 1);
    CHECK(result.cells[0].status == "complete");
    const auto key = AggregateTable::key(8.0, "shape", "test_ood");
    REQUIRE(result.aggregate.cells.count(key) == 1);
    CHECK(result.aggregate.cells.at(key).n == 1);
    CHECK(result.aggregate.cells.at(key).stderr_ == 0.0);

    CHECK_THROWS_AS(run_sweep(base, SweepSpec{"bogus", {1.0}, 1}, dir), ConfigError);

    // apply_axis routing
    CHECK(apply_axis(base, "hidden_dim", 32).model.hidden_dim == 32);
    CHECK(apply_axis(base, "p_burst", 0.5).dataset.p_burst == 0.5);
    CHECK(apply_axis(base, "train_fraction", 0.25).dataset.train_fraction == 0.25);
    fs::remove_all(dir);
}

TEST_CASE("experiment config roundtrips through JSON") {
    ExperimentConfig c = preset("desk");
    c.dataset.p_burst = 0.5;
    c.train.seed = 9;
    c.run_dci = false;
    ExperimentConfig back = ExperimentConfig::from_json_str(c.to_json_str());
    CHECK(back.to_json_str() == c.to_json_str());
    CHECK(back.dataset.p_burst == 0.5);
    CHECK(back.train.seed == 9);
    CHECK_FALSE(back.run_dci);
    CHECK_THROWS_AS(preset("nope"), ConfigError);
}
