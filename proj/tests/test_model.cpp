#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "reference_forward.hpp"
#include "sglab/checkpoint.hpp"
#include "sglab/model.hpp"

using namespace sglab;

namespace {

ModelConfig toy_config(int d = 8, int layers = 2, int heads = 2) {
    ModelConfig c;
    c.hidden_dim = d;
    c.n_layers = layers;
    c.n_heads = heads;
    c.vocab_size = 18;
    c.patch_dim = 12;  // 2x2 patches
    c.max_seq_len = 32;
    c.mlp_ratio = 4;
    c.seed = 7;
    return c;
}

template <class S>
Mat<S> random_patches(int n, int dim, uint64_t seed) {
    Rng rng = make_rng(seed);
    Mat<S> m(n, dim);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < dim; ++c) m(r, c) = static_cast<S>(uniform_real(rng));
    return m;
}

template <class S>
std::vector<BatchSample<S>> toy_batch(const ModelConfig& cfg, uint64_t seed) {
    std::vector<BatchSample<S>> batch;
    {
        BatchSample<S> a;
        a.patches = random_patches<S>(4, cfg.patch_dim, seed);
        a.token_ids = {3, 6, 13, 16, 2, 4, 1, 14, 17};  // entity, SEP, entity with [MASK]
        a.masks = {{6, 9}};
        batch.push_back(std::move(a));
    }
    {
        BatchSample<S> b;  // text-only sample
        b.patches.resize(0, cfg.patch_dim);
        b.token_ids = {1, 7, 13, 15};
        b.masks = {{0, 4}};
        batch.push_back(std::move(b));
    }
    return batch;
}

}  // namespace

TEST_CASE("embed concatenates image-first with the right length") {
    ModelConfig cfg = toy_config();
    cfg.max_seq_len = 128;
    Parameters<float> p = Parameters<float>::init(cfg);
    Mat<float> patches = random_patches<float>(64, cfg.patch_dim, 3);
    std::vector<int> tokens(34, 5);
    Mat<float> x = embed(patches, tokens, p);
    CHECK(x.rows() == 98);
    CHECK(x.cols() == cfg.hidden_dim);

    Mat<float> x2 = embed(patches, tokens, p);
    CHECK(x == x2);

    // text-only: embedding is exactly the token + positional + modality sum
    Mat<float> empty(0, cfg.patch_dim);
    Mat<float> t = embed(empty, {7}, p);
    CHECK(t.rows() == 1);
    Eigen::RowVectorXf expected = p.token_embed.row(7) + p.pos_text.row(0) + p.modality.row(1);
    CHECK((t.row(0) - expected).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("embed rejects overlength sequences") {
    ModelConfig cfg = toy_config();
    Parameters<float> p = Parameters<float>::init(cfg);
    Mat<float> patches = random_patches<float>(30, cfg.patch_dim, 3);
    std::vector<int> tokens(10, 5);
    CHECK_THROWS_AS(embed(patches, tokens, p), CapacityError);
}

TEST_CASE("attention rows are normalized and layer norm is standardized") {
    ModelConfig cfg = toy_config(16, 2, 2);
    Parameters<double> p = Parameters<double>::init(cfg);
    Mat<double> patches = random_patches<double>(4, cfg.patch_dim, 11);
    std::vector<int> tokens = {3, 6, 13, 16, 2, 4, 8, 14, 17};
    // unit-scale activations: the 1e-5 norm epsilon must stay negligible
    // against the row variance for the variance bound to be meaningful
    Mat<double> x = embed(patches, tokens, p) * 30.0;
    ForwardCache<double> cache;
    forward(x, {5}, p, &cache);

    for (const auto& layer : cache.layers) {
        for (const auto& a : layer.attn) {
            for (Eigen::Index r = 0; r < a.rows(); ++r) {
                CHECK(std::abs(a.row(r).sum() - 1.0) < 1e-5);
                CHECK((a.row(r).array() >= 0).all());
            }
        }
        for (const Mat<double>* xhat : {&layer.xhat1, &layer.xhat2}) {
            for (Eigen::Index r = 0; r < xhat->rows(); ++r) {
                CHECK(std::abs(xhat->row(r).mean()) <= 1e-5);
                const double var = xhat->row(r).array().square().mean();
                CHECK(std::abs(var - 1.0) <= 1e-3);
            }
        }
    }
}

TEST_CASE("permuting entity blocks with their positions leaves logits unchanged") {
    ModelConfig cfg = toy_config(8, 2, 2);
    Parameters<double> p = Parameters<double>::init(cfg);
    Mat<double> empty(0, cfg.patch_dim);
    // two entity blocks separated by [SEP]; mask the first entity's shape slot
    std::vector<int> tokens = {3, 6, 13, 1, 2, 4, 8, 14, 17};
    Mat<double> x = embed(empty, tokens, p);

    ForwardResult<double> base = forward(x, {3}, p);

    Mat<double> permuted(x.rows(), x.cols());
    // block swap: rows 0..3 <-> rows 5..8, [SEP] row 4 stays
    for (int i = 0; i < 4; ++i) {
        permuted.row(i) = x.row(5 + i);
        permuted.row(5 + i) = x.row(i);
    }
    permuted.row(4) = x.row(4);
    ForwardResult<double> swapped = forward(permuted, {8}, p);

    CHECK((base.logits - swapped.logits).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("forward matches the straight-line reference oracle") {
    for (int layers : {1, 2}) {
        ModelConfig cfg = toy_config(8, layers, 2);
        Parameters<double> p = Parameters<double>::init(cfg);
        Mat<double> patches = random_patches<double>(4, cfg.patch_dim, 19);
        std::vector<int> tokens = {3, 6, 13, 16, 1};
        std::vector<int> mask_positions = {4 + 4};  // the [MASK] token

        Mat<double> x = embed(patches, tokens, p);
        ForwardResult<double> out = forward(x, mask_positions, p);

        reffwd::Matrix ref_patches(patches.rows(), std::vector<double>(patches.cols()));
        for (Eigen::Index r = 0; r < patches.rows(); ++r)
            for (Eigen::Index c = 0; c < patches.cols(); ++c) ref_patches[r][c] = patches(r, c);
        reffwd::Matrix ref = reffwd::reference_logits(p, ref_patches, tokens, mask_positions);

        for (size_t i = 0; i < mask_positions.size(); ++i) {
            for (int c = 0; c < cfg.vocab_size; ++c) {
                CHECK(std::abs(out.logits(i, c) - ref[i][c]) < 1e-6);
            }
        }
    }
}

TEST_CASE("uniform logits from zero parameters give loss ln V") {
    ModelConfig cfg = toy_config();
    Parameters<double> p = Parameters<double>::zeros(cfg);
    Parameters<double> g = Parameters<double>::zeros(cfg);
    auto batch = toy_batch<double>(cfg, 23);
    const double loss = loss_and_grads(batch, p, g);
    CHECK(loss == doctest::Approx(std::log(18.0)).epsilon(1e-9));
}

TEST_CASE("duplicating the batch leaves the loss unchanged") {
    ModelConfig cfg = toy_config();
    Parameters<double> p = Parameters<double>::init(cfg);
    Parameters<double> g = Parameters<double>::zeros(cfg);
    auto batch = toy_batch<double>(cfg, 29);
    const double loss1 = loss_and_grads(batch, p, g);
    auto doubled = batch;
    doubled.insert(doubled.end(), batch.begin(), batch.end());
    const double loss2 = loss_and_grads(doubled, p, g);
    CHECK(loss1 == doctest::Approx(loss2).epsilon(1e-12));
}

TEST_CASE("loss requires at least one masked position") {
    ModelConfig cfg = toy_config();
    Parameters<double> p = Parameters<double>::init(cfg);
    Parameters<double> g = Parameters<double>::zeros(cfg);
    std::vector<BatchSample<double>> batch(1);
    batch[0].patches.resize(0, cfg.patch_dim);
    batch[0].token_ids = {3, 6, 13, 16};
    CHECK_THROWS_AS(loss_and_grads(batch, p, g), ConfigError);
}

TEST_CASE("analytic gradients match central finite differences") {
    for (int d : {8, 16}) {
        for (int layers : {1, 2}) {
            for (int heads : {1, 2}) {
                ModelConfig cfg = toy_config(d, layers, heads);
                cfg.seed = 100 + d + layers * 10 + heads;
                Parameters<double> p = Parameters<double>::init(cfg);
                Parameters<double> grads = Parameters<double>::zeros(cfg);
                auto batch = toy_batch<double>(cfg, 31 + d);
                loss_and_grads(batch, p, grads);

                Parameters<double> scratch = Parameters<double>::zeros(cfg);
                auto p_tensors = p.tensors();
                auto g_tensors = grads.tensors();
                for (size_t t = 0; t < p_tensors.size(); ++t) {
                    Mat<double>& tensor = *p_tensors[t];
                    const Mat<double>& analytic = *g_tensors[t];
                    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
                        const double a = analytic.data()[i];
                        const double saved = tensor.data()[i];
                        // centered difference at eps=1e-3; coordinates where the
                        // O(eps^2) truncation term dominates are re-checked at a
                        // refined step
                        double err = 0.0;
                        for (double eps : {1e-3, 1e-5}) {
                            tensor.data()[i] = saved + eps;
                            const double up = loss_and_grads(batch, p, scratch);
                            tensor.data()[i] = saved - eps;
                            const double down = loss_and_grads(batch, p, scratch);
                            tensor.data()[i] = saved;
                            const double fd = (up - down) / (2.0 * eps);
                            err = std::abs(a - fd) /
                                  std::max(1e-3, std::abs(a) + std::abs(fd));
                            if (err <= 1e-3) break;
                        }
                        CHECK(err <= 1e-3);
                    }
                }
            }
        }
    }
}

TEST_CASE("representation is the hidden state, separate from the head") {
    ModelConfig cfg = toy_config();
    Parameters<float> p = Parameters<float>::init(cfg);
    p.head_weight.setZero();
    p.head_bias.setZero();

    Mat<float> patches = random_patches<float>(4, cfg.patch_dim, 41);
    QuerySequence seq;
    seq.ids = {3, 6, 13, 1};
    seq.masks = {{3, 16}};
    Vec<float> rep = extract_representation(patches, seq, p);
    CHECK(rep.size() == cfg.hidden_dim);
    CHECK(rep.cwiseAbs().maxCoeff() > 0.0f);

    Vec<float> rep2 = extract_representation(patches, seq, p);
    CHECK(rep == rep2);

    Mat<float> x = embed(patches, seq.ids, p);
    ForwardResult<float> out = forward(x, {4 + 3}, p);
    CHECK(out.logits.cwiseAbs().maxCoeff() == 0.0f);  // zeroed head
}

TEST_CASE("parameter count is config-determined and checkpoints roundtrip bitwise") {
    ModelConfig cfg = toy_config(16, 2, 2);
    Parameters<float> p = Parameters<float>::init(cfg);
    Parameters<float> q = Parameters<float>::init(cfg);
    CHECK(p.param_count() == q.param_count());

    Checkpoint ckpt;
    ckpt.params = p;
    ckpt.step = 1234;
    ckpt.epoch = 7;
    ckpt.manifest_hash = "deadbeef";
    ckpt.adam = AdamState::zeros(cfg);
    ckpt.adam->step = 1234;
    ckpt.adam->m.patch_weight.setConstant(0.25f);

    const auto path = std::filesystem::temp_directory_path() / "sglab_test_ckpt.bin";
    save_checkpoint(ckpt, path);
    Checkpoint back = load_checkpoint(path);
    CHECK(back.step == 1234);
    CHECK(back.epoch == 7);
    CHECK(back.manifest_hash == "deadbeef");
    CHECK(back.params.param_count() == p.param_count());
    REQUIRE(back.adam.has_value());

    auto orig = ckpt.params.tensors();
    auto loaded = back.params.tensors();
    for (size_t i = 0; i < orig.size(); ++i) {
        CHECK(orig[i]->rows() == loaded[i]->rows());
        CHECK((*orig[i] == *loaded[i]));
    }
    CHECK((back.adam->m.patch_weight == ckpt.adam->m.patch_weight));
    std::filesystem::remove(path);
}
