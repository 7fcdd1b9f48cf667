#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "sglab/analysis.hpp"
#include "sglab/trainer.hpp"

using namespace sglab;
namespace fs = std::filesystem;

namespace {

JointTable table_from(std::vector<std::vector<int64_t>> counts) {
    JointTable t;
    t.x_name = "x";
    t.y_name = "y";
    t.counts = std::move(counts);
    return t;
}

// Independent NMI route: I = H(X) + H(Y) - H(X,Y).
double nmi_oracle(const JointTable& t) {
    const double total = static_cast<double>(t.total());
    auto h = [&](const std::vector<int64_t>& m) {
        double out = 0;
        for (int64_t c : m)
            if (c > 0) out -= (c / total) * std::log(c / total);
        return out;
    };
    double hxy = 0;
    for (const auto& row : t.counts)
        for (int64_t c : row)
            if (c > 0) hxy -= (c / total) * std::log(c / total);
    const double hx = h(t.row_marginals()), hy = h(t.col_marginals());
    if (hx == 0.0 && hy == 0.0) return 1.0;
    const double denom = 0.5 * (hx + hy);
    if (denom == 0.0) return 0.0;
    return (hx + hy - hxy) / denom;
}

EmbeddingRecord record(Attribute masked, int size, int color, int material, int shape,
                       const Eigen::VectorXf& v, int64_t id) {
    EmbeddingRecord r;
    r.masked = masked;
    r.attributes = {size, color, material, shape};
    r.vector = v;
    r.sample_id = id;
    r.entity_index = 0;
    return r;
}

}  // namespace

TEST_CASE("nmi extremes: independence is 0 and bijection is 1") {
    JointTable uniform = table_from({{5, 5, 5, 5}, {5, 5, 5, 5}, {5, 5, 5, 5}, {5, 5, 5, 5}});
    CHECK(nmi(uniform) == doctest::Approx(0.0).epsilon(1e-12));

    JointTable diag = table_from({{7, 0, 0}, {0, 7, 0}, {0, 0, 7}});
    CHECK(nmi(diag) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nmi of the 6-count hand table") {
    // counts [[2,1],[1,2]]: I = 0.0566330 nats, H(X) = H(Y) = ln 2,
    // so I / mean(H) = 0.0816968 under the arithmetic mean.
    JointTable t = table_from({{2, 1}, {1, 2}});
    CHECK(nmi(t, NmiNormalization::Arithmetic) == doctest::Approx(0.0817042).epsilon(1e-4));
    CHECK(nmi(t, NmiNormalization::Geometric) == doctest::Approx(0.0817042).epsilon(1e-4));
    CHECK(nmi(t, NmiNormalization::Min) == nmi(t, NmiNormalization::Max));
}

TEST_CASE("nmi invariances and degenerate margins") {
    JointTable t = table_from({{4, 1, 0}, {2, 2, 3}});
    // symmetry under transpose
    JointTable tt = table_from({{4, 2}, {1, 2}, {0, 3}});
    CHECK(nmi(t) == doctest::Approx(nmi(tt)).epsilon(1e-12));
    // relabeling (row swap) and count scaling
    JointTable swapped = table_from({{2, 2, 3}, {4, 1, 0}});
    CHECK(nmi(t) == doctest::Approx(nmi(swapped)).epsilon(1e-12));
    JointTable scaled = table_from({{12, 3, 0}, {6, 6, 9}});
    CHECK(nmi(t) == doctest::Approx(nmi(scaled)).epsilon(1e-12));

    CHECK(nmi(table_from({{9}})) == 1.0);                 // both margins degenerate
    CHECK(nmi(table_from({{3, 4, 2}})) == 0.0);           // one margin degenerate
    CHECK_THROWS_AS(nmi(table_from({{0, 0}, {0, 0}})), ConfigError);
}

TEST_CASE("nmi matches the entropy-identity oracle on random tables") {
    Rng rng = make_rng(55);
    for (int trial = 0; trial < 25; ++trial) {
        const int rows = uniform_int(rng, 2, 5), cols = uniform_int(rng, 2, 5);
        std::vector<std::vector<int64_t>> counts(rows, std::vector<int64_t>(cols));
        for (auto& row : counts)
            for (auto& c : row) c = uniform_int(rng, 0, 9);
        counts[0][0] += 1;  // non-empty
        JointTable t = table_from(counts);
        CHECK(nmi(t) == doctest::Approx(nmi_oracle(t)).epsilon(1e-9));
    }
}

TEST_CASE("increasing common ratio lowers the train NMI under uniform draws") {
    // uniform attribute draws over legal sets, as in the dataset sampler
    Palette p = build_palette(2);
    std::vector<double> nmis;
    for (double ratio : {0.0, 0.5, 1.0}) {
        SplitSpec spec = build_split_spec(p, ratio, 3);
        JointTable t = JointTable::zeros("color", "shape", 8, 3);
        Rng rng = make_rng(17);
        for (int i = 0; i < 30000; ++i) {
            const int shape = uniform_int(rng, 0, 2);
            auto legal = legal_colors(spec, kShapes[shape], Split::A);
            t.counts[legal[uniform_below(rng, legal.size())]][shape] += 1;
        }
        nmis.push_back(nmi(t));
    }
    CHECK(nmis[0] > nmis[1]);
    CHECK(nmis[1] > nmis[2]);
    CHECK(nmis[2] < 0.01);  // ratio 1: independent draws
}

TEST_CASE("pscore is exactly 1 for additive factor structure") {
    Rng rng = make_rng(71);
    const int dim = 16;
    std::map<int, Eigen::VectorXf> f, g;
    for (int s : {1, 2}) {
        f[s] = Eigen::VectorXf::Zero(dim);
        for (int i = 0; i < dim; ++i) f[s](i) = static_cast<float>(normal(rng) * (s + 1));
    }
    for (int c = 0; c < 4; ++c) {
        g[c] = Eigen::VectorXf::Zero(dim);
        for (int i = 0; i < dim; ++i) g[c](i) = static_cast<float>(normal(rng) * 0.5);
    }
    EmbeddingSet set;
    set.dim = dim;
    int64_t id = 0;
    for (int s : {1, 2}) {
        for (int c = 0; c < 4; ++c) {
            for (int copy = 0; copy < 3; ++copy) {
                set.records.push_back(
                    record(Attribute::Shape, 0, c, 0, s, f[s] + g[c], id++));
            }
        }
    }
    PscoreOptions opt;
    opt.n_pairs = 200;
    opt.n_runs = 2;
    PscoreResult r = pscore(set, Attribute::Shape, Attribute::Color, opt);
    CHECK(r.mean == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("pscore singles: orthogonal gives 0 and 45 degrees gives 1/sqrt(2)") {
    auto build = [&](Eigen::Vector2f v11, Eigen::Vector2f v12) {
        EmbeddingSet set;
        set.dim = 2;
        set.records.push_back(record(Attribute::Shape, 0, 0, 0, 1, v11, 0));
        set.records.push_back(record(Attribute::Shape, 0, 1, 0, 1, v12, 1));
        set.records.push_back(record(Attribute::Shape, 0, 0, 0, 2, Eigen::Vector2f::Zero(), 2));
        set.records.push_back(record(Attribute::Shape, 0, 1, 0, 2, Eigen::Vector2f::Zero(), 3));
        return set;
    };
    PscoreOptions opt;
    opt.n_pairs = 8;
    opt.n_runs = 1;
    PscoreResult ortho =
        pscore(build({1, 0}, {0, 1}), Attribute::Shape, Attribute::Color, opt);
    CHECK(std::abs(ortho.mean) <= 1e-9);
    PscoreResult diag = pscore(build({1, 0}, {1, 1}), Attribute::Shape, Attribute::Color, opt);
    CHECK(diag.mean == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-5));
}

TEST_CASE("pscore is invariant under global rotation and translation") {
    Rng rng = make_rng(101);
    const int dim = 8;
    EmbeddingSet set;
    set.dim = dim;
    int64_t id = 0;
    for (int s : {0, 1, 2}) {
        for (int c = 0; c < 3; ++c) {
            for (int copy = 0; copy < 4; ++copy) {
                Eigen::VectorXf v(dim);
                for (int i = 0; i < dim; ++i) v(i) = static_cast<float>(normal(rng));
                set.records.push_back(record(Attribute::Shape, 0, c, 0, s, v, id++));
            }
        }
    }
    PscoreOptions opt;
    opt.n_pairs = 300;
    opt.n_runs = 2;
    opt.seed = 5;
    const double base = pscore(set, Attribute::Shape, Attribute::Color, opt).mean;

    // Householder rotation built in double, plus a constant offset.
    Eigen::VectorXd u(dim);
    for (int i = 0; i < dim; ++i) u(i) = normal(rng);
    u.normalize();
    Eigen::MatrixXd q = Eigen::MatrixXd::Identity(dim, dim) - 2.0 * u * u.transpose();
    Eigen::VectorXd shift(dim);
    for (int i = 0; i < dim; ++i) shift(i) = 0.5 * normal(rng);

    EmbeddingSet moved = set;
    for (auto& r : moved.records) {
        r.vector = ((q * r.vector.cast<double>()) + shift).cast<float>();
    }
    const double rotated = pscore(moved, Attribute::Shape, Attribute::Color, opt).mean;
    CHECK(rotated == doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("pscore coverage errors when an attribute has one value") {
    EmbeddingSet set;
    set.dim = 2;
    set.records.push_back(record(Attribute::Shape, 0, 0, 0, 1, Eigen::Vector2f{1, 0}, 0));
    set.records.push_back(record(Attribute::Shape, 0, 1, 0, 1, Eigen::Vector2f{0, 1}, 1));
    PscoreOptions opt;
    CHECK_THROWS_AS(pscore(set, Attribute::Shape, Attribute::Color, opt), CoverageError);
}

TEST_CASE("dci extremes from the importance matrix") {
    Eigen::MatrixXd identity_like = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < 4; ++i) identity_like(i, i) = 0.7;
    auto [d1, c1] = dci_from_importance(identity_like);
    CHECK(d1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c1 == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(6, 4, 0.25);
    auto [d2, c2] = dci_from_importance(uniform);
    CHECK(d2 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c2 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("dci matches a direct entropy-formula oracle on random matrices") {
    Rng rng = make_rng(202);
    for (int trial = 0; trial < 25; ++trial) {
        Eigen::MatrixXd r(6, 4);
        for (int i = 0; i < r.size(); ++i) r.data()[i] = uniform_real(rng);
        auto [d, c] = dci_from_importance(r);

        // oracle: written out longhand
        Eigen::MatrixXd cn = r;
        for (int f = 0; f < 4; ++f) cn.col(f) /= cn.col(f).sum();
        double total = cn.sum();
        double d_oracle = 0;
        for (int i = 0; i < 6; ++i) {
            double rs = cn.row(i).sum();
            double h = 0;
            for (int f = 0; f < 4; ++f) {
                double pr = cn(i, f) / rs;
                if (pr > 0) h -= pr * std::log(pr);
            }
            d_oracle += (rs / total) * (1.0 - h / std::log(4.0));
        }
        double c_oracle = 0;
        for (int f = 0; f < 4; ++f) {
            double h = 0;
            for (int i = 0; i < 6; ++i) {
                double pr = cn(i, f);
                if (pr > 0) h -= pr * std::log(pr);
            }
            c_oracle += (1.0 - h / std::log(6.0)) / 4.0;
        }
        CHECK(d == doctest::Approx(d_oracle).epsilon(1e-9));
        CHECK(c == doctest::Approx(c_oracle).epsilon(1e-9));

        // permutation invariance over dimensions
        Eigen::MatrixXd perm(6, 4);
        perm << r.row(5), r.row(3), r.row(0), r.row(1), r.row(4), r.row(2);
        auto [dp, cp] = dci_from_importance(perm);
        CHECK(dp == doctest::Approx(d).epsilon(1e-12));
        CHECK(cp == doctest::Approx(c).epsilon(1e-12));
    }
}

TEST_CASE("dci probes recover a linear factor layout") {
    Rng rng = make_rng(404);
    const int dim = 12;
    EmbeddingSet set;
    set.dim = dim;
    // factor f is encoded on dims 3f..3f+2
    for (int n = 0; n < 400; ++n) {
        int values[4] = {uniform_int(rng, 0, 1), uniform_int(rng, 0, 3), uniform_int(rng, 0, 1),
                         uniform_int(rng, 1, 2)};
        Eigen::VectorXf v = Eigen::VectorXf::Zero(dim);
        for (int f = 0; f < 4; ++f) {
            for (int k = 0; k < 3; ++k) {
                v(3 * f + k) = static_cast<float>(values[f] * (k + 1) + 0.05 * normal(rng));
            }
        }
        set.records.push_back(
            record(Attribute::Shape, values[0], values[1], values[2], values[3], v, n));
    }
    DciResult result = dci(set);
    CHECK(result.disentanglement > 0.5);
    CHECK(result.completeness > 0.5);
    CHECK(result.importance.rows() == dim);

    EmbeddingSet small;
    small.dim = dim;
    small.records.assign(set.records.begin(), set.records.begin() + 50);
    CHECK_THROWS_AS(dci(small), ConfigError);
}

TEST_CASE("pearson correlation with the t-distribution p-value") {
    Correlation same = correlate({1, 2, 3, 4}, {1, 2, 3, 4});
    CHECK(same.r == doctest::Approx(1.0));
    CHECK(same.p_value == doctest::Approx(0.0).epsilon(1e-12));

    Correlation inverse = correlate({1, 2, 3, 4}, {4, 3, 2, 1});
    CHECK(inverse.r == doctest::Approx(-1.0));

    // scipy.stats.pearsonr([1,2,3],[1,2,4]) = (0.981981, 0.121038)
    Correlation known = correlate({1, 2, 3}, {1, 2, 4});
    CHECK(known.r == doctest::Approx(0.9819805).epsilon(1e-6));
    CHECK(known.p_value == doctest::Approx(0.1210377).epsilon(1e-4));

    CHECK_THROWS_AS(correlate({1, 1, 1}, {1, 2, 3}), NumericError);
    CHECK_THROWS_AS(correlate({1, 2}, {1, 2}), ConfigError);
}

TEST_CASE("random-logit argmax chance level is 1/vocab (Monte-Carlo oracle)") {
    Rng rng = make_rng(777);
    const int vocab = 18;
    int hits = 0;
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
        int best = 0;
        double best_v = -1;
        for (int i = 0; i < vocab; ++i) {
            const double v = uniform_real(rng);
            if (v > best_v) {
                best_v = v;
                best = i;
            }
        }
        hits += best == 7;  // arbitrary fixed target
    }
    const double rate = static_cast<double>(hits) / trials;
    const double expected = 1.0 / vocab;
    const double sigma = std::sqrt(expected * (1 - expected) / trials);
    CHECK(std::abs(rate - expected) < 4 * sigma);
}

TEST_CASE("evaluate counts every cube and cylinder entity once per attribute") {
    const fs::path dir = fs::temp_directory_path() / "sglab_eval_counts";
    fs::remove_all(dir);
    DatasetConfig c;
    c.n_colors = 8;
    c.train_size = 4;
    c.test_size = 6;
    c.image_side = 32;
    c.patch_side = 8;
    c.seed = 15;
    DatasetManifest manifest = build_dataset(c, dir);

    ModelConfig mc;
    mc.hidden_dim = 16;
    mc.n_layers = 1;
    mc.n_heads = 2;
    mc = resolve_model_config(mc, manifest);
    Parameters<float> zero = Parameters<float>::zeros(mc);

    int64_t expected_entities = 0;
    for (const auto& r : load_records(manifest, Subset::TestId)) {
        for (const auto& e : r.scene.entities) expected_entities += e.shape != Shape::Sphere;
    }

    EvalReport report = evaluate(zero, manifest, Subset::TestId);
    for (Attribute a : kAttributes) {
        CHECK(report.cells.at(label(a)).total == expected_entities);
        // zero params predict [PAD] everywhere, so nothing is correct
        CHECK(report.cells.at(label(a)).correct == 0);
    }
    CHECK(report.restricted_to == "cubes+cylinders");

    // random masking mode stays within bounds and skips spheres
    EvalOptions opt;
    opt.mask_mode = "random";
    EvalReport random_report = evaluate(zero, manifest, Subset::TestId, opt);
    for (Attribute a : kAttributes) {
        CHECK(random_report.cells.at(label(a)).total <= expected_entities);
        CHECK(random_report.cells.at(label(a)).correct == 0);
    }

    // vocab mismatch is rejected
    ModelConfig wrong = mc;
    wrong.vocab_size = 30;
    Parameters<float> wrong_params = Parameters<float>::zeros(wrong);
    CHECK_THROWS_AS(evaluate(wrong_params, manifest, Subset::TestId), CompatibilityError);
    fs::remove_all(dir);
}

TEST_CASE("embedding sets roundtrip through their container") {
    EmbeddingSet set;
    set.dim = 4;
    Rng rng = make_rng(31);
    for (int i = 0; i < 10; ++i) {
        Eigen::VectorXf v(4);
        for (int k = 0; k < 4; ++k) v(k) = static_cast<float>(normal(rng));
        set.records.push_back(record(i % 2 ? Attribute::Shape : Attribute::Color, i % 2, i % 8,
                                     i % 2, 1 + i % 2, v, i));
    }
    const auto path = fs::temp_directory_path() / "sglab_test_embeddings.bin";
    set.save(path);
    EmbeddingSet back = EmbeddingSet::load(path);
    CHECK(back.dim == 4);
    REQUIRE(back.records.size() == 10);
    for (size_t i = 0; i < 10; ++i) {
        CHECK(back.records[i].vector == set.records[i].vector);
        CHECK(back.records[i].attributes == set.records[i].attributes);
        CHECK(back.records[i].masked == set.records[i].masked);
    }
    EmbeddingSet shapes = filter_by_masked(back, Attribute::Shape);
    CHECK(shapes.records.size() == 5);
    fs::remove_all(path);
}
