#include "sglab/analysis.hpp"

#include <nlohmann/json.hpp>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include "sglab/patches.hpp"
#include "sglab/png_io.hpp"

namespace sglab {

using nlohmann::json;

// ---------------------------------------------------------------- evaluate

namespace {

int attribute_value(const Entity& e, Attribute a) {
    switch (a) {
        case Attribute::Size: return static_cast<int>(e.size);
        case Attribute::Color: return e.color;
        case Attribute::Material: return static_cast<int>(e.material);
        case Attribute::Shape: return static_cast<int>(e.shape);
    }
    return 0;
}

int argmax_row(const Eigen::Ref<const Eigen::RowVectorXf>& row) {
    Eigen::Index best = 0;
    row.maxCoeff(&best);
    return static_cast<int>(best);
}

}  // namespace

EvalReport evaluate(const Parameters<float>& params, const DatasetManifest& manifest,
                    Subset subset, const EvalOptions& options) {
    const Vocabulary vocab = manifest.vocabulary();
    if (vocab.size() != params.config.vocab_size) {
        throw CompatibilityError("checkpoint vocab size " +
                                 std::to_string(params.config.vocab_size) +
                                 " does not match dataset vocab " + std::to_string(vocab.size()));
    }
    const auto records = load_records(manifest, subset);
    size_t n = records.size();
    if (options.max_samples > 0) n = std::min(n, static_cast<size_t>(options.max_samples));

    EvalReport report;
    report.split = subset_dir(subset);
    report.mask_mode = options.mask_mode;
    for (Attribute a : kAttributes) report.cells[label(a)] = {};

    Rng rng = make_rng(options.seed, /*stream=*/0xe7a1);
    for (size_t i = 0; i < n; ++i) {
        const auto& rec = records[i];
        Image img = read_png(manifest.image_path(subset, i));
        PatchSequence patches = patchify(img, manifest.config.patch_side);
        QuerySequence base = serialize(rec.scene, vocab);

        auto score_query = [&](const QuerySequence& masked) {
            std::vector<int> positions(masked.masks.size());
            for (size_t m = 0; m < masked.masks.size(); ++m) {
                positions[m] = patches.count() + masked.masks[m].position;
            }
            Mat<float> embedded = embed<float>(patches.patches, masked.ids, params);
            ForwardResult<float> fwd = forward<float>(embedded, positions, params);
            for (size_t m = 0; m < masked.masks.size(); ++m) {
                const MaskSite& site = masked.masks[m];
                const int entity = masked.entity_index[site.position];
                if (entity < 0) continue;
                const Shape shape = rec.scene.entities[entity].shape;
                if (shape == Shape::Sphere) continue;  // metrics cover cubes and cylinders
                const Attribute attr =
                    kAttributes[site.position % (kTokensPerEntity + 1)];
                auto& cell = report.cells[label(attr)];
                cell.total += 1;
                if (argmax_row(fwd.logits.row(static_cast<Eigen::Index>(m))) == site.true_id) {
                    cell.correct += 1;
                }
            }
        };

        if (options.mask_mode == "random") {
            score_query(mask_for_training(base, options.random_mask_p, rng));
        } else {
            for (int e = 0; e < static_cast<int>(rec.scene.entities.size()); ++e) {
                if (rec.scene.entities[e].shape == Shape::Sphere) continue;
                for (Attribute a : kAttributes) {
                    score_query(mask_for_eval(base, e, a));
                }
            }
        }
    }
    return report;
}

EvalReport evaluate(const Checkpoint& ckpt, const DatasetManifest& manifest, Subset subset,
                    const EvalOptions& options) {
    return evaluate(ckpt.params, manifest, subset, options);
}

// ---------------------------------------------------------------- nmi

NmiNormalization nmi_normalization_from_label(const std::string& s) {
    if (s == "arithmetic") return NmiNormalization::Arithmetic;
    if (s == "geometric") return NmiNormalization::Geometric;
    if (s == "min") return NmiNormalization::Min;
    if (s == "max") return NmiNormalization::Max;
    throw ConfigError("unknown NMI normalization: " + s);
}

const std::string& label(NmiNormalization n) {
    static const std::string labels[] = {"arithmetic", "geometric", "min", "max"};
    return labels[static_cast<int>(n)];
}

double nmi(const JointTable& table, NmiNormalization norm) {
    const double total = static_cast<double>(table.total());
    if (total <= 0) throw ConfigError("NMI of an empty table is undefined");

    const auto rows = table.row_marginals();
    const auto cols = table.col_marginals();
    auto entropy = [&](const std::vector<int64_t>& marginal) {
        double h = 0.0;
        for (int64_t c : marginal) {
            if (c > 0) {
                const double p = c / total;
                h -= p * std::log(p);
            }
        }
        return h;
    };
    const double hx = entropy(rows);
    const double hy = entropy(cols);
    if (hx == 0.0 && hy == 0.0) return 1.0;  // single-cell table

    double mi = 0.0;
    for (int i = 0; i < table.rows(); ++i) {
        for (int j = 0; j < table.cols(); ++j) {
            const int64_t c = table.counts[i][j];
            if (c <= 0) continue;
            const double pxy = c / total;
            const double px = rows[i] / total;
            const double py = cols[j] / total;
            mi += pxy * std::log(pxy / (px * py));
        }
    }
    double denom = 0.0;
    switch (norm) {
        case NmiNormalization::Arithmetic: denom = 0.5 * (hx + hy); break;
        case NmiNormalization::Geometric: denom = std::sqrt(hx * hy); break;
        case NmiNormalization::Min: denom = std::min(hx, hy); break;
        case NmiNormalization::Max: denom = std::max(hx, hy); break;
    }
    if (denom == 0.0) return 0.0;  // one degenerate margin: MI is 0 as well
    return std::clamp(mi / denom, 0.0, 1.0);
}

// ---------------------------------------------------------------- embeddings

void EmbeddingSet::save(const std::filesystem::path& path) const {
    json sample_ids = json::array(), entity_indices = json::array(), masked = json::array(),
         attributes = json::array();
    std::vector<float> payload;
    payload.reserve(records.size() * static_cast<size_t>(dim));
    for (const auto& r : records) {
        sample_ids.push_back(r.sample_id);
        entity_indices.push_back(r.entity_index);
        masked.push_back(label(r.masked));
        attributes.push_back(r.attributes);
        for (int i = 0; i < dim; ++i) payload.push_back(r.vector(i));
    }
    json header{{"format", "sglab-embeddings"},
                {"version", 1},
                {"dim", dim},
                {"count", records.size()},
                {"attribute_schema", {"size", "color", "material", "shape"}},
                {"sample_ids", sample_ids},
                {"entity_indices", entity_indices},
                {"masked", masked},
                {"attributes", attributes}};
    const std::string header_str = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write embeddings: " + path.string());
    out.write("SGEM", 4);
    const uint64_t hlen = header_str.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
}

EmbeddingSet EmbeddingSet::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read embeddings: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SGEM", 4) != 0) {
        throw IntegrityError("bad embeddings magic: " + path.string());
    }
    uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string header_str(hlen, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(hlen));
    json header = json::parse(header_str);

    EmbeddingSet set;
    set.dim = header.at("dim").get<int>();
    const size_t count = header.at("count").get<size_t>();
    set.records.resize(count);
    std::vector<float> payload(count * static_cast<size_t>(set.dim));
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!in) throw IntegrityError("truncated embeddings payload: " + path.string());
    for (size_t r = 0; r < count; ++r) {
        auto& rec = set.records[r];
        rec.sample_id = header.at("sample_ids").at(r).get<int64_t>();
        rec.entity_index = header.at("entity_indices").at(r).get<int>();
        rec.masked = attribute_from_label(header.at("masked").at(r).get<std::string>());
        for (int a = 0; a < 4; ++a) rec.attributes[a] = header.at("attributes").at(r).at(a).get<int>();
        rec.vector = Eigen::Map<const Eigen::VectorXf>(payload.data() + r * set.dim, set.dim);
    }
    return set;
}

EmbeddingSet extract_embeddings(const Parameters<float>& params, const DatasetManifest& manifest,
                                int n_images, uint64_t seed) {
    const Vocabulary vocab = manifest.vocabulary();
    if (vocab.size() != params.config.vocab_size) {
        throw CompatibilityError("checkpoint/manifest vocabulary mismatch");
    }
    EmbeddingSet set;
    set.dim = params.config.hidden_dim;

    Rng rng = make_rng(seed, /*stream=*/0xe3b0);
    for (Subset subset : {Subset::TestId, Subset::TestOod}) {
        const auto records = load_records(manifest, subset);
        std::vector<size_t> indices(records.size());
        for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
        const size_t want = std::min(indices.size(), static_cast<size_t>(n_images / 2));
        auto chosen = sample_without_replacement(rng, indices, want);
        std::sort(chosen.begin(), chosen.end());

        for (size_t idx : chosen) {
            const auto& rec = records[idx];
            Image img = read_png(manifest.image_path(subset, idx));
            PatchSequence patches = patchify(img, manifest.config.patch_side);
            QuerySequence base = serialize(rec.scene, vocab);
            for (int e = 0; e < static_cast<int>(rec.scene.entities.size()); ++e) {
                const Entity& ent = rec.scene.entities[e];
                if (ent.shape == Shape::Sphere) continue;
                for (Attribute a : {Attribute::Shape, Attribute::Color}) {
                    QuerySequence masked = mask_for_eval(base, e, a);
                    EmbeddingRecord out;
                    out.vector =
                        extract_representation<float>(patches.patches, masked, params);
                    for (Attribute attr : kAttributes) {
                        out.attributes[static_cast<int>(attr)] = attribute_value(ent, attr);
                    }
                    out.sample_id = static_cast<int64_t>(
                        (subset == Subset::TestOod ? 1000000000LL : 0LL) + idx);
                    out.entity_index = e;
                    out.masked = a;
                    set.records.push_back(std::move(out));
                }
            }
        }
    }
    return set;
}

EmbeddingSet filter_by_masked(const EmbeddingSet& set, Attribute masked) {
    EmbeddingSet out;
    out.dim = set.dim;
    for (const auto& r : set.records) {
        if (r.masked == masked) out.records.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------- p-score

PscoreResult pscore(const EmbeddingSet& embeddings, Attribute studied, Attribute secondary,
                    const PscoreOptions& options) {
    if (studied == secondary) throw ConfigError("p-score needs two distinct attributes");
    const int si = static_cast<int>(studied);
    const int ci = static_cast<int>(secondary);

    // Records whose vector was extracted at the studied attribute's mask.
    std::vector<const EmbeddingRecord*> pool;
    for (const auto& r : embeddings.records) {
        if (r.masked == studied) pool.push_back(&r);
    }
    std::map<std::pair<int, int>, std::vector<const EmbeddingRecord*>> buckets;
    std::set<int> studied_values, secondary_values;
    for (auto* r : pool) {
        buckets[{r->attributes[si], r->attributes[ci]}].push_back(r);
        studied_values.insert(r->attributes[si]);
        secondary_values.insert(r->attributes[ci]);
    }
    if (studied_values.size() < 2 || secondary_values.size() < 2) {
        throw CoverageError("p-score needs at least two values of both attributes");
    }

    auto cosine = [](const Eigen::VectorXf& a, const Eigen::VectorXf& b) {
        const double na = a.cast<double>().norm(), nb = b.cast<double>().norm();
        if (na == 0.0 || nb == 0.0) return 0.0;
        return a.cast<double>().dot(b.cast<double>()) / (na * nb);
    };

    Rng rng = make_rng(options.seed, /*stream=*/0x95c0);
    PscoreResult result;
    for (int run = 0; run < options.n_runs; ++run) {
        double sum = 0.0;
        int done = 0;
        int64_t budget = static_cast<int64_t>(options.n_pairs) * 64;
        while (done < options.n_pairs) {
            if (--budget < 0) {
                throw CoverageError(
                    "p-score sampling budget exhausted; attribute grid too sparse for " +
                    label(studied) + "/" + label(secondary));
            }
            const auto* o1 = pool[uniform_below(rng, pool.size())];
            const int s1 = o1->attributes[si], c1 = o1->attributes[ci];

            // o2: same studied value, different secondary value.
            std::vector<int> c2_options;
            for (int c2 : secondary_values) {
                if (c2 != c1 && buckets.count({s1, c2})) c2_options.push_back(c2);
            }
            if (c2_options.empty()) continue;
            const int c2 = c2_options[uniform_below(rng, c2_options.size())];
            const auto& b2 = buckets.at({s1, c2});
            const auto* o2 = b2[uniform_below(rng, b2.size())];

            // matched pair with a different studied value, same secondaries.
            std::vector<int> s2_options;
            for (int s2 : studied_values) {
                if (s2 != s1 && buckets.count({s2, c1}) && buckets.count({s2, c2})) {
                    s2_options.push_back(s2);
                }
            }
            if (s2_options.empty()) continue;
            const int s2 = s2_options[uniform_below(rng, s2_options.size())];
            const auto& b1p = buckets.at({s2, c1});
            const auto& b2p = buckets.at({s2, c2});
            const auto* o1p = b1p[uniform_below(rng, b1p.size())];
            const auto* o2p = b2p[uniform_below(rng, b2p.size())];

            Eigen::VectorXf va, vb;
            if (options.within_pair_order) {
                // realizes the secondary change within each pair
                va = o1->vector - o2->vector;
                vb = o1p->vector - o2p->vector;
            } else {
                // realizes the studied change across pairs (default)
                va = o1->vector - o1p->vector;
                vb = o2->vector - o2p->vector;
            }
            sum += cosine(va, vb);
            ++done;
        }
        result.run_means.push_back(sum / options.n_pairs);
    }

    double mean = 0.0;
    for (double m : result.run_means) mean += m;
    mean /= result.run_means.size();
    double var = 0.0;
    for (double m : result.run_means) var += (m - mean) * (m - mean);
    result.mean = mean;
    result.stderr_ = result.run_means.size() > 1
                         ? std::sqrt(var / (result.run_means.size() - 1)) /
                               std::sqrt(static_cast<double>(result.run_means.size()))
                         : 0.0;
    return result;
}

// ---------------------------------------------------------------- DCI

std::pair<double, double> dci_from_importance(const Eigen::MatrixXd& importance) {
    const Eigen::Index dims = importance.rows(), factors = importance.cols();
    if (dims < 1 || factors < 2) throw ConfigError("importance matrix too small");
    if ((importance.array() < 0).any()) throw ConfigError("importance must be non-negative");

    // Column-normalize so each factor's importance over dims sums to one.
    Eigen::MatrixXd r = importance;
    for (Eigen::Index f = 0; f < factors; ++f) {
        const double s = r.col(f).sum();
        if (s > 0) r.col(f) /= s;
    }

    auto entropy = [](const Eigen::VectorXd& p) {
        double h = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            if (p(i) > 0) h -= p(i) * std::log(p(i));
        }
        return h;
    };

    const double total = r.sum();
    double d_score = 0.0;
    for (Eigen::Index i = 0; i < dims; ++i) {
        const double row_sum = r.row(i).sum();
        if (row_sum <= 0 || total <= 0) continue;
        Eigen::VectorXd p = r.row(i).transpose() / row_sum;
        const double weight = row_sum / total;
        d_score += weight * (1.0 - entropy(p) / std::log(static_cast<double>(factors)));
    }

    double c_score = 0.0;
    int c_cells = 0;
    for (Eigen::Index f = 0; f < factors; ++f) {
        const double col_sum = r.col(f).sum();
        if (col_sum <= 0) continue;
        Eigen::VectorXd p = r.col(f) / col_sum;
        c_score += 1.0 - entropy(p) / std::log(static_cast<double>(dims));
        ++c_cells;
    }
    if (c_cells > 0) c_score /= c_cells;
    return {d_score, c_score};
}

namespace {

// L1-regularized multinomial logistic probe, FISTA with fixed step count.
// Returns per-class weights (classes x dims), intercept unpenalized.
Eigen::MatrixXd l1_probe(const Eigen::MatrixXd& x, const std::vector<int>& y, int n_classes,
                         double l1_penalty, const std::string& factor_name) {
    const Eigen::Index n = x.rows(), d = x.cols();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_classes, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n_classes);
    Eigen::MatrixXd w_prev = w, z_w = w;
    Eigen::VectorXd b_prev = b, z_b = b;

    // Lipschitz bound for the multinomial CE gradient: 0.5 * sigma_max(X)^2 / n.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(d).normalized();
    for (int i = 0; i < 60; ++i) v = (x.transpose() * (x * v)).normalized();
    const double sigma_sq = (x * v).squaredNorm();
    const double step = 1.0 / (0.5 * sigma_sq / static_cast<double>(n) + 1e-8);

    auto objective = [&](const Eigen::MatrixXd& wm, const Eigen::VectorXd& bv) {
        double obj = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd logits = wm * x.row(i).transpose() + bv;
            const double mx = logits.maxCoeff();
            const double lse = std::log((logits.array() - mx).exp().sum()) + mx;
            obj += lse - logits(y[i]);
        }
        return obj / static_cast<double>(n) + l1_penalty * wm.array().abs().sum();
    };

    double t_momentum = 1.0;
    double prev_obj = objective(w, b);
    const int max_iters = 600;
    for (int iter = 1; iter <= max_iters; ++iter) {
        // Gradient at the lookahead point.
        Eigen::MatrixXd probs(n, n_classes);
        Eigen::MatrixXd logits = x * z_w.transpose();
        logits.rowwise() += z_b.transpose();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mx = logits.row(i).maxCoeff();
            Eigen::ArrayXd e = (logits.row(i).transpose().array() - mx).exp();
            probs.row(i) = (e / e.sum()).transpose();
            probs(i, y[i]) -= 1.0;
        }
        Eigen::MatrixXd gw = probs.transpose() * x / static_cast<double>(n);
        Eigen::VectorXd gb = probs.colwise().sum().transpose() / static_cast<double>(n);

        Eigen::MatrixXd w_next = z_w - step * gw;
        // Soft-threshold for the L1 term.
        const double thresh = step * l1_penalty;
        w_next = w_next.unaryExpr([thresh](double v_) {
            if (v_ > thresh) return v_ - thresh;
            if (v_ < -thresh) return v_ + thresh;
            return 0.0;
        });
        Eigen::VectorXd b_next = z_b - step * gb;

        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
        z_w = w_next + ((t_momentum - 1.0) / t_next) * (w_next - w_prev);
        z_b = b_next + ((t_momentum - 1.0) / t_next) * (b_next - b_prev);
        w_prev = w_next;
        b_prev = b_next;
        w = w_next;
        b = b_next;
        t_momentum = t_next;
    }
    const double final_obj = objective(w, b);
    if (!std::isfinite(final_obj) || final_obj > prev_obj + 1e-9) {
        throw NumericError("probe failed to converge for factor " + factor_name);
    }
    return w;
}

}  // namespace

DciResult dci(const EmbeddingSet& embeddings, double l1_penalty) {
    if (embeddings.records.size() < 200) {
        throw ConfigError("DCI needs at least 200 embedding records");
    }
    const Eigen::Index n = static_cast<Eigen::Index>(embeddings.records.size());
    const Eigen::Index d = embeddings.dim;

    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        x.row(i) = embeddings.records[i].vector.cast<double>().transpose();
    }
    // Standardize dimensions; constant dims stay zero.
    for (Eigen::Index c = 0; c < d; ++c) {
        const double mean = x.col(c).mean();
        x.col(c).array() -= mean;
        const double sd = std::sqrt(x.col(c).squaredNorm() / static_cast<double>(n));
        if (sd > 1e-12) x.col(c) /= sd;
    }

    DciResult result;
    result.importance = Eigen::MatrixXd::Zero(d, 4);
    for (Attribute a : kAttributes) {
        const int ai = static_cast<int>(a);
        // Compact class ids for the observed values.
        std::map<int, int> class_of;
        std::vector<int> y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int value = embeddings.records[i].attributes[ai];
            auto [it, _] = class_of.emplace(value, static_cast<int>(class_of.size()));
            y[i] = it->second;
        }
        if (class_of.size() < 2) {
            throw CoverageError("factor " + label(a) + " has a single value; DCI undefined");
        }
        Eigen::MatrixXd w = l1_probe(x, y, static_cast<int>(class_of.size()), l1_penalty, label(a));
        result.importance.col(ai) = w.array().abs().colwise().sum().transpose();
    }

    auto [dis, comp] = dci_from_importance(result.importance);
    result.disentanglement = dis;
    result.completeness = comp;

    // Report the column-normalized matrix.
    for (int f = 0; f < 4; ++f) {
        const double s = result.importance.col(f).sum();
        if (s > 0) result.importance.col(f) /= s;
    }
    return result;
}

// ---------------------------------------------------------------- correlation

Correlation correlate(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3) {
        throw ConfigError("correlation needs equal-length lists with n >= 3");
    }
    const int n = static_cast<int>(xs.size());
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx <= 0 || syy <= 0) throw NumericError("correlation undefined: zero variance");

    Correlation out;
    out.n = n;
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double dof = n - 2;
    if (1.0 - out.r * out.r < 1e-15) {
        out.p_value = 0.0;
    } else {
        const double t = out.r * std::sqrt(dof / (1.0 - out.r * out.r));
        boost::math::students_t dist(dof);
        out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    }
    return out;
}

}  // namespace sglab
