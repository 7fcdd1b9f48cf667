#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/SpecialFunctions>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sglab/errors.hpp"
#include "sglab/rng.hpp"
#include "sglab/text.hpp"

namespace sglab {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct ModelConfig {
    int hidden_dim = 128;
    int n_layers = 2;
    int n_heads = 4;
    int vocab_size = 0;
    int patch_dim = 192;  // patch_side^2 * 3
    int max_seq_len = 128;
    int mlp_ratio = 4;
    uint64_t seed = 0;

    void validate() const {
        if (hidden_dim < 1 || n_layers < 1 || n_heads < 1) throw ConfigError("bad model dims");
        if (hidden_dim % n_heads != 0) throw ConfigError("hidden_dim must divide by n_heads");
        if (vocab_size < 1) throw ConfigError("vocab_size must be set");
        if (patch_dim < 1 || max_seq_len < 1 || mlp_ratio < 1) throw ConfigError("bad model dims");
    }
    int head_dim() const { return hidden_dim / n_heads; }
    int ffn_dim() const { return hidden_dim * mlp_ratio; }
};

inline constexpr double kLayerNormEps = 1e-5;

template <class S>
struct LayerParams {
    Mat<S> ln1_gamma, ln1_beta;          // 1 x d
    Mat<S> wq, wk, wv, wo;               // d x d
    Mat<S> bq, bk, bv, bo;               // 1 x d
    Mat<S> ln2_gamma, ln2_beta;          // 1 x d
    Mat<S> ffn_w1, ffn_b1;               // d x 4d, 1 x 4d
    Mat<S> ffn_w2, ffn_b2;               // 4d x d, 1 x d
};

// All learned tensors, traversed in a fixed canonical order by visit().
template <class S>
struct Parameters {
    ModelConfig config;
    Mat<S> patch_weight;  // patch_dim x d
    Mat<S> patch_bias;    // 1 x d
    Mat<S> token_embed;   // vocab x d
    Mat<S> pos_image;     // max_seq x d
    Mat<S> pos_text;      // max_seq x d
    Mat<S> modality;      // 2 x d
    std::vector<LayerParams<S>> layers;
    Mat<S> final_gamma, final_beta;  // 1 x d
    Mat<S> head_weight;              // d x vocab
    Mat<S> head_bias;                // 1 x vocab

    template <class F>
    void visit(F&& f) {
        f("patch_embed.weight", patch_weight);
        f("patch_embed.bias", patch_bias);
        f("token_embed.weight", token_embed);
        f("pos_embed.image", pos_image);
        f("pos_embed.text", pos_text);
        f("modality_embed", modality);
        for (size_t i = 0; i < layers.size(); ++i) {
            const std::string p = "layers." + std::to_string(i) + ".";
            auto& l = layers[i];
            f(p + "ln1.gamma", l.ln1_gamma);
            f(p + "ln1.beta", l.ln1_beta);
            f(p + "attn.wq", l.wq);
            f(p + "attn.bq", l.bq);
            f(p + "attn.wk", l.wk);
            f(p + "attn.bk", l.bk);
            f(p + "attn.wv", l.wv);
            f(p + "attn.bv", l.bv);
            f(p + "attn.wo", l.wo);
            f(p + "attn.bo", l.bo);
            f(p + "ln2.gamma", l.ln2_gamma);
            f(p + "ln2.beta", l.ln2_beta);
            f(p + "ffn.w1", l.ffn_w1);
            f(p + "ffn.b1", l.ffn_b1);
            f(p + "ffn.w2", l.ffn_w2);
            f(p + "ffn.b2", l.ffn_b2);
        }
        f("final_norm.gamma", final_gamma);
        f("final_norm.beta", final_beta);
        f("head.weight", head_weight);
        f("head.bias", head_bias);
    }

    template <class F>
    void visit(F&& f) const {
        const_cast<Parameters*>(this)->visit(
            [&](const std::string& name, Mat<S>& t) { f(name, static_cast<const Mat<S>&>(t)); });
    }

    std::vector<Mat<S>*> tensors() {
        std::vector<Mat<S>*> out;
        visit([&](const std::string&, Mat<S>& t) { out.push_back(&t); });
        return out;
    }

    size_t param_count() const {
        size_t n = 0;
        visit([&](const std::string&, const Mat<S>& t) { n += static_cast<size_t>(t.size()); });
        return n;
    }

    void set_zero() {
        visit([](const std::string&, Mat<S>& t) { t.setZero(); });
    }

    static Parameters zeros(const ModelConfig& config) {
        config.validate();
        Parameters p;
        p.config = config;
        const int d = config.hidden_dim;
        p.patch_weight.setZero(config.patch_dim, d);
        p.patch_bias.setZero(1, d);
        p.token_embed.setZero(config.vocab_size, d);
        p.pos_image.setZero(config.max_seq_len, d);
        p.pos_text.setZero(config.max_seq_len, d);
        p.modality.setZero(2, d);
        p.layers.resize(config.n_layers);
        for (auto& l : p.layers) {
            l.ln1_gamma.setZero(1, d);
            l.ln1_beta.setZero(1, d);
            l.wq.setZero(d, d);
            l.wk.setZero(d, d);
            l.wv.setZero(d, d);
            l.wo.setZero(d, d);
            l.bq.setZero(1, d);
            l.bk.setZero(1, d);
            l.bv.setZero(1, d);
            l.bo.setZero(1, d);
            l.ln2_gamma.setZero(1, d);
            l.ln2_beta.setZero(1, d);
            l.ffn_w1.setZero(d, config.ffn_dim());
            l.ffn_b1.setZero(1, config.ffn_dim());
            l.ffn_w2.setZero(config.ffn_dim(), d);
            l.ffn_b2.setZero(1, d);
        }
        p.final_gamma.setZero(1, d);
        p.final_beta.setZero(1, d);
        p.head_weight.setZero(d, config.vocab_size);
        p.head_bias.setZero(1, config.vocab_size);
        return p;
    }

    // Truncated normal (sigma 0.02, clipped at 2 sigma) for weight matrices
    // and embeddings, zeros for biases, ones for layer-norm gains.
    static Parameters init(const ModelConfig& config) {
        Parameters p = zeros(config);
        Rng rng = make_rng(config.seed, /*stream=*/0x1417);
        p.visit([&](const std::string& name, Mat<S>& t) {
            const bool is_gain = name.ends_with("gamma");
            const bool is_bias = name.ends_with("beta") || name.ends_with("bias") ||
                                 name.find(".b") != std::string::npos;
            if (is_gain) {
                t.setOnes();
            } else if (is_bias) {
                t.setZero();
            } else {
                for (Eigen::Index r = 0; r < t.rows(); ++r)
                    for (Eigen::Index c = 0; c < t.cols(); ++c)
                        t(r, c) = static_cast<S>(truncated_normal(rng, 0.02));
            }
        });
        return p;
    }
};

template <class S>
struct LayerCache {
    Mat<S> x_in;                 // block input
    Mat<S> xhat1;                // LN1 normalized, pre-affine
    Vec<S> istd1;
    Mat<S> q, k, v;              // projections
    std::vector<Mat<S>> attn;    // per-head softmax weights
    Mat<S> ctx;                  // concatenated head outputs
    Mat<S> x_mid;                // after attention residual
    Mat<S> xhat2;
    Vec<S> istd2;
    Mat<S> ffn_pre;              // pre-GELU
    Mat<S> ffn_cdf;              // Phi(ffn_pre)
    Mat<S> ffn_act;              // GELU output
};

template <class S>
struct ForwardCache {
    std::vector<LayerCache<S>> layers;
    Mat<S> xhat_final;
    Vec<S> istd_final;
};

template <class S>
struct ForwardResult {
    Mat<S> logits;  // n_masked x vocab
    Mat<S> hidden;  // seq_len x d, final-norm outputs
};

namespace detail {

template <class S>
Mat<S> layer_norm(const Mat<S>& x, const Mat<S>& gamma, const Mat<S>& beta, Mat<S>& xhat,
                  Vec<S>& istd) {
    Vec<S> mean = x.rowwise().mean();
    Mat<S> centered = x.colwise() - mean;
    istd = (centered.array().square().rowwise().mean() + static_cast<S>(kLayerNormEps))
               .rsqrt()
               .matrix();
    xhat = (centered.array().colwise() * istd.array()).matrix();
    Mat<S> y = (xhat.array().rowwise() * gamma.row(0).array()).matrix();
    y.array().rowwise() += beta.row(0).array();
    return y;
}

// dx for y = gamma*xhat + beta given dy; accumulates dgamma/dbeta.
template <class S>
Mat<S> layer_norm_backward(const Mat<S>& dy, const Mat<S>& xhat, const Vec<S>& istd,
                           const Mat<S>& gamma, Mat<S>& dgamma, Mat<S>& dbeta) {
    dgamma.row(0).array() += (dy.array() * xhat.array()).colwise().sum();
    dbeta.row(0).array() += dy.array().colwise().sum();
    Mat<S> dxhat = (dy.array().rowwise() * gamma.row(0).array()).matrix();
    Vec<S> m1 = dxhat.rowwise().mean();
    Vec<S> m2 = (dxhat.array() * xhat.array()).rowwise().mean().matrix();
    return (((dxhat.array().colwise() - m1.array()) - xhat.array().colwise() * m2.array())
                .colwise() *
            istd.array())
        .matrix();
}

inline constexpr double kInvSqrt2 = 0.7071067811865476;
inline constexpr double kInvSqrt2Pi = 0.3989422804014327;

// Phi(x), the exact-GELU multiplier; cached by the forward pass so the
// backward pass only needs the density term.
template <class S>
Mat<S> gelu_cdf(const Mat<S>& x) {
    return (S(0.5) * ((x.array() * static_cast<S>(kInvSqrt2)).erf() + S(1))).matrix();
}

template <class S>
void softmax_rows(Mat<S>& m) {
    Vec<S> mx = m.rowwise().maxCoeff();
    m = (m.colwise() - mx).array().exp().matrix();
    Vec<S> sum = m.rowwise().sum();
    m.array().colwise() /= sum.array();
}

}  // namespace detail

// Patch and token embeddings with positional and modality embeddings added;
// modalities concatenated image-first. `patches` may have zero rows.
template <class S>
Mat<S> embed(const Mat<S>& patches, const std::vector<int>& token_ids, const Parameters<S>& p) {
    const int n_patches = static_cast<int>(patches.rows());
    const int n_tokens = static_cast<int>(token_ids.size());
    const int seq = n_patches + n_tokens;
    if (seq > p.config.max_seq_len) {
        throw CapacityError("sequence length " + std::to_string(seq) + " exceeds max_seq_len " +
                            std::to_string(p.config.max_seq_len));
    }
    if (n_patches > 0 && patches.cols() != p.config.patch_dim) {
        throw CompatibilityError("patch dim mismatch");
    }
    Mat<S> x(seq, p.config.hidden_dim);
    if (n_patches > 0) {
        x.topRows(n_patches).noalias() = patches * p.patch_weight;
        x.topRows(n_patches).array().rowwise() += p.patch_bias.row(0).array();
        x.topRows(n_patches) += p.pos_image.topRows(n_patches);
        x.topRows(n_patches).array().rowwise() += p.modality.row(0).array();
    }
    for (int t = 0; t < n_tokens; ++t) {
        const int id = token_ids[t];
        if (id < 0 || id >= p.config.vocab_size) throw CompatibilityError("token id out of range");
        x.row(n_patches + t) =
            p.token_embed.row(id) + p.pos_text.row(t) + p.modality.row(1);
    }
    return x;
}

// Pre-norm encoder stack; logits computed at mask_positions (sequence
// coordinates). Bidirectional attention, no dropout.
template <class S>
ForwardResult<S> forward(const Mat<S>& embedded, const std::vector<int>& mask_positions,
                         const Parameters<S>& p, ForwardCache<S>* cache = nullptr) {
    const ModelConfig& cfg = p.config;
    const int d = cfg.hidden_dim;
    const int dh = cfg.head_dim();
    const S scale = S(1) / static_cast<S>(std::sqrt(static_cast<double>(dh)));

    if (cache) cache->layers.resize(cfg.n_layers);
    Mat<S> x = embedded;
    LayerCache<S> local;
    for (int li = 0; li < cfg.n_layers; ++li) {
        const auto& l = p.layers[li];
        LayerCache<S>& c = cache ? cache->layers[li] : local;
        c.x_in = x;
        Mat<S> xn1 = detail::layer_norm(x, l.ln1_gamma, l.ln1_beta, c.xhat1, c.istd1);

        c.q.noalias() = xn1 * l.wq;
        c.q.array().rowwise() += l.bq.row(0).array();
        c.k.noalias() = xn1 * l.wk;
        c.k.array().rowwise() += l.bk.row(0).array();
        c.v.noalias() = xn1 * l.wv;
        c.v.array().rowwise() += l.bv.row(0).array();

        c.attn.assign(cfg.n_heads, Mat<S>());
        c.ctx.resize(x.rows(), d);
        for (int h = 0; h < cfg.n_heads; ++h) {
            auto qh = c.q.middleCols(h * dh, dh);
            auto kh = c.k.middleCols(h * dh, dh);
            auto vh = c.v.middleCols(h * dh, dh);
            Mat<S>& a = c.attn[h];
            a.noalias() = qh * kh.transpose();
            a *= scale;
            detail::softmax_rows(a);
            c.ctx.middleCols(h * dh, dh).noalias() = a * vh;
        }
        Mat<S> attn_out;
        attn_out.noalias() = c.ctx * l.wo;
        attn_out.array().rowwise() += l.bo.row(0).array();
        c.x_mid = x + attn_out;

        Mat<S> xn2 = detail::layer_norm(c.x_mid, l.ln2_gamma, l.ln2_beta, c.xhat2, c.istd2);
        c.ffn_pre.noalias() = xn2 * l.ffn_w1;
        c.ffn_pre.array().rowwise() += l.ffn_b1.row(0).array();
        c.ffn_cdf = detail::gelu_cdf(c.ffn_pre);
        c.ffn_act = (c.ffn_pre.array() * c.ffn_cdf.array()).matrix();
        Mat<S> f;
        f.noalias() = c.ffn_act * l.ffn_w2;
        f.array().rowwise() += l.ffn_b2.row(0).array();
        x = c.x_mid + f;

        if (!x.allFinite()) {
            throw NumericError("non-finite activation after layer " + std::to_string(li));
        }
    }

    ForwardResult<S> out;
    Mat<S> xhat_local;
    Vec<S> istd_local;
    Mat<S>& xhat = cache ? cache->xhat_final : xhat_local;
    Vec<S>& istd = cache ? cache->istd_final : istd_local;
    out.hidden = detail::layer_norm(x, p.final_gamma, p.final_beta, xhat, istd);

    out.logits.resize(static_cast<Eigen::Index>(mask_positions.size()), cfg.vocab_size);
    for (size_t i = 0; i < mask_positions.size(); ++i) {
        const int pos = mask_positions[i];
        if (pos < 0 || pos >= out.hidden.rows()) throw ConfigError("mask position out of range");
        out.logits.row(i).noalias() = out.hidden.row(pos) * p.head_weight;
        out.logits.row(i) += p.head_bias.row(0);
    }
    return out;
}

template <class S>
struct BatchSample {
    Mat<S> patches;              // n_patches x patch_dim (zero rows allowed)
    std::vector<int> token_ids;  // [MASK] already substituted
    std::vector<MaskSite> masks; // text-local positions
};

// Mean cross-entropy over every masked position in the batch, with gradients
// for every parameter accumulated into `grads` (zeroed first). Samples are
// processed in order so accumulation is bit-reproducible.
template <class S>
S loss_and_grads(const std::vector<BatchSample<S>>& batch, const Parameters<S>& p,
                 Parameters<S>& grads) {
    const ModelConfig& cfg = p.config;
    const int d = cfg.hidden_dim;
    const int dh = cfg.head_dim();
    const S scale = S(1) / static_cast<S>(std::sqrt(static_cast<double>(dh)));

    size_t total_masked = 0;
    for (const auto& s : batch) total_masked += s.masks.size();
    if (total_masked == 0) throw ConfigError("batch contains no masked positions");
    const S weight = S(1) / static_cast<S>(total_masked);

    grads.set_zero();
    S loss = 0;

    for (const auto& sample : batch) {
        const int n_patches = static_cast<int>(sample.patches.rows());
        std::vector<int> positions(sample.masks.size());
        for (size_t i = 0; i < sample.masks.size(); ++i) {
            positions[i] = n_patches + sample.masks[i].position;
        }

        Mat<S> embedded = embed(sample.patches, sample.token_ids, p);
        ForwardCache<S> cache;
        ForwardResult<S> fwd = forward(embedded, positions, p, &cache);

        // Cross-entropy and dlogits at the masked rows.
        Mat<S> dhidden = Mat<S>::Zero(embedded.rows(), d);
        for (size_t i = 0; i < positions.size(); ++i) {
            const int target = sample.masks[i].true_id;
            Eigen::Matrix<S, 1, Eigen::Dynamic> z = fwd.logits.row(i);
            const S mx = z.maxCoeff();
            Eigen::Array<S, 1, Eigen::Dynamic> ez = (z.array() - mx).exp();
            const S sum = ez.sum();
            loss += weight * (std::log(sum) + mx - z(target));
            Eigen::Matrix<S, 1, Eigen::Dynamic> dz = (ez / sum).matrix() * weight;
            dz(target) -= weight;
            grads.head_weight.noalias() += fwd.hidden.row(positions[i]).transpose() * dz;
            grads.head_bias.row(0) += dz;
            dhidden.row(positions[i]) += dz * p.head_weight.transpose();
        }

        // Final layer norm.
        Mat<S> dx = detail::layer_norm_backward(dhidden, cache.xhat_final, cache.istd_final,
                                                p.final_gamma, grads.final_gamma, grads.final_beta);

        for (int li = cfg.n_layers - 1; li >= 0; --li) {
            const auto& l = p.layers[li];
            auto& gl = grads.layers[li];
            const LayerCache<S>& c = cache.layers[li];

            // FFN: x_out = x_mid + gelu(xn2 W1 + b1) W2 + b2
            Mat<S> dact;
            dact.noalias() = dx * l.ffn_w2.transpose();
            gl.ffn_w2.noalias() += c.ffn_act.transpose() * dx;
            gl.ffn_b2.row(0).array() += dx.array().colwise().sum();
            // gelu'(u) = Phi(u) + u * phi(u), with Phi cached from the forward
            Mat<S> dpre =
                (dact.array() *
                 (c.ffn_cdf.array() +
                  c.ffn_pre.array() * static_cast<S>(detail::kInvSqrt2Pi) *
                      (S(-0.5) * c.ffn_pre.array().square()).exp()))
                    .matrix();
            Mat<S> xn2 = c.xhat2;
            xn2.array().rowwise() *= l.ln2_gamma.row(0).array();
            xn2.array().rowwise() += l.ln2_beta.row(0).array();
            gl.ffn_w1.noalias() += xn2.transpose() * dpre;
            gl.ffn_b1.row(0).array() += dpre.array().colwise().sum();
            Mat<S> dxn2;
            dxn2.noalias() = dpre * l.ffn_w1.transpose();
            Mat<S> dmid = dx + detail::layer_norm_backward(dxn2, c.xhat2, c.istd2, l.ln2_gamma,
                                                           gl.ln2_gamma, gl.ln2_beta);

            // Attention: x_mid = x_in + (heads(LN1(x)) concat) Wo + bo
            Mat<S> dctx;
            dctx.noalias() = dmid * l.wo.transpose();
            gl.wo.noalias() += c.ctx.transpose() * dmid;
            gl.bo.row(0).array() += dmid.array().colwise().sum();

            Mat<S> dq(dmid.rows(), d), dk(dmid.rows(), d), dv(dmid.rows(), d);
            for (int h = 0; h < cfg.n_heads; ++h) {
                auto qh = c.q.middleCols(h * dh, dh);
                auto kh = c.k.middleCols(h * dh, dh);
                auto vh = c.v.middleCols(h * dh, dh);
                auto dctx_h = dctx.middleCols(h * dh, dh);
                const Mat<S>& a = c.attn[h];

                Mat<S> da;
                da.noalias() = dctx_h * vh.transpose();
                dv.middleCols(h * dh, dh).noalias() = a.transpose() * dctx_h;

                // softmax backward: a .* (da - rowdot(da, a))
                Vec<S> rowdot = (da.array() * a.array()).rowwise().sum().matrix();
                Mat<S> dscores =
                    (a.array() * (da.array().colwise() - rowdot.array()) * scale).matrix();
                dq.middleCols(h * dh, dh).noalias() = dscores * kh;
                dk.middleCols(h * dh, dh).noalias() = dscores.transpose() * qh;
            }

            Mat<S> xn1 = c.xhat1;
            xn1.array().rowwise() *= l.ln1_gamma.row(0).array();
            xn1.array().rowwise() += l.ln1_beta.row(0).array();
            gl.wq.noalias() += xn1.transpose() * dq;
            gl.wk.noalias() += xn1.transpose() * dk;
            gl.wv.noalias() += xn1.transpose() * dv;
            gl.bq.row(0).array() += dq.array().colwise().sum();
            gl.bk.row(0).array() += dk.array().colwise().sum();
            gl.bv.row(0).array() += dv.array().colwise().sum();

            Mat<S> dxn1;
            dxn1.noalias() = dq * l.wq.transpose();
            dxn1.noalias() += dk * l.wk.transpose();
            dxn1.noalias() += dv * l.wv.transpose();
            dx = dmid + detail::layer_norm_backward(dxn1, c.xhat1, c.istd1, l.ln1_gamma,
                                                    gl.ln1_gamma, gl.ln1_beta);
        }

        // Embedding backward.
        if (n_patches > 0) {
            auto dimg = dx.topRows(n_patches);
            grads.patch_weight.noalias() += sample.patches.transpose() * dimg;
            grads.patch_bias.row(0).array() += dimg.array().colwise().sum();
            grads.pos_image.topRows(n_patches) += dimg;
            grads.modality.row(0).array() += dimg.array().colwise().sum();
        }
        const int n_tokens = static_cast<int>(sample.token_ids.size());
        for (int t = 0; t < n_tokens; ++t) {
            grads.token_embed.row(sample.token_ids[t]) += dx.row(n_patches + t);
            grads.pos_text.row(t) += dx.row(n_patches + t);
            grads.modality.row(1) += dx.row(n_patches + t);
        }
    }
    return loss;
}

// Final-layer hidden state at the (single) masked position of an eval query.
template <class S>
Vec<S> extract_representation(const Mat<S>& patches, const QuerySequence& masked_seq,
                              const Parameters<S>& p) {
    if (masked_seq.masks.size() != 1) throw ConfigError("expected exactly one masked position");
    const int pos = static_cast<int>(patches.rows()) + masked_seq.masks[0].position;
    Mat<S> embedded = embed(patches, masked_seq.ids, p);
    ForwardResult<S> fwd = forward(embedded, {pos}, p);
    return fwd.hidden.row(pos).transpose();
}

}  // namespace sglab
