#pragma once

// Straight-line double-precision reference for the encoder forward pass,
// written with plain loops and no shared math helpers. It reads parameter
// tensors coefficient-wise and exists only to check the production path.

#include <cmath>
#include <vector>

#include "sglab/model.hpp"

namespace reffwd {

using Matrix = std::vector<std::vector<double>>;

inline Matrix zeros(size_t rows, size_t cols) {
    return Matrix(rows, std::vector<double>(cols, 0.0));
}

inline Matrix layer_norm(const Matrix& x, const sglab::Mat<double>& gamma,
                         const sglab::Mat<double>& beta) {
    const size_t rows = x.size(), cols = x[0].size();
    Matrix y = zeros(rows, cols);
    for (size_t r = 0; r < rows; ++r) {
        double mean = 0.0;
        for (size_t c = 0; c < cols; ++c) mean += x[r][c];
        mean /= static_cast<double>(cols);
        double var = 0.0;
        for (size_t c = 0; c < cols; ++c) var += (x[r][c] - mean) * (x[r][c] - mean);
        var /= static_cast<double>(cols);
        const double istd = 1.0 / std::sqrt(var + 1e-5);
        for (size_t c = 0; c < cols; ++c) {
            y[r][c] = gamma(0, c) * (x[r][c] - mean) * istd + beta(0, c);
        }
    }
    return y;
}

inline Matrix matmul_add(const Matrix& x, const sglab::Mat<double>& w,
                         const sglab::Mat<double>& bias) {
    const size_t rows = x.size(), inner = x[0].size(), cols = w.cols();
    Matrix y = zeros(rows, cols);
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < cols; ++c) {
            double acc = bias(0, c);
            for (size_t k = 0; k < inner; ++k) acc += x[r][k] * w(k, c);
            y[r][c] = acc;
        }
    }
    return y;
}

inline Matrix reference_logits(const sglab::Parameters<double>& p, const Matrix& patches,
                               const std::vector<int>& tokens,
                               const std::vector<int>& mask_positions) {
    const auto& cfg = p.config;
    const size_t n_patches = patches.size();
    const size_t n_tokens = tokens.size();
    const size_t seq = n_patches + n_tokens;
    const size_t d = cfg.hidden_dim;

    Matrix x = zeros(seq, d);
    for (size_t i = 0; i < n_patches; ++i) {
        for (size_t j = 0; j < d; ++j) {
            double acc = p.patch_bias(0, j);
            for (size_t k = 0; k < patches[i].size(); ++k) {
                acc += patches[i][k] * p.patch_weight(k, j);
            }
            x[i][j] = acc + p.pos_image(i, j) + p.modality(0, j);
        }
    }
    for (size_t t = 0; t < n_tokens; ++t) {
        for (size_t j = 0; j < d; ++j) {
            x[n_patches + t][j] =
                p.token_embed(tokens[t], j) + p.pos_text(t, j) + p.modality(1, j);
        }
    }

    const size_t heads = cfg.n_heads;
    const size_t dh = d / heads;
    for (int li = 0; li < cfg.n_layers; ++li) {
        const auto& l = p.layers[li];
        Matrix xn1 = layer_norm(x, l.ln1_gamma, l.ln1_beta);
        Matrix q = matmul_add(xn1, l.wq, l.bq);
        Matrix k = matmul_add(xn1, l.wk, l.bk);
        Matrix v = matmul_add(xn1, l.wv, l.bv);

        Matrix ctx = zeros(seq, d);
        for (size_t h = 0; h < heads; ++h) {
            for (size_t r = 0; r < seq; ++r) {
                std::vector<double> scores(seq, 0.0);
                double mx = -1e300;
                for (size_t c = 0; c < seq; ++c) {
                    double acc = 0.0;
                    for (size_t e = 0; e < dh; ++e) {
                        acc += q[r][h * dh + e] * k[c][h * dh + e];
                    }
                    scores[c] = acc / std::sqrt(static_cast<double>(dh));
                    mx = std::max(mx, scores[c]);
                }
                double sum = 0.0;
                for (size_t c = 0; c < seq; ++c) {
                    scores[c] = std::exp(scores[c] - mx);
                    sum += scores[c];
                }
                for (size_t c = 0; c < seq; ++c) scores[c] /= sum;
                for (size_t e = 0; e < dh; ++e) {
                    double acc = 0.0;
                    for (size_t c = 0; c < seq; ++c) acc += scores[c] * v[c][h * dh + e];
                    ctx[r][h * dh + e] = acc;
                }
            }
        }
        Matrix attn_out = matmul_add(ctx, l.wo, l.bo);
        for (size_t r = 0; r < seq; ++r) {
            for (size_t c = 0; c < d; ++c) x[r][c] += attn_out[r][c];
        }

        Matrix xn2 = layer_norm(x, l.ln2_gamma, l.ln2_beta);
        Matrix u = matmul_add(xn2, l.ffn_w1, l.ffn_b1);
        for (auto& row : u) {
            for (auto& value : row) {
                value = 0.5 * value * (1.0 + std::erf(value / std::sqrt(2.0)));
            }
        }
        Matrix f = matmul_add(u, l.ffn_w2, l.ffn_b2);
        for (size_t r = 0; r < seq; ++r) {
            for (size_t c = 0; c < d; ++c) x[r][c] += f[r][c];
        }
    }

    Matrix hidden = layer_norm(x, p.final_gamma, p.final_beta);
    Matrix logits = zeros(mask_positions.size(), cfg.vocab_size);
    for (size_t i = 0; i < mask_positions.size(); ++i) {
        const int pos = mask_positions[i];
        for (int c = 0; c < cfg.vocab_size; ++c) {
            double acc = p.head_bias(0, c);
            for (size_t k = 0; k < d; ++k) acc += hidden[pos][k] * p.head_weight(k, c);
            logits[i][c] = acc;
        }
    }
    return logits;
}

}  // namespace reffwd
