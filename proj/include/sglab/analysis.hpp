#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sglab/checkpoint.hpp"
#include "sglab/dataset.hpp"
#include "sglab/joint_table.hpp"
#include "sglab/model.hpp"

namespace sglab {

// ---- accuracy ----

struct EvalCell {
    int64_t correct = 0;
    int64_t total = 0;
    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

// Per-attribute accuracy over cube and cylinder entities of one subset.
struct EvalReport {
    std::string split;
    std::string restricted_to = "cubes+cylinders";
    std::map<std::string, EvalCell> cells;  // keyed by attribute label
    std::string mask_mode = "targeted";

    double accuracy(Attribute a) const { return cells.at(label(a)).accuracy(); }
};

struct EvalOptions {
    int max_samples = 0;             // 0 = all
    std::string mask_mode = "targeted";  // or "random"
    double random_mask_p = 0.15;
    uint64_t seed = 0;
};

EvalReport evaluate(const Parameters<float>& params, const DatasetManifest& manifest,
                    Subset subset, const EvalOptions& options = {});
EvalReport evaluate(const Checkpoint& ckpt, const DatasetManifest& manifest, Subset subset,
                    const EvalOptions& options = {});

// ---- normalized mutual information ----

enum class NmiNormalization { Arithmetic, Geometric, Min, Max };
NmiNormalization nmi_normalization_from_label(const std::string& s);
const std::string& label(NmiNormalization n);

// I(X;Y) / mean(H(X), H(Y)) from empirical frequencies, in nats. A table
// degenerate on both margins is defined as 1.
double nmi(const JointTable& table, NmiNormalization norm = NmiNormalization::Arithmetic);

// ---- embeddings ----

struct EmbeddingRecord {
    Eigen::VectorXf vector;
    std::array<int, 4> attributes{};  // size, color, material, shape value indices
    int64_t sample_id = 0;
    int entity_index = 0;
    Attribute masked = Attribute::Shape;
};

struct EmbeddingSet {
    int dim = 0;
    std::vector<EmbeddingRecord> records;

    void save(const std::filesystem::path& path) const;
    static EmbeddingSet load(const std::filesystem::path& path);
};

// Representations at masked attribute positions for cube/cylinder entities of
// images drawn half from test-ID and half from test-OOD.
EmbeddingSet extract_embeddings(const Parameters<float>& params, const DatasetManifest& manifest,
                                int n_images = 1024, uint64_t seed = 0);

// Records extracted at one attribute's masked position (task-specific vectors).
EmbeddingSet filter_by_masked(const EmbeddingSet& set, Attribute masked);

// ---- parallelism score ----

struct PscoreOptions {
    int n_pairs = 3500;
    int n_runs = 5;
    bool within_pair_order = false;  // alternate subtraction order
    uint64_t seed = 0;
};

struct PscoreResult {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::vector<double> run_means;
};

// Mean cosine between difference vectors realizing the same studied-attribute
// change across contexts differing in the secondary attribute.
PscoreResult pscore(const EmbeddingSet& embeddings, Attribute studied, Attribute secondary,
                    const PscoreOptions& options = {});

// ---- DCI ----

struct DciResult {
    double disentanglement = 0.0;
    double completeness = 0.0;
    Eigen::MatrixXd importance;  // dims x factors, column-normalized
    std::string probe = "l1-multinomial-logistic";
};

// D and C from a non-negative importance matrix (dims x factors).
std::pair<double, double> dci_from_importance(const Eigen::MatrixXd& importance);

// Importance from per-factor L1 multinomial linear probes over the embedding
// dimensions, then D/C.
DciResult dci(const EmbeddingSet& embeddings, double l1_penalty = 1e-3);

// ---- correlation ----

struct Correlation {
    double r = 0.0;
    double p_value = 1.0;
    int n = 0;
};

// Pearson r with a two-sided p-value from the t-distribution (n-2 dof).
Correlation correlate(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace sglab
