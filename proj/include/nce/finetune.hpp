#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nce/classifier.hpp"
#include "nce/nclc.hpp"
#include "nce/ncnv.hpp"
#include "nce/types.hpp"

namespace nce {

/// A batch of mixed samples. Row b mixes source rows first[b] and second[b]:
///   x.row(b) = lambda[b] * x_first + (1 - lambda[b]) * x_second
///   y.row(b) = lambda[b] * one_hot(y_first) + (1 - lambda[b]) * one_hot(y_second)
struct MixupBatch {
    Matrix x;
    Matrix y;
    std::vector<double> lambda;
    std::vector<std::size_t> first;
    std::vector<std::size_t> second;
};

/// Symmetric Beta(alpha, alpha) draw from two Gamma(alpha) variates.
double sample_beta(double alpha, Rng& rng);

/// Mixes row i with row partner[i] at ratio lambdas[i].
MixupBatch mixup_with(const Matrix& x, const std::vector<Label>& labels, int num_classes,
                      const std::vector<std::size_t>& partner, const std::vector<double>& lambdas);

/// Pairs the batch with a random permutation of itself; one Beta(alpha, alpha) ratio per pair.
/// Requires at least two rows.
MixupBatch mixup_batch(const Matrix& x, const std::vector<Label>& labels, int num_classes, double alpha, Rng& rng);

/// Aug(x): Gaussian jitter with per-dimension scale sigma * feature_std, then
/// independent coordinate dropout. The identity policy returns x unchanged and
/// consumes no randomness.
Matrix perturb(const Matrix& x, const PerturbationPolicy& policy, const Vector& feature_std, Rng& rng);

/// Per-column population standard deviation.
Vector column_std(const Matrix& x);

/// Mixup cross-entropy, batch mean.
LossGrad<double> mix_loss(const Model& model, const MixupBatch& batch);

/// Consistency loss on already-perturbed inputs (frozen perturbation), batch mean.
LossGrad<double> consistency_loss(const Model& model, const Matrix& perturbed_x, const std::vector<Label>& labels);

/// Consistency loss with a fresh perturbation draw.
LossGrad<double> consistency_loss(const Model& model, const Matrix& x, const std::vector<Label>& labels,
                                  const PerturbationPolicy& policy, const Vector& feature_std, Rng& rng);

struct OverallLoss {
    double total = 0.0;
    double mix = 0.0;
    double lab = 0.0;
    Parameters<double> grad;
};

/// L_mix + gamma * L_lab. An empty relabeled batch contributes nothing.
OverallLoss overall_loss(const Model& model, const MixupBatch& clean, const Matrix& perturbed_relabeled,
                         const std::vector<Label>& relabeled_labels, double gamma);

enum class EpochPhase { Warmup, Nce, Fallback };
const char* to_string(EpochPhase phase);

/// Audit record of one epoch. Metric fields are filled by an observer, never by the pipeline.
struct EpochRecord {
    int epoch = 0;
    EpochPhase phase = EpochPhase::Warmup;
    std::optional<Partition> partition;  // NCE epochs only
    double loss = 0.0;                   // mean over batches of the optimized loss
    double loss_mix = 0.0;
    double loss_lab = 0.0;
    std::vector<std::string> warnings;

    // evaluation-only
    std::optional<double> identification_precision;
    std::optional<double> identification_recall;
    std::optional<double> correction_accuracy;
    std::optional<double> test_accuracy;

    std::size_t num_clean() const { return partition ? partition->clean.size() : 0; }
    std::size_t num_noisy() const { return partition ? partition->noisy.size() : 0; }
    std::size_t num_relabeled() const { return partition ? partition->relabeled.size() : 0; }
    std::size_t num_dropped() const { return partition ? partition->dropped.size() : 0; }
};

struct PipelineResult {
    Model model;
    std::vector<EpochRecord> epochs;
};

/// Called after every epoch with the updated model; may fill the record's metric fields.
using EpochObserver = std::function<void(EpochRecord&, const Model&)>;

/// Model initialized from config.seed (uniform fan-in init).
Model initial_model(const Dataset& dataset, const Config& config);
/// Optimizer configured from config.eta / momentum / weight_decay.
SgdMomentum<double> make_optimizer(const Config& config);
/// The training stream used by run_pipeline (shuffles, mixup, perturbations).
Rng training_rng(const Config& config);

/// Epochs 1..T_wu train with plain cross-entropy on the given labels; every
/// later epoch snapshots predictions and features, runs verification and
/// correction, then fine-tunes on mini-batches drawn from the clean and
/// relabeled sets. Deterministic for a fixed config.
PipelineResult run_pipeline(const Dataset& dataset, const Config& config, const EpochObserver& observer = {});

/// Snapshot of the features used for neighbor search in the current epoch.
Matrix neighbor_features(const Dataset& dataset, const Model& model, FeatureSource source);

}  // namespace nce
