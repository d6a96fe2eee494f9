#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "nce/classifier.hpp"
#include "nce/finetune.hpp"
#include "nce/nclc.hpp"
#include "nce/ncnv.hpp"
#include "nce/types.hpp"

// Evaluation harness. Everything here reads hidden true labels and lifts the
// algorithm guard for the duration of each call.
namespace nce {

struct BinaryScores {
    std::optional<double> precision;  // null when nothing was predicted positive
    std::optional<double> recall;     // null when there are no positives
    std::optional<double> f1;
};

struct IdentificationMetrics {
    // confusion counts: verdict x truth
    std::size_t clean_as_clean = 0;
    std::size_t clean_as_noisy = 0;
    std::size_t noisy_as_clean = 0;
    std::size_t noisy_as_noisy = 0;

    BinaryScores clean;  // "clean" verdict as the positive class
    BinaryScores noisy;  // "noisy" verdict as the positive class
    double accuracy = 0.0;
    /// Fraction of correctly identified samples per true class (null for empty classes).
    std::vector<std::optional<double>> per_class_accuracy;
};

struct CorrectionMetrics {
    std::size_t noisy = 0;
    std::size_t relabeled = 0;
    std::size_t correct = 0;
    std::optional<double> accuracy;  // correct / relabeled, null when nothing was relabeled
    std::optional<double> coverage;  // relabeled / noisy, null when nothing was noisy
};

/// A sample is truly noisy iff its given label differs from its true label.
IdentificationMetrics identification_metrics(const VerificationReport& report, const Dataset& dataset);

CorrectionMetrics correction_metrics(const CorrectionReport& report, const Dataset& dataset);
CorrectionMetrics correction_metrics(const std::vector<RelabeledSample>& relabeled, std::size_t noisy_count,
                                     const Dataset& dataset);

/// Row-wise argmax, ties to the lowest class.
std::vector<Label> argmax_rows(const Matrix& probs);

/// Fraction of rows whose argmax equals the label.
double accuracy(const Matrix& probs, const std::vector<Label>& labels);

/// Accuracy against true labels when present, given labels otherwise.
double test_accuracy(const Model& model, const Dataset& heldout);

/// Observer that fills an epoch's evaluation fields: identification and
/// correction metrics against `train` (when it carries true labels) and test
/// accuracy on `heldout` (when given).
EpochObserver epoch_evaluator(const Dataset& train, const Dataset* heldout = nullptr);

}  // namespace nce
