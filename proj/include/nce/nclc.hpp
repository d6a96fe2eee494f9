#pragma once

#include <utility>
#include <vector>

#include "nce/divergence.hpp"
#include "nce/ncnv.hpp"
#include "nce/simindex.hpp"
#include "nce/types.hpp"

namespace nce {

struct NeighborWeight {
    SampleId neighbor;
    double weight;
};

/// Outcome of one label-correction pass over the noisy set.
struct CorrectionReport {
    IdList candidates;               // the noisy ids, ascending
    std::vector<double> cor_scores;  // aligned with candidates
    double threshold = 0.0;
    std::vector<RelabeledSample> relabeled;
    IdList dropped;
    std::vector<std::vector<NeighborWeight>> weight_traces;  // aligned with candidates when requested
};

/// Mean JS divergence between the candidate's own prediction and each clean
/// neighbor's one-hot label.
template <typename Derived>
typename Derived::Scalar correction_score(const Eigen::MatrixBase<Derived>& candidate_prediction,
                                          const std::vector<Label>& neighbor_labels) {
    using Scalar = typename Derived::Scalar;
    if (neighbor_labels.empty()) throw Error(ErrorKind::EmptyNeighborhood, "correction_score: no neighbors");
    Scalar total(0);
    for (Label y : neighbor_labels) total += js_one_hot(y, candidate_prediction);
    return total / Scalar(neighbor_labels.size());
}

template <typename Scalar>
Scalar correction_score(const LabelDistribution<Scalar>& candidate_prediction, const std::vector<Label>& neighbor_labels) {
    return correction_score(candidate_prediction.probs(), neighbor_labels);
}

/// Per-class tally of neighbor weights w_k = 1 - js(prediction, one_hot(y_k)).
template <typename Derived>
typename Types<typename Derived::Scalar>::Vector correction_tally(const Eigen::MatrixBase<Derived>& candidate_prediction,
                                                                  const std::vector<Label>& neighbor_labels) {
    using Scalar = typename Derived::Scalar;
    typename Types<Scalar>::Vector tally = Types<Scalar>::Vector::Zero(candidate_prediction.size());
    for (Label y : neighbor_labels) tally[y] += Scalar(1) - js_one_hot(y, candidate_prediction);
    return tally;
}

/// argmax of the weighted neighbor-label tally; ties go to the lowest class.
template <typename Derived>
Label correct(const Eigen::MatrixBase<Derived>& candidate_prediction, const std::vector<Label>& neighbor_labels) {
    if (neighbor_labels.empty()) throw Error(ErrorKind::EmptyNeighborhood, "correct: no neighbors");
    const auto tally = correction_tally(candidate_prediction, neighbor_labels);
    // only classes that some neighbor carries are eligible, so a zero-weight
    // neighborhood still returns one of its own labels
    std::vector<char> present(static_cast<std::size_t>(tally.size()), 0);
    for (Label y : neighbor_labels) present[static_cast<std::size_t>(y)] = 1;
    Eigen::Index best = -1;
    for (Eigen::Index c = 0; c < tally.size(); ++c) {
        if (!present[static_cast<std::size_t>(c)]) continue;
        if (best < 0 || tally[c] > tally[best]) best = c;
    }
    return static_cast<Label>(best);
}

template <typename Scalar>
Label correct(const LabelDistribution<Scalar>& candidate_prediction, const std::vector<Label>& neighbor_labels) {
    return correct(candidate_prediction.probs(), neighbor_labels);
}

/// Builds a clean-only index (fresh every call), queries K clean neighbors for
/// each noisy sample and relabels those with S_cor < tau_prime; the rest are dropped.
/// Throws EmptyCleanPool when the verification left no clean samples.
CorrectionReport relabel(const Dataset& dataset, const VerificationReport& verification, const Matrix& predictions,
                         int k, double tau_prime, bool keep_weight_traces = false);

/// Same, but over an explicit feature matrix (e.g. learned embeddings) instead of the raw features.
CorrectionReport relabel(const Dataset& dataset, const Matrix& features, const VerificationReport& verification,
                         const Matrix& predictions, int k, double tau_prime, bool keep_weight_traces = false);

/// Confidence-thresholding comparator: a noisy sample is relabeled to its own
/// argmax class when that class's probability reaches `threshold`. Its score is
/// 1 - max probability.
CorrectionReport relabel_by_confidence(const VerificationReport& verification, const Matrix& predictions, double threshold);

/// Assembles the epoch Partition from the two reports.
Partition make_partition(const VerificationReport& verification, const CorrectionReport& correction);

}  // namespace nce
