#pragma once

#include <vector>

#include "nce/divergence.hpp"
#include "nce/simindex.hpp"
#include "nce/types.hpp"

namespace nce {

/// Outcome of one noise-verification pass.
struct VerificationReport {
    std::vector<double> scores;  // S_ver per sample
    double threshold = 0.0;
    IdList clean_ids;  // scores < threshold, ascending
    IdList noisy_ids;  // scores >= threshold, ascending
};

/// Mean JS divergence between one_hot(given_label) and each neighbor's predicted
/// distribution (one row of `neighbor_predictions` per neighbor).
template <typename Derived>
typename Derived::Scalar verification_score(Label given_label, const Eigen::MatrixBase<Derived>& neighbor_predictions) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index k = neighbor_predictions.rows();
    if (k == 0) throw Error(ErrorKind::EmptyNeighborhood, "verification_score: no neighbors");
    Scalar total(0);
    for (Eigen::Index i = 0; i < k; ++i) total += js_one_hot(given_label, neighbor_predictions.row(i).transpose());
    return total / Scalar(k);
}

template <typename Scalar>
Scalar verification_score(Label given_label, const std::vector<LabelDistribution<Scalar>>& neighbor_predictions) {
    if (neighbor_predictions.empty()) throw Error(ErrorKind::EmptyNeighborhood, "verification_score: no neighbors");
    typename Types<Scalar>::Matrix rows(static_cast<Eigen::Index>(neighbor_predictions.size()),
                                        neighbor_predictions.front().num_classes());
    for (std::size_t i = 0; i < neighbor_predictions.size(); ++i) {
        if (neighbor_predictions[i].num_classes() != rows.cols())
            throw Error(ErrorKind::Shape, "verification_score: neighbor predictions differ in class count");
        rows.row(static_cast<Eigen::Index>(i)) = neighbor_predictions[i].probs().transpose();
    }
    return verification_score(given_label, rows);
}

/// Splits samples by S_ver against tau (S_ver >= tau is noisy).
VerificationReport split_by_score(std::vector<double> scores, double tau);

/// Scores every sample against its K nearest neighbors (self excluded) using
/// the neighbors' frozen predictions, then thresholds at tau.
/// `predictions` holds one distribution per dataset row; `index` must pool all of D_train.
VerificationReport verify(const Dataset& dataset, const Matrix& predictions, const Index& index, int k, double tau);

}  // namespace nce
