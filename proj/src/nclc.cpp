#include "nce/nclc.hpp"

#include <string>

namespace nce {

CorrectionReport relabel(const Dataset& dataset, const VerificationReport& verification, const Matrix& predictions,
                         int k, double tau_prime, bool keep_weight_traces) {
    return relabel(dataset, dataset.features(), verification, predictions, k, tau_prime, keep_weight_traces);
}

CorrectionReport relabel(const Dataset& dataset, const Matrix& features, const VerificationReport& verification,
                         const Matrix& predictions, int k, double tau_prime, bool keep_weight_traces) {
    AlgorithmScope guard;
    const SampleId n = dataset.size();
    if (predictions.rows() != n || predictions.cols() != dataset.num_classes())
        throw Error(ErrorKind::Shape, "relabel: predictions must be N x C");
    if (features.rows() != n) throw Error(ErrorKind::Shape, "relabel: feature rows must match the dataset");
    if (verification.clean_ids.empty()) throw Error(ErrorKind::EmptyCleanPool, "relabel: no clean samples to borrow labels from");

    CorrectionReport report;
    report.threshold = tau_prime;
    report.candidates = verification.noisy_ids;
    if (report.candidates.empty()) return report;

    Index clean_index(features, verification.clean_ids);
    const auto& labels = dataset.given_labels();
    const std::size_t m = report.candidates.size();
    report.cor_scores.assign(m, 0.0);
    std::vector<Label> new_labels(m, 0);
    if (keep_weight_traces) report.weight_traces.assign(m, {});

    parallel_for(m, [&](std::size_t i) {
        const SampleId id = report.candidates[i];
        try {
            // the candidate is noisy and the pool is clean, so there is no self to exclude
            const NeighborSet neighbors = clean_index.query(id, k, /*exclude_self=*/false);
            std::vector<Label> neighbor_labels(neighbors.size());
            for (std::size_t j = 0; j < neighbors.size(); ++j) neighbor_labels[j] = labels[neighbors.indices[j]];
            const auto prediction = predictions.row(id).transpose();
            report.cor_scores[i] = correction_score(prediction, neighbor_labels);
            new_labels[i] = correct(prediction, neighbor_labels);
            if (keep_weight_traces) {
                auto& trace = report.weight_traces[i];
                for (std::size_t j = 0; j < neighbors.size(); ++j)
                    trace.push_back({neighbors.indices[j], 1.0 - js_one_hot(neighbor_labels[j], prediction)});
            }
        } catch (const Error& e) {
            throw Error(e.kind(), "relabel: sample " + std::to_string(id) + ": " + e.what());
        }
    });

    for (std::size_t i = 0; i < m; ++i) {
        if (report.cor_scores[i] < tau_prime)
            report.relabeled.push_back({report.candidates[i], new_labels[i]});
        else
            report.dropped.push_back(report.candidates[i]);
    }
    return report;
}

CorrectionReport relabel_by_confidence(const VerificationReport& verification, const Matrix& predictions, double threshold) {
    CorrectionReport report;
    report.threshold = threshold;
    report.candidates = verification.noisy_ids;
    for (SampleId id : report.candidates) {
        Eigen::Index best = 0;
        const double top = predictions.row(id).maxCoeff(&best);
        report.cor_scores.push_back(std::clamp(1.0 - top, 0.0, 1.0));
        if (top >= threshold)
            report.relabeled.push_back({id, static_cast<Label>(best)});
        else
            report.dropped.push_back(id);
    }
    return report;
}

Partition make_partition(const VerificationReport& verification, const CorrectionReport& correction) {
    Partition p;
    p.clean = verification.clean_ids;
    p.noisy = verification.noisy_ids;
    p.relabeled = correction.relabeled;
    p.dropped = correction.dropped;
    p.ver_scores = verification.scores;
    p.cor_scores = correction.cor_scores;
    return p;
}

}  // namespace nce
