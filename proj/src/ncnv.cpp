#include "nce/ncnv.hpp"

#include <string>

namespace nce {

VerificationReport split_by_score(std::vector<double> scores, double tau) {
    VerificationReport report;
    report.threshold = tau;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] >= tau)
            report.noisy_ids.push_back(static_cast<SampleId>(i));
        else
            report.clean_ids.push_back(static_cast<SampleId>(i));
    }
    report.scores = std::move(scores);
    return report;
}

VerificationReport verify(const Dataset& dataset, const Matrix& predictions, const Index& index, int k, double tau) {
    AlgorithmScope guard;
    const SampleId n = dataset.size();
    if (predictions.rows() != n || predictions.cols() != dataset.num_classes())
        throw Error(ErrorKind::Shape, "verify: predictions must be N x C");
    if (index.num_samples() != n || static_cast<SampleId>(index.pool_size()) > n)
        throw Error(ErrorKind::Shape, "verify: index was not built over this dataset");

    std::vector<double> scores(static_cast<std::size_t>(n));
    const auto& labels = dataset.given_labels();
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        const auto id = static_cast<SampleId>(i);
        try {
            const NeighborSet neighbors = index.query(id, k, /*exclude_self=*/true);
            Matrix rows(static_cast<Eigen::Index>(neighbors.size()), predictions.cols());
            for (std::size_t j = 0; j < neighbors.size(); ++j)
                rows.row(static_cast<Eigen::Index>(j)) = predictions.row(neighbors.indices[j]);
            scores[i] = verification_score(labels[i], rows);
        } catch (const Error& e) {
            throw Error(e.kind(), "verify: sample " + std::to_string(id) + ": " + e.what());
        }
    });
    return split_by_score(std::move(scores), tau);
}

}  // namespace nce
