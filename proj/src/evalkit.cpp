#include "nce/evalkit.hpp"

namespace nce {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

BinaryScores binary_scores(std::size_t tp, std::size_t fp, std::size_t fn) {
    BinaryScores s;
    s.precision = ratio(tp, tp + fp);
    s.recall = ratio(tp, tp + fn);
    if (s.precision && s.recall) {
        const double sum = *s.precision + *s.recall;
        s.f1 = sum > 0.0 ? 2.0 * *s.precision * *s.recall / sum : 0.0;
    }
    return s;
}

const std::vector<Label>& truth_of(const Dataset& dataset) {
    if (!dataset.has_true_labels()) throw Error(ErrorKind::MissingTrueLabels, "evaluation needs true labels");
    return dataset.true_labels();
}

}  // namespace

IdentificationMetrics identification_metrics(const VerificationReport& report, const Dataset& dataset) {
    EvaluationScope lift;
    const auto& truth = truth_of(dataset);
    const auto& given = dataset.given_labels();
    const auto n = static_cast<std::size_t>(dataset.size());
    if (report.clean_ids.size() + report.noisy_ids.size() != n)
        throw Error(ErrorKind::Shape, "identification_metrics: report does not cover the dataset");

    std::vector<char> flagged(n, 0);
    for (SampleId id : report.noisy_ids) flagged.at(static_cast<std::size_t>(id)) = 1;

    IdentificationMetrics m;
    const auto classes = static_cast<std::size_t>(dataset.num_classes());
    std::vector<std::size_t> right(classes, 0), total(classes, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const bool truly_noisy = given[i] != truth[i];
        const bool said_noisy = flagged[i] != 0;
        if (!truly_noisy && !said_noisy) ++m.clean_as_clean;
        if (!truly_noisy && said_noisy) ++m.clean_as_noisy;
        if (truly_noisy && !said_noisy) ++m.noisy_as_clean;
        if (truly_noisy && said_noisy) ++m.noisy_as_noisy;
        const auto c = static_cast<std::size_t>(truth[i]);
        ++total[c];
        if (truly_noisy == said_noisy) ++right[c];
    }
    m.clean = binary_scores(m.clean_as_clean, m.noisy_as_clean, m.clean_as_noisy);
    m.noisy = binary_scores(m.noisy_as_noisy, m.clean_as_noisy, m.noisy_as_clean);
    m.accuracy = n ? static_cast<double>(m.clean_as_clean + m.noisy_as_noisy) / static_cast<double>(n) : 0.0;
    for (std::size_t c = 0; c < classes; ++c) m.per_class_accuracy.push_back(ratio(right[c], total[c]));
    return m;
}

CorrectionMetrics correction_metrics(const std::vector<RelabeledSample>& relabeled, std::size_t noisy_count,
                                     const Dataset& dataset) {
    EvaluationScope lift;
    const auto& truth = truth_of(dataset);
    CorrectionMetrics m;
    m.noisy = noisy_count;
    m.relabeled = relabeled.size();
    for (const auto& r : relabeled)
        if (truth.at(static_cast<std::size_t>(r.id)) == r.label) ++m.correct;
    m.accuracy = ratio(m.correct, m.relabeled);
    m.coverage = ratio(m.relabeled, m.noisy);
    return m;
}

CorrectionMetrics correction_metrics(const CorrectionReport& report, const Dataset& dataset) {
    return correction_metrics(report.relabeled, report.candidates.size(), dataset);
}

std::vector<Label> argmax_rows(const Matrix& probs) {
    std::vector<Label> out(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < probs.cols(); ++c)
            if (probs(i, c) > probs(i, best)) best = c;
        out[static_cast<std::size_t>(i)] = static_cast<Label>(best);
    }
    return out;
}

double accuracy(const Matrix& probs, const std::vector<Label>& labels) {
    if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw Error(ErrorKind::Shape, "accuracy: row/label count mismatch");
    if (labels.empty()) return 0.0;
    const auto predicted = argmax_rows(probs);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double test_accuracy(const Model& model, const Dataset& heldout) {
    EvaluationScope lift;
    const auto& labels = heldout.has_true_labels() ? heldout.true_labels() : heldout.given_labels();
    return accuracy(model.predict_proba(heldout.features()), labels);
}

EpochObserver epoch_evaluator(const Dataset& train, const Dataset* heldout) {
    return [&train, heldout](EpochRecord& record, const Model& model) {
        if (heldout) record.test_accuracy = test_accuracy(model, *heldout);
        if (!record.partition || !train.has_true_labels()) return;
        const Partition& part = *record.partition;
        VerificationReport split;
        split.clean_ids = part.clean;
        split.noisy_ids = part.noisy;
        const auto id = identification_metrics(split, train);
        record.identification_precision = id.noisy.precision;
        record.identification_recall = id.noisy.recall;
        record.correction_accuracy = correction_metrics(part.relabeled, part.noisy.size(), train).accuracy;
    };
}

}  // namespace nce
