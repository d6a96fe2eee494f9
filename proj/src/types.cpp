#include "nce/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nce {

namespace {

// Algorithm scopes nest; an evaluation scope parks the depth at zero.
thread_local int algorithm_depth = 0;

std::string summarize(const std::vector<Violation>& violations) {
    std::ostringstream out;
    out << violations.size() << " dataset violation(s):";
    for (const auto& v : violations) {
        out << "\n  ";
        if (v.index >= 0) out << "[" << v.index << "] ";
        out << to_string(v.kind) << ": " << v.reason;
    }
    return out.str();
}

}  // namespace

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidLabel: return "invalid-label";
        case ErrorKind::NonFiniteFeature: return "non-finite-feature";
        case ErrorKind::RaggedRows: return "ragged-rows";
        case ErrorKind::EmptyDataset: return "empty-dataset";
        case ErrorKind::Shape: return "shape";
        case ErrorKind::DegenerateVector: return "degenerate-vector";
        case ErrorKind::EmptyPool: return "empty-pool";
        case ErrorKind::EmptyNeighborhood: return "empty-neighborhood";
        case ErrorKind::InfiniteDivergence: return "infinite-divergence";
        case ErrorKind::EmptyCleanPool: return "empty-clean-pool";
        case ErrorKind::NonFinite: return "non-finite";
        case ErrorKind::InvalidConfig: return "invalid-config";
        case ErrorKind::MissingTrueLabels: return "missing-true-labels";
        case ErrorKind::Schema: return "schema";
        case ErrorKind::Io: return "io";
        case ErrorKind::TrueLabelAccess: return "true-label-access";
    }
    return "unknown";
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(violations.empty() ? ErrorKind::Shape : violations.front().kind, summarize(violations)),
      violations_(std::move(violations)) {}

AlgorithmScope::AlgorithmScope() : saved_(algorithm_depth) { ++algorithm_depth; }
AlgorithmScope::~AlgorithmScope() { algorithm_depth = saved_; }
bool AlgorithmScope::active() noexcept { return algorithm_depth > 0; }

EvaluationScope::EvaluationScope() : saved_(algorithm_depth) { algorithm_depth = 0; }
EvaluationScope::~EvaluationScope() { algorithm_depth = saved_; }

const std::vector<Label>& Dataset::true_labels() const {
    if (AlgorithmScope::active())
        throw Error(ErrorKind::TrueLabelAccess, "true labels are evaluation-only and cannot be read here");
    if (!true_) throw Error(ErrorKind::MissingTrueLabels, "dataset carries no true labels");
    return *true_;
}

Dataset Dataset::with_given_labels(std::vector<Label> labels) const {
    std::optional<std::vector<Label>> truth;
    if (true_) truth = *true_;
    return validate_dataset(features_, std::move(labels), num_classes_, std::move(truth));
}

Dataset Dataset::subset(const IdList& ids) const {
    Matrix rows(static_cast<Eigen::Index>(ids.size()), features_.cols());
    std::vector<Label> given(ids.size());
    std::optional<std::vector<Label>> truth;
    if (true_) truth.emplace(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= size()) throw Error(ErrorKind::Shape, "subset index out of range");
        rows.row(static_cast<Eigen::Index>(i)) = features_.row(ids[i]);
        given[i] = given_[ids[i]];
        if (truth) (*truth)[i] = (*true_)[ids[i]];
    }
    return validate_dataset(std::move(rows), std::move(given), num_classes_, std::move(truth));
}

bool operator==(const Dataset& a, const Dataset& b) {
    return a.num_classes_ == b.num_classes_ && a.given_ == b.given_ && a.true_ == b.true_ &&
           a.features_.rows() == b.features_.rows() && a.features_.cols() == b.features_.cols() &&
           a.features_ == b.features_;
}

Dataset validate_dataset(Matrix features, std::vector<Label> given_labels, int num_classes,
                         std::optional<std::vector<Label>> true_labels) {
    std::vector<Violation> violations;
    if (num_classes < 2)
        violations.push_back({-1, ErrorKind::InvalidLabel, "num_classes must be >= 2, got " + std::to_string(num_classes)});
    if (features.rows() == 0 || given_labels.empty())
        violations.push_back({-1, ErrorKind::EmptyDataset, "dataset has no samples"});
    if (features.cols() < 1 && features.rows() > 0)
        violations.push_back({-1, ErrorKind::Shape, "feature dimension must be >= 1"});
    if (static_cast<std::size_t>(features.rows()) != given_labels.size())
        violations.push_back({-1, ErrorKind::Shape,
                              "feature rows (" + std::to_string(features.rows()) + ") != label count (" +
                                  std::to_string(given_labels.size()) + ")"});
    if (true_labels && true_labels->size() != given_labels.size())
        violations.push_back({-1, ErrorKind::Shape, "true label count differs from given label count"});

    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        if (!features.row(r).allFinite())
            violations.push_back({r, ErrorKind::NonFiniteFeature, "row contains a non-finite value"});
    }
    auto check_labels = [&](const std::vector<Label>& labels, const char* what) {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] < 0 || labels[i] >= num_classes)
                violations.push_back({static_cast<std::int64_t>(i), ErrorKind::InvalidLabel,
                                      std::string(what) + " " + std::to_string(labels[i]) + " outside [0, " +
                                          std::to_string(num_classes) + ")"});
        }
    };
    check_labels(given_labels, "given label");
    if (true_labels) check_labels(*true_labels, "true label");

    if (!violations.empty()) throw ValidationError(std::move(violations));

    Dataset out;
    out.features_ = std::move(features);
    out.given_ = std::move(given_labels);
    out.true_ = std::move(true_labels);
    out.num_classes_ = num_classes;
    return out;
}

Dataset validate_dataset(const std::vector<std::vector<double>>& rows, std::vector<Label> given_labels,
                         int num_classes, std::optional<std::vector<Label>> true_labels) {
    if (rows.empty()) throw ValidationError({{-1, ErrorKind::EmptyDataset, "dataset has no samples"}});
    const std::size_t d = rows.front().size();
    std::vector<Violation> ragged;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != d)
            ragged.push_back({static_cast<std::int64_t>(r), ErrorKind::RaggedRows,
                              "row has " + std::to_string(rows[r].size()) + " values, expected " + std::to_string(d)});
    }
    if (!ragged.empty()) throw ValidationError(std::move(ragged));

    Matrix features(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < d; ++c) features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return validate_dataset(std::move(features), std::move(given_labels), num_classes, std::move(true_labels));
}

Dataset validate_dataset(const Dataset& dataset) {
    EvaluationScope lift;
    std::optional<std::vector<Label>> truth;
    if (dataset.has_true_labels()) truth = dataset.true_labels();
    return validate_dataset(dataset.features(), dataset.given_labels(), dataset.num_classes(), std::move(truth));
}

void Partition::check(SampleId num_samples) const {
    std::vector<char> seen(static_cast<std::size_t>(num_samples), 0);
    auto mark = [&](SampleId id, char tag) {
        if (id < 0 || id >= num_samples) throw Error(ErrorKind::Shape, "partition index out of range");
        if (seen[id] & tag) throw Error(ErrorKind::Shape, "partition index listed twice");
        seen[id] |= tag;
    };
    for (auto id : clean) mark(id, 1);
    for (auto id : noisy) {
        if (seen[id] & 1) throw Error(ErrorKind::Shape, "sample is both clean and noisy");
        mark(id, 2);
    }
    if (static_cast<SampleId>(clean.size() + noisy.size()) != num_samples)
        throw Error(ErrorKind::Shape, "clean and noisy do not cover every sample");
    for (const auto& r : relabeled) {
        if (r.id < 0 || r.id >= num_samples || !(seen[r.id] & 2))
            throw Error(ErrorKind::Shape, "relabeled sample is not noisy");
        mark(r.id, 4);
    }
    for (auto id : dropped) {
        if (id < 0 || id >= num_samples || !(seen[id] & 2)) throw Error(ErrorKind::Shape, "dropped sample is not noisy");
        if (seen[id] & 4) throw Error(ErrorKind::Shape, "sample is both relabeled and dropped");
        mark(id, 8);
    }
    if (relabeled.size() + dropped.size() != noisy.size())
        throw Error(ErrorKind::Shape, "relabeled and dropped do not cover the noisy set");
    auto in_unit = [](double s) { return s >= 0.0 && s <= 1.0; };
    if (!std::all_of(ver_scores.begin(), ver_scores.end(), in_unit) ||
        !std::all_of(cor_scores.begin(), cor_scores.end(), in_unit))
        throw Error(ErrorKind::Shape, "score outside [0, 1]");
}

void PerturbationPolicy::check() const {
    if (!(gaussian_sigma >= 0.0) || !std::isfinite(gaussian_sigma))
        throw Error(ErrorKind::InvalidConfig, "perturbation sigma must be finite and >= 0");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw Error(ErrorKind::InvalidConfig, "perturbation dropout rate must lie in [0, 1)");
}

void Config::check() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
    if (K < 1) fail("K must be >= 1");
    if (!(tau >= 0.0 && tau < 1.0)) fail("tau must lie in [0, 1)");
    if (!(tau_prime > 0.0 && tau_prime < 1.0)) fail("tau_prime must lie in (0, 1)");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail("gamma must be finite and >= 0");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("alpha must be > 0");
    if (!(eta > 0.0) || !std::isfinite(eta)) fail("eta must be > 0");
    if (T_wu < 1) fail("T_wu must be >= 1");
    if (T_wu > T_tr) fail("T_wu must not exceed T_tr");
    if (B < 2) fail("B must be >= 2");
    if (B_prime < 1) fail("B_prime must be >= 1");
    if (hidden_dim < 0) fail("hidden_dim must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
    if (!(weight_decay >= 0.0)) fail("weight_decay must be >= 0");
    if (!(confidence_threshold > 0.0 && confidence_threshold <= 1.0)) fail("confidence_threshold must lie in (0, 1]");
    perturbation.check();
}

}  // namespace nce
