#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace nce {

template <typename FloatType>
struct Types {
    using Scalar = FloatType;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
};

using TypesD = Types<double>;
using Matrix = TypesD::Matrix;
using Vector = TypesD::Vector;

using Label = int;
using SampleId = std::int64_t;
using IdList = std::vector<SampleId>;

enum class ErrorKind {
    InvalidLabel,
    NonFiniteFeature,
    RaggedRows,
    EmptyDataset,
    Shape,
    DegenerateVector,
    EmptyPool,
    EmptyNeighborhood,
    InfiniteDivergence,
    EmptyCleanPool,
    NonFinite,
    InvalidConfig,
    MissingTrueLabels,
    Schema,
    Io,
    TrueLabelAccess,
};

const char* to_string(ErrorKind kind);

/// Every failure in the library is reported as an Error carrying a kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct Violation {
    std::int64_t index;  // row (or label position); -1 when not row-specific
    ErrorKind kind;
    std::string reason;
};

/// Raised by validate_dataset; lists every violation found, not only the first.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations);

    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    std::vector<Violation> violations_;
};

/// While alive, reading Dataset::true_labels() on this thread throws.
/// Algorithm entry points open one so hidden labels can never leak into them.
class AlgorithmScope {
public:
    AlgorithmScope();
    ~AlgorithmScope();
    AlgorithmScope(const AlgorithmScope&) = delete;
    AlgorithmScope& operator=(const AlgorithmScope&) = delete;

    static bool active() noexcept;

private:
    int saved_;
};

/// Re-opens true-label access inside an AlgorithmScope (evaluation hooks only).
class EvaluationScope {
public:
    EvaluationScope();
    ~EvaluationScope();
    EvaluationScope(const EvaluationScope&) = delete;
    EvaluationScope& operator=(const EvaluationScope&) = delete;

private:
    int saved_;
};

class Dataset {
public:
    Dataset() = default;

    const Matrix& features() const noexcept { return features_; }
    const std::vector<Label>& given_labels() const noexcept { return given_; }
    int num_classes() const noexcept { return num_classes_; }
    SampleId size() const noexcept { return static_cast<SampleId>(given_.size()); }
    Eigen::Index dim() const noexcept { return features_.cols(); }

    bool has_true_labels() const noexcept { return true_.has_value(); }
    /// Throws TrueLabelAccess inside an AlgorithmScope.
    const std::vector<Label>& true_labels() const;

    Dataset with_given_labels(std::vector<Label> labels) const;
    Dataset subset(const IdList& ids) const;

    friend bool operator==(const Dataset& a, const Dataset& b);

private:
    friend Dataset validate_dataset(Matrix, std::vector<Label>, int, std::optional<std::vector<Label>>);

    Matrix features_;
    std::vector<Label> given_;
    std::optional<std::vector<Label>> true_;
    int num_classes_ = 0;
};

Dataset validate_dataset(Matrix features, std::vector<Label> given_labels, int num_classes,
                         std::optional<std::vector<Label>> true_labels = std::nullopt);

/// Row-list overload: detects ragged rows before packing into a matrix.
Dataset validate_dataset(const std::vector<std::vector<double>>& rows, std::vector<Label> given_labels,
                         int num_classes, std::optional<std::vector<Label>> true_labels = std::nullopt);

/// Re-validates an existing dataset; returns an equal copy.
Dataset validate_dataset(const Dataset& dataset);

/// Probability vector on the simplex.
template <typename Scalar = double>
class LabelDistribution {
public:
    using Vec = typename Types<Scalar>::Vector;

    LabelDistribution() = default;

    /// Throws Shape if entries are negative, non-finite, or do not sum to 1 within 1e-9.
    explicit LabelDistribution(Vec probs) : probs_(std::move(probs)) {
        if (probs_.size() == 0)
            throw Error(ErrorKind::Shape, "label distribution must have at least one class");
        Scalar total = 0;
        for (Eigen::Index i = 0; i < probs_.size(); ++i) {
            if (!std::isfinite(static_cast<double>(probs_[i])) || probs_[i] < Scalar(0))
                throw Error(ErrorKind::Shape, "label distribution entries must be finite and non-negative");
            total += probs_[i];
        }
        if (std::abs(static_cast<double>(total) - 1.0) > 1e-9)
            throw Error(ErrorKind::Shape, "label distribution must sum to 1");
    }

    const Vec& probs() const noexcept { return probs_; }
    Eigen::Index num_classes() const noexcept { return probs_.size(); }
    Scalar operator[](Eigen::Index i) const { return probs_[i]; }

    friend bool operator==(const LabelDistribution& a, const LabelDistribution& b) {
        return a.probs_.size() == b.probs_.size() && a.probs_ == b.probs_;
    }

private:
    Vec probs_;
};

using Distribution = LabelDistribution<double>;

template <typename Scalar = double>
LabelDistribution<Scalar> one_hot(Label label, int num_classes) {
    if (num_classes < 1 || label < 0 || label >= num_classes)
        throw Error(ErrorKind::InvalidLabel,
                    "label " + std::to_string(label) + " out of range [0, " + std::to_string(num_classes) + ")");
    typename Types<Scalar>::Vector v = Types<Scalar>::Vector::Zero(num_classes);
    v[label] = Scalar(1);
    return LabelDistribution<Scalar>(std::move(v));
}

struct NeighborSet {
    IdList indices;
    std::vector<double> similarities;  // non-increasing

    std::size_t size() const noexcept { return indices.size(); }
};

struct RelabeledSample {
    SampleId id;
    Label label;

    friend bool operator==(const RelabeledSample&, const RelabeledSample&) = default;
};

/// Clean / noisy / relabeled decomposition of one epoch.
struct Partition {
    IdList clean;
    IdList noisy;
    std::vector<RelabeledSample> relabeled;
    IdList dropped;
    std::vector<double> ver_scores;  // per sample
    std::vector<double> cor_scores;  // aligned with noisy

    /// Throws Shape describing the first broken invariant.
    void check(SampleId num_samples) const;
};

enum class FeatureSource { Raw, Embedding };
enum class CorrectionMode { Neighborhood, ConfidenceThreshold };

struct PerturbationPolicy {
    double gaussian_sigma = 0.1;  // multiple of per-dimension feature std
    double dropout_rate = 0.1;

    bool is_identity() const noexcept { return gaussian_sigma == 0.0 && dropout_rate == 0.0; }
    void check() const;

    static PerturbationPolicy identity() { return {0.0, 0.0}; }
};

struct Config {
    int K = 20;
    double tau = 0.75;
    double tau_prime = 2e-3;
    double gamma = 1.0;
    double alpha = 4.0;
    double eta = 0.02;
    int T_wu = 10;
    int T_tr = 60;
    int B = 128;
    int B_prime = 128;
    std::uint64_t seed = 1;
    PerturbationPolicy perturbation{};
    bool apply_lab_to_clean = false;

    // model and optimizer
    int hidden_dim = 64;
    double momentum = 0.9;
    double weight_decay = 5e-4;

    FeatureSource feature_source = FeatureSource::Raw;

    // ablation switches
    bool use_mixup = true;
    bool use_lab_loss = true;
    CorrectionMode correction_mode = CorrectionMode::Neighborhood;
    double confidence_threshold = 0.95;

    /// Throws InvalidConfig on the first broken invariant.
    void check() const;
};

}  // namespace nce
