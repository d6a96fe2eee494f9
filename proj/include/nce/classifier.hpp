#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "nce/types.hpp"

namespace nce {

using Rng = std::mt19937_64;

/// Named parameter blocks of the classifier. With no hidden layer the hidden
/// blocks are empty and the output block maps inputs straight to logits.
template <typename Scalar>
struct Parameters {
    using Mat = typename Types<Scalar>::Matrix;

    Mat hidden_weight;  // d x h
    Mat hidden_bias;    // 1 x h
    Mat output_weight;  // h x C (d x C without a hidden layer)
    Mat output_bias;    // 1 x C

    static constexpr const char* kNames[4] = {"hidden.weight", "hidden.bias", "output.weight", "output.bias"};

    template <typename F>
    void for_each(F&& f) {
        f(kNames[0], hidden_weight);
        f(kNames[1], hidden_bias);
        f(kNames[2], output_weight);
        f(kNames[3], output_bias);
    }
    template <typename F>
    void for_each(F&& f) const {
        f(kNames[0], hidden_weight);
        f(kNames[1], hidden_bias);
        f(kNames[2], output_weight);
        f(kNames[3], output_bias);
    }

    Parameters zeros_like() const {
        Parameters z;
        z.hidden_weight = Mat::Zero(hidden_weight.rows(), hidden_weight.cols());
        z.hidden_bias = Mat::Zero(hidden_bias.rows(), hidden_bias.cols());
        z.output_weight = Mat::Zero(output_weight.rows(), output_weight.cols());
        z.output_bias = Mat::Zero(output_bias.rows(), output_bias.cols());
        return z;
    }

    bool all_finite() const {
        bool ok = true;
        for_each([&](const char*, const Mat& m) { ok = ok && m.allFinite(); });
        return ok;
    }

    Parameters& operator+=(const Parameters& other) {
        hidden_weight += other.hidden_weight;
        hidden_bias += other.hidden_bias;
        output_weight += other.output_weight;
        output_bias += other.output_bias;
        return *this;
    }

    Parameters& operator*=(Scalar s) {
        hidden_weight *= s;
        hidden_bias *= s;
        output_weight *= s;
        output_bias *= s;
        return *this;
    }

    friend bool operator==(const Parameters& a, const Parameters& b) {
        auto same = [](const Mat& x, const Mat& y) { return x.rows() == y.rows() && x.cols() == y.cols() && x == y; };
        return same(a.hidden_weight, b.hidden_weight) && same(a.hidden_bias, b.hidden_bias) &&
               same(a.output_weight, b.output_weight) && same(a.output_bias, b.output_bias);
    }
};

/// Row-wise softmax with max-logit subtraction.
template <typename Derived>
typename Types<typename Derived::Scalar>::Matrix softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
    using Mat = typename Types<typename Derived::Scalar>::Matrix;
    Mat shifted = logits.colwise() - logits.rowwise().maxCoeff();
    Mat e = shifted.array().exp().matrix();
    return e.array().colwise() / e.rowwise().sum().array();
}

template <typename Derived>
typename Types<typename Derived::Scalar>::Matrix log_softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
    using Mat = typename Types<typename Derived::Scalar>::Matrix;
    Mat shifted = logits.colwise() - logits.rowwise().maxCoeff();
    const auto log_norm = shifted.array().exp().rowwise().sum().log().eval();
    return (shifted.array().colwise() - log_norm).matrix();
}

/// Softmax classifier over an optional one-hidden-layer ReLU embedding.
template <typename Scalar>
class Classifier {
public:
    using Mat = typename Types<Scalar>::Matrix;
    using Params = Parameters<Scalar>;

    Classifier() = default;

    static Classifier zeros(Eigen::Index input_dim, Eigen::Index hidden_dim, Eigen::Index num_classes) {
        if (input_dim < 1 || hidden_dim < 0 || num_classes < 2)
            throw Error(ErrorKind::Shape, "classifier: need input_dim >= 1, hidden_dim >= 0, num_classes >= 2");
        Classifier m;
        m.input_dim_ = input_dim;
        m.hidden_dim_ = hidden_dim;
        m.num_classes_ = num_classes;
        const Eigen::Index fan = hidden_dim > 0 ? hidden_dim : input_dim;
        m.params_.hidden_weight = Mat::Zero(hidden_dim > 0 ? input_dim : 0, hidden_dim);
        m.params_.hidden_bias = Mat::Zero(hidden_dim > 0 ? 1 : 0, hidden_dim);
        m.params_.output_weight = Mat::Zero(fan, num_classes);
        m.params_.output_bias = Mat::Zero(1, num_classes);
        return m;
    }

    /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] per layer.
    static Classifier random(Eigen::Index input_dim, Eigen::Index hidden_dim, Eigen::Index num_classes, Rng& rng) {
        Classifier m = zeros(input_dim, hidden_dim, num_classes);
        auto fill = [&rng](Mat& block, Eigen::Index fan_in) {
            const Scalar bound = Scalar(1) / std::sqrt(Scalar(fan_in));
            std::uniform_real_distribution<double> u(-static_cast<double>(bound), static_cast<double>(bound));
            for (Eigen::Index j = 0; j < block.cols(); ++j)
                for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) = Scalar(u(rng));
        };
        if (hidden_dim > 0) {
            fill(m.params_.hidden_weight, input_dim);
            fill(m.params_.hidden_bias, input_dim);
            fill(m.params_.output_weight, hidden_dim);
            fill(m.params_.output_bias, hidden_dim);
        } else {
            fill(m.params_.output_weight, input_dim);
            fill(m.params_.output_bias, input_dim);
        }
        return m;
    }

    /// Rebuilds a model from parameter blocks (checkpoint loading); shapes are validated.
    static Classifier from_parameters(Params params) {
        const Eigen::Index h = params.hidden_weight.cols();
        const Eigen::Index c = params.output_weight.cols();
        const Eigen::Index d = h > 0 ? params.hidden_weight.rows() : params.output_weight.rows();
        Classifier m = zeros(d, h, c);
        auto same = [](const Mat& a, const Mat& b) { return a.rows() == b.rows() && a.cols() == b.cols(); };
        if (!same(m.params_.hidden_weight, params.hidden_weight) || !same(m.params_.hidden_bias, params.hidden_bias) ||
            !same(m.params_.output_weight, params.output_weight) || !same(m.params_.output_bias, params.output_bias))
            throw Error(ErrorKind::Shape, "classifier: inconsistent parameter shapes");
        if (!params.all_finite()) throw Error(ErrorKind::NonFinite, "classifier: non-finite parameter");
        m.params_ = std::move(params);
        return m;
    }

    Eigen::Index input_dim() const noexcept { return input_dim_; }
    Eigen::Index hidden_dim() const noexcept { return hidden_dim_; }
    Eigen::Index num_classes() const noexcept { return num_classes_; }
    const Params& parameters() const noexcept { return params_; }
    Params& parameters() noexcept { return params_; }

    template <typename Derived>
    Mat hidden_preactivation(const Eigen::MatrixBase<Derived>& x) const {
        check_input(x);
        return (x.template cast<Scalar>() * params_.hidden_weight).rowwise() + params_.hidden_bias.row(0);
    }

    /// Phi(x): hidden ReLU activations, or the input itself without a hidden layer.
    template <typename Derived>
    Mat embed(const Eigen::MatrixBase<Derived>& x) const {
        check_input(x);
        if (hidden_dim_ == 0) return x.template cast<Scalar>();
        return hidden_preactivation(x).cwiseMax(Scalar(0));
    }

    template <typename Derived>
    Mat logits(const Eigen::MatrixBase<Derived>& x) const {
        const Mat h = embed(x);
        return (h * params_.output_weight).rowwise() + params_.output_bias.row(0);
    }

    template <typename Derived>
    Mat predict_proba(const Eigen::MatrixBase<Derived>& x) const {
        return softmax_rows(logits(x));
    }

private:
    template <typename Derived>
    void check_input(const Eigen::MatrixBase<Derived>& x) const {
        if (x.cols() != input_dim_)
            throw Error(ErrorKind::Shape, "classifier: input has " + std::to_string(x.cols()) + " features, model expects " +
                                              std::to_string(input_dim_));
    }

    Eigen::Index input_dim_ = 0;
    Eigen::Index hidden_dim_ = 0;
    Eigen::Index num_classes_ = 0;
    Params params_;
};

using Model = Classifier<double>;

template <typename Scalar>
struct LossGrad {
    Scalar loss{0};
    Parameters<Scalar> grad;
};

/// Mean over rows of -sum_c targets(b, c) * log p(c | x_b), with its gradient.
/// Targets need not be one-hot (mixup targets are convex combinations).
template <typename Scalar, typename DerivedX, typename DerivedT>
LossGrad<Scalar> soft_cross_entropy(const Classifier<Scalar>& model, const Eigen::MatrixBase<DerivedX>& x,
                                    const Eigen::MatrixBase<DerivedT>& targets) {
    using Mat = typename Types<Scalar>::Matrix;
    const Eigen::Index b = x.rows();
    if (b == 0) throw Error(ErrorKind::Shape, "cross entropy: empty batch");
    if (targets.rows() != b || targets.cols() != model.num_classes())
        throw Error(ErrorKind::Shape, "cross entropy: targets must be B x C");
    const Mat t = targets.template cast<Scalar>();
    const auto& p = model.parameters();

    Mat pre;
    Mat h;
    if (model.hidden_dim() > 0) {
        pre = model.hidden_preactivation(x);
        h = pre.cwiseMax(Scalar(0));
    } else {
        h = x.template cast<Scalar>();
    }
    const Mat z = (h * p.output_weight).rowwise() + p.output_bias.row(0);
    const Mat log_p = log_softmax_rows(z);
    const Scalar inv_b = Scalar(1) / Scalar(b);

    LossGrad<Scalar> out;
    out.loss = -(t.array() * log_p.array()).sum() * inv_b;
    if (!std::isfinite(static_cast<double>(out.loss))) throw Error(ErrorKind::NonFinite, "cross entropy: non-finite loss");

    const Mat probs = log_p.array().exp().matrix();
    const Mat dz = ((probs.array().colwise() * t.rowwise().sum().array()) - t.array()).matrix() * inv_b;
    out.grad = p.zeros_like();
    out.grad.output_weight.noalias() = h.transpose() * dz;
    out.grad.output_bias = dz.colwise().sum();
    if (model.hidden_dim() > 0) {
        const Mat dh = dz * p.output_weight.transpose();
        const Mat dpre = (pre.array() > Scalar(0)).select(dh, Mat::Zero(dh.rows(), dh.cols()));
        out.grad.hidden_weight.noalias() = x.template cast<Scalar>().transpose() * dpre;
        out.grad.hidden_bias = dpre.colwise().sum();
    }
    return out;
}

template <typename Scalar>
typename Types<Scalar>::Matrix one_hot_rows(const std::vector<Label>& labels, Eigen::Index num_classes) {
    typename Types<Scalar>::Matrix t = Types<Scalar>::Matrix::Zero(static_cast<Eigen::Index>(labels.size()), num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= num_classes) throw Error(ErrorKind::InvalidLabel, "one_hot_rows: label out of range");
        t(static_cast<Eigen::Index>(i), labels[i]) = Scalar(1);
    }
    return t;
}

/// Mean cross-entropy against hard labels.
template <typename Scalar, typename DerivedX>
LossGrad<Scalar> cross_entropy(const Classifier<Scalar>& model, const Eigen::MatrixBase<DerivedX>& x,
                               const std::vector<Label>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != x.rows()) throw Error(ErrorKind::Shape, "cross entropy: label count mismatch");
    return soft_cross_entropy(model, x, one_hot_rows<Scalar>(labels, model.num_classes()));
}

/// SGD with heavy-ball momentum and L2 weight decay folded into the gradient:
///   v <- momentum * v + (g + weight_decay * theta);  theta <- theta - eta * v
template <typename Scalar>
class SgdMomentum {
public:
    SgdMomentum(Scalar eta, Scalar momentum = Scalar(0.9), Scalar weight_decay = Scalar(5e-4))
        : eta_(eta), momentum_(momentum), weight_decay_(weight_decay) {}

    void step(Classifier<Scalar>& model, const Parameters<Scalar>& grad) {
        if (!grad.all_finite()) throw Error(ErrorKind::NonFinite, "sgd_step: non-finite gradient");
        auto& theta = model.parameters();
        if (!initialized_) {
            velocity_ = theta.zeros_like();
            initialized_ = true;
        }
        update(theta.hidden_weight, grad.hidden_weight, velocity_.hidden_weight);
        update(theta.hidden_bias, grad.hidden_bias, velocity_.hidden_bias);
        update(theta.output_weight, grad.output_weight, velocity_.output_weight);
        update(theta.output_bias, grad.output_bias, velocity_.output_bias);
        if (!theta.all_finite()) throw Error(ErrorKind::NonFinite, "sgd_step: parameters became non-finite");
    }

    Scalar eta() const noexcept { return eta_; }
    const Parameters<Scalar>& velocity() const noexcept { return velocity_; }

private:
    using Mat = typename Types<Scalar>::Matrix;

    void update(Mat& theta, const Mat& g, Mat& v) const {
        if (theta.rows() != g.rows() || theta.cols() != g.cols())
            throw Error(ErrorKind::Shape, "sgd_step: gradient shape does not match parameters");
        v = momentum_ * v + g + weight_decay_ * theta;
        theta -= eta_ * v;
    }

    Scalar eta_;
    Scalar momentum_;
    Scalar weight_decay_;
    Parameters<Scalar> velocity_;
    bool initialized_ = false;
};

template <typename Scalar>
void sgd_step(Classifier<Scalar>& model, const Parameters<Scalar>& grad, SgdMomentum<Scalar>& optimizer) {
    optimizer.step(model, grad);
}

/// Shuffled index order for one epoch.
inline IdList shuffled_ids(SampleId n, Rng& rng) {
    IdList ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), SampleId{0});
    std::shuffle(ids.begin(), ids.end(), rng);
    return ids;
}

template <typename Derived>
typename Types<typename Derived::Scalar>::Matrix gather_rows(const Eigen::MatrixBase<Derived>& x, const IdList& ids,
                                                             std::size_t begin, std::size_t end) {
    typename Types<typename Derived::Scalar>::Matrix out(static_cast<Eigen::Index>(end - begin), x.cols());
    for (std::size_t i = begin; i < end; ++i) out.row(static_cast<Eigen::Index>(i - begin)) = x.row(ids[i]);
    return out;
}

/// One epoch of mini-batch cross-entropy SGD over all rows of `x` with `labels`.
/// Returns the mean batch loss.
template <typename Scalar>
double cross_entropy_epoch(Classifier<Scalar>& model, SgdMomentum<Scalar>& optimizer, const Matrix& x,
                           const std::vector<Label>& labels, int batch_size, Rng& rng) {
    const IdList order = shuffled_ids(x.rows(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(batch_size));
        std::vector<Label> y(end - begin);
        for (std::size_t i = begin; i < end; ++i) y[i - begin] = labels[order[i]];
        const Matrix xb = gather_rows(x, order, begin, end);
        LossGrad<Scalar> lg;
        try {
            lg = cross_entropy(model, xb, y);
        } catch (const Error& e) {
            throw Error(e.kind(), std::string("batch ") + std::to_string(batches) + ": " + e.what());
        }
        optimizer.step(model, lg.grad);
        total += static_cast<double>(lg.loss);
        ++batches;
    }
    return batches ? total / static_cast<double>(batches) : 0.0;
}

/// Supervised cross-entropy training on every sample with its given label.
template <typename Scalar>
void warmup(Classifier<Scalar>& model, SgdMomentum<Scalar>& optimizer, const Dataset& dataset, int epochs, int batch_size,
            Rng& rng) {
    if (epochs < 1) throw Error(ErrorKind::InvalidConfig, "warmup: epochs must be >= 1");
    for (int e = 0; e < epochs; ++e) {
        try {
            cross_entropy_epoch(model, optimizer, dataset.features(), dataset.given_labels(), batch_size, rng);
        } catch (const Error& err) {
            throw Error(err.kind(), "warmup epoch " + std::to_string(e + 1) + ", " + err.what());
        }
    }
}

/// Convenience form: fresh optimizer with the given learning rate and the default momentum / decay.
template <typename Scalar>
void warmup(Classifier<Scalar>& model, const Dataset& dataset, int epochs, Scalar eta, int batch_size, std::uint64_t seed) {
    SgdMomentum<Scalar> optimizer(eta);
    Rng rng(seed);
    warmup(model, optimizer, dataset, epochs, batch_size, rng);
}

}  // namespace nce
