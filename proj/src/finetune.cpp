#include "nce/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nce/simindex.hpp"

namespace nce {

double sample_beta(double alpha, Rng& rng) {
    std::gamma_distribution<double> gamma(alpha, 1.0);
    const double a = gamma(rng);
    const double b = gamma(rng);
    if (a + b == 0.0) return 0.5;
    return a / (a + b);
}

MixupBatch mixup_with(const Matrix& x, const std::vector<Label>& labels, int num_classes,
                      const std::vector<std::size_t>& partner, const std::vector<double>& lambdas) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (labels.size() != n || partner.size() != n || lambdas.size() != n)
        throw Error(ErrorKind::Shape, "mixup: batch, labels, partners and ratios must align");
    const Matrix targets = one_hot_rows<double>(labels, num_classes);

    MixupBatch out;
    out.x.resize(x.rows(), x.cols());
    out.y.resize(x.rows(), num_classes);
    out.lambda = lambdas;
    out.first.resize(n);
    out.second = partner;
    for (std::size_t i = 0; i < n; ++i) {
        const double lam = lambdas[i];
        if (!(lam >= 0.0 && lam <= 1.0)) throw Error(ErrorKind::Shape, "mixup: ratio outside [0, 1]");
        if (partner[i] >= n) throw Error(ErrorKind::Shape, "mixup: partner index out of range");
        const auto r = static_cast<Eigen::Index>(i);
        const auto j = static_cast<Eigen::Index>(partner[i]);
        out.first[i] = i;
        out.x.row(r) = lam * x.row(r) + (1.0 - lam) * x.row(j);
        out.y.row(r) = lam * targets.row(r) + (1.0 - lam) * targets.row(j);
    }
    return out;
}

MixupBatch mixup_batch(const Matrix& x, const std::vector<Label>& labels, int num_classes, double alpha, Rng& rng) {
    if (x.rows() < 2) throw Error(ErrorKind::Shape, "mixup: batch needs at least two samples");
    if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidConfig, "mixup: alpha must be > 0");
    std::vector<std::size_t> partner(static_cast<std::size_t>(x.rows()));
    std::iota(partner.begin(), partner.end(), std::size_t{0});
    std::shuffle(partner.begin(), partner.end(), rng);
    std::vector<double> lambdas(partner.size());
    for (auto& lam : lambdas) lam = sample_beta(alpha, rng);
    return mixup_with(x, labels, num_classes, partner, lambdas);
}

Matrix perturb(const Matrix& x, const PerturbationPolicy& policy, const Vector& feature_std, Rng& rng) {
    policy.check();
    if (policy.is_identity()) return x;
    if (feature_std.size() != x.cols()) throw Error(ErrorKind::Shape, "perturb: feature_std must have one entry per column");
    Matrix out = x;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution drop(policy.dropout_rate);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            if (policy.gaussian_sigma > 0.0) out(i, j) += policy.gaussian_sigma * feature_std[j] * normal(rng);
            if (policy.dropout_rate > 0.0 && drop(rng)) out(i, j) = 0.0;
        }
    }
    return out;
}

Vector column_std(const Matrix& x) {
    if (x.rows() == 0) return Vector::Zero(x.cols());
    const Eigen::RowVectorXd mean = x.colwise().mean();
    return ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt().transpose();
}

LossGrad<double> mix_loss(const Model& model, const MixupBatch& batch) {
    return soft_cross_entropy(model, batch.x, batch.y);
}

LossGrad<double> consistency_loss(const Model& model, const Matrix& perturbed_x, const std::vector<Label>& labels) {
    return cross_entropy(model, perturbed_x, labels);
}

LossGrad<double> consistency_loss(const Model& model, const Matrix& x, const std::vector<Label>& labels,
                                  const PerturbationPolicy& policy, const Vector& feature_std, Rng& rng) {
    return consistency_loss(model, perturb(x, policy, feature_std, rng), labels);
}

OverallLoss overall_loss(const Model& model, const MixupBatch& clean, const Matrix& perturbed_relabeled,
                         const std::vector<Label>& relabeled_labels, double gamma) {
    LossGrad<double> mix = mix_loss(model, clean);
    OverallLoss out;
    out.mix = mix.loss;
    out.total = mix.loss;
    out.grad = std::move(mix.grad);
    if (!relabeled_labels.empty() && gamma != 0.0) {
        LossGrad<double> lab = consistency_loss(model, perturbed_relabeled, relabeled_labels);
        out.lab = lab.loss;
        out.total += gamma * lab.loss;
        lab.grad *= gamma;
        out.grad += lab.grad;
    }
    return out;
}

const char* to_string(EpochPhase phase) {
    switch (phase) {
        case EpochPhase::Warmup: return "warmup";
        case EpochPhase::Nce: return "nce";
        case EpochPhase::Fallback: return "fallback";
    }
    return "unknown";
}

Model initial_model(const Dataset& dataset, const Config& config) {
    Rng init(config.seed);
    return Model::random(dataset.dim(), config.hidden_dim, dataset.num_classes(), init);
}

SgdMomentum<double> make_optimizer(const Config& config) {
    return SgdMomentum<double>(config.eta, config.momentum, config.weight_decay);
}

Rng training_rng(const Config& config) {
    std::seed_seq seq{config.seed, std::uint64_t{0x6e6365}};
    return Rng(seq);
}

Matrix neighbor_features(const Dataset& dataset, const Model& model, FeatureSource source) {
    if (source == FeatureSource::Raw) return dataset.features();
    return model.embed(dataset.features());
}

namespace {

// Splits ids into consecutive batches of `size`; a trailing singleton joins the
// previous batch so every batch can be mixed.
std::vector<std::pair<std::size_t, std::size_t>> batch_bounds(std::size_t n, std::size_t size) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t begin = 0; begin < n; begin += size) out.emplace_back(begin, std::min(n, begin + size));
    if (out.size() > 1 && out.back().second - out.back().first == 1) {
        out.pop_back();
        out.back().second = n;
    }
    return out;
}

struct LabeledPool {
    IdList ids;
    std::vector<Label> labels;
};

// Cycles through a pool in shuffled order, reshuffling on exhaustion.
class PoolSampler {
public:
    PoolSampler(const LabeledPool& pool, Rng& rng) : pool_(pool), rng_(rng) { reshuffle(); }

    std::vector<std::size_t> next(std::size_t count) {
        std::vector<std::size_t> out;
        count = std::min(count, order_.size());
        while (out.size() < count) {
            if (cursor_ == order_.size()) reshuffle();
            out.push_back(order_[cursor_++]);
        }
        return out;
    }

private:
    void reshuffle() {
        order_.resize(pool_.ids.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::shuffle(order_.begin(), order_.end(), rng_);
        cursor_ = 0;
    }

    const LabeledPool& pool_;
    Rng& rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

void fallback_epoch(EpochRecord& record, Model& model, SgdMomentum<double>& optimizer, const Dataset& dataset,
                    const Config& config, Rng& rng, const std::string& why) {
    record.phase = EpochPhase::Fallback;
    record.warnings.push_back(why + "; epoch trained with cross-entropy on all samples");
    record.loss = cross_entropy_epoch(model, optimizer, dataset.features(), dataset.given_labels(), config.B, rng);
    record.loss_mix = 0.0;
    record.loss_lab = 0.0;
}

void nce_epoch(EpochRecord& record, Model& model, SgdMomentum<double>& optimizer, const Dataset& dataset,
               const Config& config, const Vector& feature_std, Rng& rng) {
    const int num_classes = dataset.num_classes();
    const Matrix predictions = model.predict_proba(dataset.features());

    Matrix features = neighbor_features(dataset, model, config.feature_source);
    VerificationReport verification;
    try {
        const Index index = build_index(features);
        verification = verify(dataset, predictions, index, config.K, config.tau);
    } catch (const Error& e) {
        if (config.feature_source != FeatureSource::Embedding ||
            (e.kind() != ErrorKind::DegenerateVector && e.kind() != ErrorKind::EmptyPool))
            throw;
        record.warnings.push_back(std::string("embedding unusable for neighbor search (") + e.what() +
                                  "); raw features used this epoch");
        features = dataset.features();
        verification = verify(dataset, predictions, build_index(features), config.K, config.tau);
    }

    if (verification.clean_ids.size() < 2) {
        CorrectionReport none;
        none.candidates = verification.noisy_ids;
        none.dropped = verification.noisy_ids;
        none.cor_scores.assign(none.candidates.size(), 1.0);
        none.threshold = config.tau_prime;
        record.partition = make_partition(verification, none);
        fallback_epoch(record, model, optimizer, dataset, config, rng,
                       "clean set has " + std::to_string(verification.clean_ids.size()) + " samples");
        return;
    }

    const CorrectionReport correction =
        config.correction_mode == CorrectionMode::Neighborhood
            ? relabel(dataset, features, verification, predictions, config.K, config.tau_prime)
            : relabel_by_confidence(verification, predictions, config.confidence_threshold);
    record.partition = make_partition(verification, correction);

    const Matrix& x = dataset.features();
    const auto& given = dataset.given_labels();

    LabeledPool lab_pool;
    for (const auto& r : correction.relabeled) {
        lab_pool.ids.push_back(r.id);
        lab_pool.labels.push_back(r.label);
    }
    if (config.apply_lab_to_clean) {
        for (SampleId id : verification.clean_ids) {
            lab_pool.ids.push_back(id);
            lab_pool.labels.push_back(given[id]);
        }
    }
    const bool use_lab = config.use_lab_loss && config.gamma != 0.0 && !lab_pool.ids.empty();

    IdList clean = verification.clean_ids;
    std::shuffle(clean.begin(), clean.end(), rng);
    PoolSampler sampler(lab_pool, rng);

    double total = 0.0, total_mix = 0.0, total_lab = 0.0;
    std::size_t batches = 0;
    for (const auto& [begin, end] : batch_bounds(clean.size(), static_cast<std::size_t>(config.B))) {
        const Matrix xb = gather_rows(x, clean, begin, end);
        std::vector<Label> yb(end - begin);
        for (std::size_t i = begin; i < end; ++i) yb[i - begin] = given[clean[i]];

        Matrix relab_x;
        std::vector<Label> relab_y;
        if (use_lab) {
            const auto picks = sampler.next(static_cast<std::size_t>(config.B_prime));
            IdList ids(picks.size());
            relab_y.resize(picks.size());
            for (std::size_t i = 0; i < picks.size(); ++i) {
                ids[i] = lab_pool.ids[picks[i]];
                relab_y[i] = lab_pool.labels[picks[i]];
            }
            relab_x = perturb(gather_rows(x, ids, 0, ids.size()), config.perturbation, feature_std, rng);
        }

        OverallLoss step;
        try {
            if (config.use_mixup) {
                const MixupBatch mixed = mixup_batch(xb, yb, num_classes, config.alpha, rng);
                step = overall_loss(model, mixed, relab_x, relab_y, config.gamma);
            } else {
                // supervision on the clean batch without mixing
                LossGrad<double> ce = cross_entropy(model, xb, yb);
                step.mix = step.total = ce.loss;
                step.grad = std::move(ce.grad);
                if (!relab_y.empty()) {
                    LossGrad<double> lab = consistency_loss(model, relab_x, relab_y);
                    step.lab = lab.loss;
                    step.total += config.gamma * lab.loss;
                    lab.grad *= config.gamma;
                    step.grad += lab.grad;
                }
            }
        } catch (const Error& e) {
            throw Error(e.kind(), "epoch " + std::to_string(record.epoch) + ", batch " + std::to_string(batches) + ": " + e.what());
        }
        optimizer.step(model, step.grad);
        total += step.total;
        total_mix += step.mix;
        total_lab += step.lab;
        ++batches;
    }
    record.loss = total / static_cast<double>(batches);
    record.loss_mix = total_mix / static_cast<double>(batches);
    record.loss_lab = total_lab / static_cast<double>(batches);
}

}  // namespace

PipelineResult run_pipeline(const Dataset& dataset, const Config& config, const EpochObserver& observer) {
    config.check();
    AlgorithmScope guard;

    PipelineResult result;
    result.model = initial_model(dataset, config);
    SgdMomentum<double> optimizer = make_optimizer(config);
    Rng rng = training_rng(config);
    const Vector feature_std = column_std(dataset.features());

    for (int epoch = 1; epoch <= config.T_tr; ++epoch) {
        EpochRecord record;
        record.epoch = epoch;
        if (epoch <= config.T_wu) {
            record.phase = EpochPhase::Warmup;
            try {
                record.loss = cross_entropy_epoch(result.model, optimizer, dataset.features(), dataset.given_labels(),
                                                  config.B, rng);
            } catch (const Error& e) {
                throw Error(e.kind(), "warmup epoch " + std::to_string(epoch) + ", " + e.what());
            }
            record.loss_mix = record.loss;
        } else {
            record.phase = EpochPhase::Nce;
            nce_epoch(record, result.model, optimizer, dataset, config, feature_std, rng);
        }
        if (observer) observer(record, result.model);
        result.epochs.push_back(std::move(record));
    }
    return result;
}

}  // namespace nce
