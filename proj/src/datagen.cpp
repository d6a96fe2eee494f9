#include "nce/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "nce/classifier.hpp"

namespace nce {

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

BlobModel make_blob_model(int num_classes, int dim, double cluster_std, std::uint64_t seed) {
    if (num_classes < 2) throw Error(ErrorKind::InvalidConfig, "make_blobs: need at least two classes");
    if (dim < 1) throw Error(ErrorKind::InvalidConfig, "make_blobs: dimension must be >= 1");
    if (!(cluster_std >= 0.0) || !std::isfinite(cluster_std))
        throw Error(ErrorKind::InvalidConfig, "make_blobs: cluster std must be finite and >= 0");

    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix gauss(dim, num_classes);
    for (Eigen::Index j = 0; j < gauss.cols(); ++j)
        for (Eigen::Index i = 0; i < gauss.rows(); ++i) gauss(i, j) = normal(rng);

    BlobModel model;
    model.cluster_std = cluster_std;
    if (num_classes <= dim) {
        Eigen::HouseholderQR<Matrix> qr(gauss);
        const Matrix q = qr.householderQ() * Matrix::Identity(dim, num_classes);
        model.means = q.transpose();
    } else {
        model.means = gauss.transpose();
    }
    for (Eigen::Index c = 0; c < model.means.rows(); ++c) {
        const double norm = model.means.row(c).norm();
        if (norm > 0.0) model.means.row(c) /= norm;
    }
    return model;
}

Dataset sample_blobs(const BlobModel& model, int per_class_n, std::uint64_t seed) {
    if (per_class_n < 1) throw Error(ErrorKind::InvalidConfig, "make_blobs: per-class count must be >= 1");
    const auto num_classes = static_cast<int>(model.means.rows());
    const Eigen::Index dim = model.means.cols();
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix x(static_cast<Eigen::Index>(num_classes) * per_class_n, dim);
    std::vector<Label> labels(static_cast<std::size_t>(x.rows()));
    Eigen::Index row = 0;
    for (int c = 0; c < num_classes; ++c) {
        for (int i = 0; i < per_class_n; ++i, ++row) {
            for (Eigen::Index j = 0; j < dim; ++j) x(row, j) = model.means(c, j) + model.cluster_std * normal(rng);
            labels[static_cast<std::size_t>(row)] = c;
        }
    }
    return validate_dataset(std::move(x), labels, num_classes, labels);
}

Dataset make_blobs(int num_classes, int per_class_n, int dim, double cluster_std, std::uint64_t seed) {
    const BlobModel model = make_blob_model(num_classes, dim, cluster_std, seed);
    // samples come from a stream independent of the one that placed the means
    const std::uint64_t sample_seed = Rng(seed ^ 0x9e3779b97f4a7c15ULL)();
    return sample_blobs(model, per_class_n, sample_seed);
}

std::vector<Label> cyclic_map(int num_classes) {
    std::vector<Label> map(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) map[static_cast<std::size_t>(c)] = (c + 1) % num_classes;
    return map;
}

NoiseInjection inject_noise(const Dataset& dataset, const NoiseSpec& spec, std::uint64_t seed) {
    if (!(spec.ratio >= 0.0 && spec.ratio < 1.0)) throw Error(ErrorKind::InvalidConfig, "inject_noise: ratio must lie in [0, 1)");
    const int num_classes = dataset.num_classes();
    std::vector<Label> truth = dataset.has_true_labels() ? dataset.true_labels() : dataset.given_labels();
    std::vector<Label> noisy = truth;
    const auto n = static_cast<std::size_t>(dataset.size());
    Rng rng(seed);
    IdList corrupted;

    if (spec.type == NoiseType::Symmetric) {
        IdList order = shuffled_ids(dataset.size(), rng);
        const auto m = static_cast<std::size_t>(std::llround(spec.ratio * static_cast<double>(n)));
        std::uniform_int_distribution<int> other(0, spec.inclusive ? num_classes - 1 : num_classes - 2);
        for (std::size_t i = 0; i < m; ++i) {
            const SampleId id = order[i];
            int draw = other(rng);
            if (!spec.inclusive && draw >= truth[id]) ++draw;  // skip the true class
            noisy[id] = draw;
            if (draw != truth[id]) corrupted.push_back(id);
        }
    } else {
        std::vector<Label> map;
        if (spec.asym_map) {
            map = *spec.asym_map;
        } else if (num_classes == 2) {
            map = cyclic_map(2);
        } else {
            throw Error(ErrorKind::InvalidConfig, "inject_noise: asymmetric noise over more than two classes needs a class map");
        }
        if (map.size() != static_cast<std::size_t>(num_classes))
            throw Error(ErrorKind::InvalidConfig, "inject_noise: class map must have one entry per class");
        for (int c = 0; c < num_classes; ++c) {
            const Label target = map[static_cast<std::size_t>(c)];
            if (target < 0 || target >= num_classes || target == c)
                throw Error(ErrorKind::InvalidConfig, "inject_noise: class map entry " + std::to_string(c) + " must name a different valid class");
        }
        for (int c = 0; c < num_classes; ++c) {
            IdList members;
            for (std::size_t i = 0; i < n; ++i)
                if (truth[i] == c) members.push_back(static_cast<SampleId>(i));
            std::shuffle(members.begin(), members.end(), rng);
            const auto m = static_cast<std::size_t>(std::llround(spec.ratio * static_cast<double>(members.size())));
            for (std::size_t i = 0; i < m; ++i) {
                noisy[members[i]] = map[static_cast<std::size_t>(c)];
                corrupted.push_back(members[i]);
            }
        }
    }
    std::sort(corrupted.begin(), corrupted.end());

    NoiseInjection out;
    out.realized_ratio = n ? static_cast<double>(corrupted.size()) / static_cast<double>(n) : 0.0;
    out.corrupted = std::move(corrupted);
    out.dataset = validate_dataset(dataset.features(), std::move(noisy), num_classes, std::move(truth));
    return out;
}

}  // namespace nce
