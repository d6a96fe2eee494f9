#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nce/types.hpp"

namespace nce {

/// Independent 64-bit seed for sub-stream `stream` of a base seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream);

/// Class means and spread of a Gaussian-blob benchmark.
struct BlobModel {
    Matrix means;  // C x d, unit-norm rows
    double cluster_std = 0.0;
};

/// Unit-norm class means: mutually orthogonal when C <= d, random directions otherwise.
BlobModel make_blob_model(int num_classes, int dim, double cluster_std, std::uint64_t seed);

/// per_class_n samples of every class, class-major order; true labels equal given labels.
Dataset sample_blobs(const BlobModel& model, int per_class_n, std::uint64_t seed);

Dataset make_blobs(int num_classes, int per_class_n, int dim, double cluster_std, std::uint64_t seed);

enum class NoiseType { Symmetric, Asymmetric };

struct NoiseSpec {
    NoiseType type = NoiseType::Symmetric;
    double ratio = 0.0;                  // in [0, 1)
    std::optional<std::vector<Label>> asym_map;  // class -> flip target
    // Symmetric draws over all C classes, so a selected sample may keep its
    // label and the realized ratio is about ratio * (C - 1) / C.
    bool inclusive = false;
};

/// c -> (c + 1) mod C
std::vector<Label> cyclic_map(int num_classes);

struct NoiseInjection {
    Dataset dataset;      // given labels corrupted, true labels preserved
    IdList corrupted;     // ascending
    double realized_ratio = 0.0;  // fraction with given != true
};

/// Symmetric: exactly round(ratio * N) uniformly chosen samples move to a
/// uniformly drawn label among the other C - 1 classes (all C when `inclusive`).
/// Asymmetric: round(ratio * n_c) samples of each class c move to asym_map[c].
/// Corruption starts from the true labels when present, else from the given ones.
NoiseInjection inject_noise(const Dataset& dataset, const NoiseSpec& spec, std::uint64_t seed);

}  // namespace nce
