#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nce/datagen.hpp"
#include "nce/io.hpp"
#include "nce/types.hpp"

// Desk-scale experiment matrices over Gaussian blobs.
namespace nce::bench {

struct NoiseCase {
    std::string name;
    NoiseSpec spec;
    std::uint32_t stream = 0;  // corruption seed stream; equal streams give equal corruption across presets
};

struct Arm {
    std::string name;
    Config config;  // seed is overwritten per run
};

struct Preset {
    std::string name;
    int num_classes = 4;
    int dim = 16;
    int train_per_class = 500;
    int test_per_class = 250;
    double cluster_std = 0.33;
    std::vector<NoiseCase> noises;
    std::vector<Arm> arms;
    /// When set, every seed also trains this config on the uncorrupted labels.
    std::optional<Config> ceiling;
};

/// Shared training setup of the presets.
Config base_config();

/// CE vs NCE under sym 0.2 / 0.5 / 0.8 and asym 0.4, plus the clean-label ceiling.
Preset table1_desk();
/// NCE and its ablations (CT correction, no L_lab, CE for mixup, identity Aug) at sym 0.5.
Preset ablation_desk();
/// CE vs NCE with symmetric noise drawn over all classes (the true class included).
Preset inclusive_desk();

std::vector<std::string> preset_names();
/// Throws InvalidConfig for unknown names.
Preset preset(std::string_view name);

struct SeedData {
    Dataset train;  // true labels only
    Dataset test;
};

/// Benchmark data for one seed; independent of the noise case and arm.
SeedData seed_data(const Preset& preset, int seed);
/// Corruption seed for a (seed, noise case stream) pair.
std::uint64_t noise_seed(int seed, std::uint32_t stream);

struct Run {
    std::string arm;
    std::string noise;  // "clean" for the ceiling
    int seed = 0;
    double test_accuracy = 0.0;
    double realized_noise = 0.0;
    io::Json final_epoch;
    io::Json trace;
    double seconds = 0.0;
};

struct Summary {
    std::string arm;
    std::string noise;
    std::vector<double> accuracies;  // per seed
    double mean = 0.0;
    double stddev = 0.0;  // population
};

struct Result {
    Preset preset;
    int seeds = 0;
    std::vector<Run> runs;
    std::vector<Summary> summaries;
    double seconds = 0.0;

    /// Throws InvalidConfig when the pair is not part of the result.
    const Summary& summary(std::string_view arm, std::string_view noise) const;
};

/// Runs every (noise, arm, seed) cell, seeds 1..seeds, in parallel over cells.
/// Everything but the timings is deterministic.
Result run(const Preset& preset, int seeds, const std::function<void(const Run&)>& on_run = {});

/// Results document; timings appear only under "metadata".
io::Json to_json(const Result& result);

/// File name used for a run's trace.
std::string trace_name(const Run& run);

}  // namespace nce::bench
