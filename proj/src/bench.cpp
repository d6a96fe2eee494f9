#include "nce/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iterator>
#include <mutex>
#include <numeric>
#include <random>

#include "nce/evalkit.hpp"
#include "nce/finetune.hpp"
#include "nce/parallel.hpp"

namespace nce::bench {

namespace {

std::uint64_t derive(int seed, std::uint32_t stream) { return derive_seed(static_cast<std::uint64_t>(seed), stream); }

NoiseCase symmetric(double ratio, std::uint32_t stream, bool inclusive = false) {
    NoiseSpec spec;
    spec.ratio = ratio;
    spec.inclusive = inclusive;
    std::string name = "sym-" + io::format_double(ratio);
    if (inclusive) name += "-incl";
    return {name, spec, stream};
}

NoiseCase asymmetric(double ratio, int num_classes, std::uint32_t stream) {
    NoiseSpec spec;
    spec.type = NoiseType::Asymmetric;
    spec.ratio = ratio;
    spec.asym_map = cyclic_map(num_classes);
    return {"asym-" + io::format_double(ratio), spec, stream};
}

Config cross_entropy_only(Config config) {
    config.T_wu = config.T_tr;
    return config;
}

struct Cell {
    std::size_t noise = 0;  // index into preset.noises, or kCeiling
    std::size_t arm = 0;
    int seed = 0;
};

constexpr std::size_t kCeiling = static_cast<std::size_t>(-1);

}  // namespace

Config base_config() {
    Config c;
    c.hidden_dim = 256;
    c.T_wu = 10;
    c.T_tr = 200;
    c.eta = 0.02;
    c.B = 128;
    c.B_prime = 128;
    return c;
}

Preset table1_desk() {
    Preset p;
    p.name = "table1-desk";
    p.noises = {symmetric(0.2, 0), symmetric(0.5, 1), symmetric(0.8, 2), asymmetric(0.4, p.num_classes, 3)};
    p.arms = {{"ce", cross_entropy_only(base_config())}, {"nce", base_config()}};
    p.ceiling = cross_entropy_only(base_config());
    return p;
}

Preset ablation_desk() {
    Preset p;
    p.name = "ablation-desk";
    p.noises = {symmetric(0.5, 1)};  // same corruption as table1-desk's sym-0.5
    const Config full = base_config();

    Config ct = full;
    ct.correction_mode = CorrectionMode::ConfidenceThreshold;
    ct.confidence_threshold = 0.95;
    Config no_lab = full;
    no_lab.use_lab_loss = false;
    Config no_mix = full;
    no_mix.use_mixup = false;
    Config identity_aug = full;
    identity_aug.perturbation = PerturbationPolicy::identity();

    p.arms = {{"nce", full},
              {"nce-ct", ct},
              {"nce-no-lab", no_lab},
              {"nce-ce-for-mix", no_mix},
              {"nce-identity-aug", identity_aug}};
    return p;
}

Preset inclusive_desk() {
    Preset p;
    p.name = "inclusive-desk";
    p.noises = {symmetric(0.5, 4, true), symmetric(0.8, 5, true)};
    p.arms = {{"ce", cross_entropy_only(base_config())}, {"nce", base_config()}};
    return p;
}

std::vector<std::string> preset_names() { return {"table1-desk", "ablation-desk", "inclusive-desk"}; }

Preset preset(std::string_view name) {
    if (name == "table1-desk") return table1_desk();
    if (name == "ablation-desk") return ablation_desk();
    if (name == "inclusive-desk") return inclusive_desk();
    throw Error(ErrorKind::InvalidConfig, "unknown bench preset '" + std::string(name) + "'");
}

SeedData seed_data(const Preset& preset, int seed) {
    const BlobModel blobs = make_blob_model(preset.num_classes, preset.dim, preset.cluster_std, derive(seed, 1));
    return {sample_blobs(blobs, preset.train_per_class, derive(seed, 2)),
            sample_blobs(blobs, preset.test_per_class, derive(seed, 3))};
}

std::uint64_t noise_seed(int seed, std::uint32_t stream) { return derive(seed, 100 + stream); }

const Summary& Result::summary(std::string_view arm, std::string_view noise) const {
    for (const auto& s : summaries)
        if (s.arm == arm && s.noise == noise) return s;
    throw Error(ErrorKind::InvalidConfig, "no bench summary for " + std::string(arm) + " / " + std::string(noise));
}

Result run(const Preset& preset, int seeds, const std::function<void(const Run&)>& on_run) {
    if (seeds < 1) throw Error(ErrorKind::InvalidConfig, "bench: need at least one seed");
    for (const auto& arm : preset.arms) arm.config.check();

    std::vector<Cell> cells;
    for (std::size_t n = 0; n < preset.noises.size(); ++n)
        for (std::size_t a = 0; a < preset.arms.size(); ++a)
            for (int s = 1; s <= seeds; ++s) cells.push_back({n, a, s});
    if (preset.ceiling)
        for (int s = 1; s <= seeds; ++s) cells.push_back({kCeiling, 0, s});

    const auto started = std::chrono::steady_clock::now();
    std::vector<Run> runs(cells.size());
    std::mutex report;
    parallel_for(cells.size(), [&](std::size_t i) {
        const Cell& cell = cells[i];
        const auto t0 = std::chrono::steady_clock::now();
        const SeedData data = seed_data(preset, cell.seed);

        Run& out = runs[i];
        out.seed = cell.seed;
        Config config;
        Dataset train = data.train;
        if (cell.noise == kCeiling) {
            out.arm = "ceiling";
            out.noise = "clean";
            config = *preset.ceiling;
        } else {
            out.arm = preset.arms[cell.arm].name;
            out.noise = preset.noises[cell.noise].name;
            config = preset.arms[cell.arm].config;
            NoiseInjection injected = inject_noise(data.train, preset.noises[cell.noise].spec, noise_seed(cell.seed, preset.noises[cell.noise].stream));
            out.realized_noise = injected.realized_ratio;
            train = std::move(injected.dataset);
        }
        config.seed = static_cast<std::uint64_t>(cell.seed);

        PipelineResult result = run_pipeline(train, config, epoch_evaluator(train, &data.test));
        out.test_accuracy = *result.epochs.back().test_accuracy;
        out.final_epoch = io::to_json(result.epochs.back());
        out.trace = io::trace_to_json(result.epochs, {{"preset", preset.name}, {"arm", out.arm}, {"noise", out.noise}, {"seed", out.seed}});
        out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (on_run) {
            std::lock_guard<std::mutex> lock(report);
            on_run(out);
        }
    });

    Result result;
    result.preset = preset;
    result.seeds = seeds;
    result.runs = std::move(runs);
    for (const auto& r : result.runs) {
        auto it = std::find_if(result.summaries.begin(), result.summaries.end(),
                               [&](const Summary& s) { return s.arm == r.arm && s.noise == r.noise; });
        if (it == result.summaries.end()) {
            result.summaries.push_back({r.arm, r.noise, {}, 0.0, 0.0});
            it = std::prev(result.summaries.end());
        }
        it->accuracies.push_back(r.test_accuracy);
    }
    for (auto& s : result.summaries) {
        const double n = static_cast<double>(s.accuracies.size());
        s.mean = std::accumulate(s.accuracies.begin(), s.accuracies.end(), 0.0) / n;
        double var = 0.0;
        for (double a : s.accuracies) var += (a - s.mean) * (a - s.mean);
        s.stddev = std::sqrt(var / n);
    }
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

io::Json to_json(const Result& result) {
    const Preset& p = result.preset;
    io::Json noises = io::Json::array();
    for (const auto& n : p.noises)
        noises.push_back({{"name", n.name},
                          {"type", n.spec.type == NoiseType::Symmetric ? "symmetric" : "asymmetric"},
                          {"ratio", n.spec.ratio},
                          {"inclusive", n.spec.inclusive},
                          {"stream", n.stream}});
    io::Json arms = io::Json::array();
    for (const auto& a : p.arms) arms.push_back({{"name", a.name}, {"config", io::config_to_json(a.config)}});

    io::Json runs = io::Json::array();
    io::Json timings = io::Json::array();
    for (const auto& r : result.runs) {
        runs.push_back({{"arm", r.arm},
                        {"noise", r.noise},
                        {"seed", r.seed},
                        {"test_accuracy", r.test_accuracy},
                        {"realized_noise", r.realized_noise},
                        {"final_epoch", r.final_epoch}});
        timings.push_back({{"arm", r.arm}, {"noise", r.noise}, {"seed", r.seed}, {"seconds", r.seconds}});
    }
    io::Json summaries = io::Json::array();
    for (const auto& s : result.summaries)
        summaries.push_back({{"arm", s.arm}, {"noise", s.noise}, {"accuracies", s.accuracies}, {"mean", s.mean}, {"stddev", s.stddev}});

    return {{"format", "nce-bench"},
            {"version", 1},
            {"preset", p.name},
            {"seeds", result.seeds},
            {"data",
             {{"classes", p.num_classes},
              {"dim", p.dim},
              {"train_per_class", p.train_per_class},
              {"test_per_class", p.test_per_class},
              {"cluster_std", p.cluster_std}}},
            {"noises", std::move(noises)},
            {"arms", std::move(arms)},
            {"ceiling", p.ceiling ? io::config_to_json(*p.ceiling) : io::Json(nullptr)},
            {"summaries", std::move(summaries)},
            {"runs", std::move(runs)},
            {"metadata", {{"seconds", result.seconds}, {"threads", thread_count()}, {"runs", std::move(timings)}}}};
}

std::string trace_name(const Run& run) {
    return run.arm + "_" + run.noise + "_seed" + std::to_string(run.seed) + ".json";
}

}  // namespace nce::bench
