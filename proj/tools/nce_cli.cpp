#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "nce/bench.hpp"
#include "nce/datagen.hpp"
#include "nce/evalkit.hpp"
#include "nce/finetune.hpp"
#include "nce/io.hpp"
#include "nce/nclc.hpp"
#include "nce/ncnv.hpp"
#include "nce/simindex.hpp"

namespace fs = std::filesystem;
using namespace nce;

namespace {

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_json(const fs::path& path, const io::Json& doc) { io::write_text(path, doc.dump(2) + "\n"); }

// Warm-up model plus the snapshot a single verification/correction pass works on.
struct Snapshot {
    Model model;
    Matrix predictions;
    Matrix features;
};

Snapshot warm_up(const Dataset& data, const Config& config) {
    Config warm = config;
    warm.T_tr = warm.T_wu;
    Snapshot s{run_pipeline(data, warm).model, {}, {}};
    s.predictions = s.model.predict_proba(data.features());
    s.features = neighbor_features(data, s.model, config.feature_source);
    return s;
}

VerificationReport verify_pass(const Dataset& data, const Config& config, const Snapshot& s) {
    const Index index = build_index(s.features);
    return verify(data, s.predictions, index, config.K, config.tau);
}

struct GenArgs {
    int classes = 4;
    int per_class = 500;
    int dim = 16;
    double std = 0.33;
    std::string noise_type = "sym";
    double noise_ratio = 0.0;
    std::uint64_t seed = 1;
    std::string out;
};

void cmd_gen(const GenArgs& a) {
    const Dataset clean = make_blobs(a.classes, a.per_class, a.dim, a.std, a.seed);
    NoiseSpec spec;
    spec.ratio = a.noise_ratio;
    if (a.noise_type == "asym") {
        spec.type = NoiseType::Asymmetric;
        spec.asym_map = cyclic_map(a.classes);
    }
    const NoiseInjection noisy = inject_noise(clean, spec, derive_seed(a.seed, 1));
    io::write_dataset(a.out, noisy.dataset);
    std::cout << "wrote " << noisy.dataset.size() << " samples, realized noise " << noisy.realized_ratio << "\n";
}

struct PassArgs {
    std::string data, config, out;
};

void cmd_verify(const PassArgs& a) {
    const Dataset data = io::read_dataset(a.data);
    const Config config = io::read_config(a.config);
    const auto report = verify_pass(data, config, warm_up(data, config));
    std::ostringstream csv;
    io::write_verification_csv(csv, report);
    io::write_text(a.out, csv.str());
    std::cout << report.clean_ids.size() << " clean, " << report.noisy_ids.size() << " noisy\n";
}

void cmd_correct(const PassArgs& a) {
    const Dataset data = io::read_dataset(a.data);
    const Config config = io::read_config(a.config);
    const Snapshot s = warm_up(data, config);
    const auto ver = verify_pass(data, config, s);
    const auto cor = config.correction_mode == CorrectionMode::Neighborhood
                         ? relabel(data, s.features, ver, s.predictions, config.K, config.tau_prime)
                         : relabel_by_confidence(ver, s.predictions, config.confidence_threshold);
    std::ostringstream csv;
    io::write_correction_csv(csv, cor);
    io::write_text(a.out, csv.str());
    std::cout << ver.noisy_ids.size() << " noisy, " << cor.relabeled.size() << " relabeled, " << cor.dropped.size()
              << " dropped\n";
}

struct TrainArgs {
    std::string data, config, out, trace;
};

void cmd_train(const TrainArgs& a) {
    const Dataset data = io::read_dataset(a.data);
    const Config config = io::read_config(a.config);
    const auto started = std::chrono::steady_clock::now();
    const PipelineResult result = run_pipeline(data, config, epoch_evaluator(data));
    io::save_model(a.out, result.model);
    if (!a.trace.empty()) {
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        write_json(a.trace, io::trace_to_json(result.epochs, {{"created", utc_now()}, {"seconds", seconds}}));
    }
    const auto& last = result.epochs.back();
    std::cout << "trained " << result.epochs.size() << " epochs; last: " << last.num_clean() << " clean, "
              << last.num_noisy() << " noisy, " << last.num_relabeled() << " relabeled\n";
}

struct EvalArgs {
    std::string data, model, out, config;
};

void cmd_eval(const EvalArgs& a) {
    const Dataset data = io::read_dataset(a.data);
    const Model model = io::load_model(a.model);
    if (model.input_dim() != data.dim()) throw Error(ErrorKind::Shape, "model input dimension does not match the data");
    if (model.num_classes() < data.num_classes()) throw Error(ErrorKind::Shape, "data has more classes than the model");

    const Matrix probs = model.predict_proba(data.features());
    io::Json metrics = {{"format", "nce-metrics"},
                        {"version", 1},
                        {"samples", static_cast<std::size_t>(data.size())},
                        {"test_accuracy", test_accuracy(model, data)},
                        {"given_label_accuracy", accuracy(probs, data.given_labels())},
                        {"identification", nullptr},
                        {"correction", nullptr}};
    if (!a.config.empty() && data.has_true_labels()) {
        const Config config = io::read_config(a.config);
        Snapshot s{model, probs, neighbor_features(data, model, config.feature_source)};
        const auto ver = verify_pass(data, config, s);
        metrics["identification"] = io::to_json(identification_metrics(ver, data));
        if (!ver.clean_ids.empty()) {
            const auto cor = relabel(data, s.features, ver, probs, config.K, config.tau_prime);
            metrics["correction"] = io::to_json(correction_metrics(cor, data));
        }
    }
    write_json(a.out, metrics);
    std::cout << "test accuracy " << metrics["test_accuracy"].get<double>() << "\n";
}

struct BenchArgs {
    std::string preset = "table1-desk";
    int seeds = 3;
    std::string out;
    std::string trace_dir;
};

void cmd_bench(const BenchArgs& a) {
    const bench::Preset preset = bench::preset(a.preset);
    const bench::Result result = bench::run(preset, a.seeds, [](const bench::Run& r) {
        std::fprintf(stderr, "  %-18s %-12s seed %d  acc %.3f  (%.1fs)\n", r.arm.c_str(), r.noise.c_str(), r.seed,
                     r.test_accuracy, r.seconds);
    });
    write_json(a.out, bench::to_json(result));
    if (!a.trace_dir.empty()) {
        fs::create_directories(a.trace_dir);
        for (const auto& r : result.runs) write_json(fs::path(a.trace_dir) / bench::trace_name(r), r.trace);
    }
    std::printf("%-18s %-12s %8s %8s\n", "arm", "noise", "mean", "std");
    for (const auto& s : result.summaries)
        std::printf("%-18s %-12s %8.4f %8.4f\n", s.arm.c_str(), s.noise.c_str(), s.mean, s.stddev);
    std::printf("%zu runs in %.1fs\n", result.runs.size(), result.seconds);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neighborhood collective estimation for learning with noisy labels"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "generate a Gaussian-blob dataset with injected label noise");
    g->add_option("--classes", gen.classes, "number of classes")->check(CLI::Range(2, 1 << 20));
    g->add_option("--per-class", gen.per_class, "samples per class")->check(CLI::PositiveNumber);
    g->add_option("--dim", gen.dim, "feature dimension")->check(CLI::PositiveNumber);
    g->add_option("--std", gen.std, "cluster standard deviation")->check(CLI::NonNegativeNumber);
    g->add_option("--noise-type", gen.noise_type, "sym or asym")->check(CLI::IsMember({"sym", "asym"}));
    g->add_option("--noise-ratio", gen.noise_ratio, "fraction of corrupted labels")->check(CLI::Range(0.0, 1.0));
    g->add_option("--seed", gen.seed, "random seed");
    g->add_option("--out", gen.out, "output CSV")->required();

    PassArgs ver, cor;
    auto* v = app.add_subcommand("verify", "warm up, then run one noise-verification pass");
    v->add_option("--data", ver.data)->required()->check(CLI::ExistingFile);
    v->add_option("--config", ver.config)->required()->check(CLI::ExistingFile);
    v->add_option("--out", ver.out, "report CSV")->required();
    auto* c = app.add_subcommand("correct", "warm up, then run one verification and correction pass");
    c->add_option("--data", cor.data)->required()->check(CLI::ExistingFile);
    c->add_option("--config", cor.config)->required()->check(CLI::ExistingFile);
    c->add_option("--out", cor.out, "report CSV")->required();

    TrainArgs train;
    auto* t = app.add_subcommand("train", "full training run");
    t->add_option("--data", train.data)->required()->check(CLI::ExistingFile);
    t->add_option("--config", train.config)->required()->check(CLI::ExistingFile);
    t->add_option("--out", train.out, "model checkpoint")->required();
    t->add_option("--trace", train.trace, "per-epoch trace JSON");

    EvalArgs eval;
    auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
    e->add_option("--data", eval.data)->required()->check(CLI::ExistingFile);
    e->add_option("--model", eval.model)->required()->check(CLI::ExistingFile);
    e->add_option("--out", eval.out, "metrics JSON")->required();
    e->add_option("--config", eval.config, "also score noise identification and correction with this config")
        ->check(CLI::ExistingFile);

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "run a benchmark preset");
    b->add_option("--preset", bench.preset)->check(CLI::IsMember(bench::preset_names()));
    b->add_option("--seeds", bench.seeds)->check(CLI::PositiveNumber);
    b->add_option("--out", bench.out, "results JSON")->required();
    b->add_option("--trace-dir", bench.trace_dir, "directory for per-run traces");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*g) cmd_gen(gen);
        else if (*v) cmd_verify(ver);
        else if (*c) cmd_correct(cor);
        else if (*t) cmd_train(train);
        else if (*e) cmd_eval(eval);
        else if (*b) cmd_bench(bench);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
