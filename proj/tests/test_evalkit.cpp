#include "doctest.h"

#include <random>

#include "nce/datagen.hpp"
#include "nce/evalkit.hpp"

using namespace nce;

namespace {

// 4 samples, the last two truly noisy.
Dataset four() {
    Matrix x = Matrix::Identity(4, 4);
    return validate_dataset(x, {0, 1, 1, 0}, 2, std::vector<Label>{0, 1, 0, 1});
}

}  // namespace

TEST_CASE("perfect identification") {
    const auto m = identification_metrics(split_by_score({0.0, 0.0, 1.0, 1.0}, 0.5), four());
    CHECK(m.clean_as_clean == 2);
    CHECK(m.noisy_as_noisy == 2);
    CHECK(*m.noisy.precision == 1.0);
    CHECK(*m.noisy.recall == 1.0);
    CHECK(*m.noisy.f1 == 1.0);
    CHECK(*m.clean.precision == 1.0);
    CHECK(m.accuracy == 1.0);
}

TEST_CASE("everything called clean") {
    const auto m = identification_metrics(split_by_score({0.0, 0.0, 0.0, 0.0}, 0.5), four());
    CHECK(*m.clean.precision == 0.5);
    CHECK(*m.clean.recall == 1.0);
    CHECK_FALSE(m.noisy.precision.has_value());
    CHECK(*m.noisy.recall == 0.0);
    CHECK(m.accuracy == 0.5);
}

TEST_CASE("identification counts match a brute-force recount") {
    const Dataset clean = make_blobs(3, 100, 3, 0.3, 1);
    NoiseSpec spec;
    spec.ratio = 0.35;
    const Dataset d = inject_noise(clean, spec, 4).dataset;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> scores(300);
    for (auto& s : scores) s = u(rng);
    const auto report = split_by_score(scores, 0.6);
    const auto m = identification_metrics(report, d);
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < 300; ++i) {
        const bool noisy = d.given_labels()[i] != d.true_labels()[i];
        const bool flagged = scores[i] >= 0.6;
        tp += noisy && flagged;
        fp += !noisy && flagged;
        fn += noisy && !flagged;
        tn += !noisy && !flagged;
    }
    CHECK(m.noisy_as_noisy == tp);
    CHECK(m.clean_as_noisy == fp);
    CHECK(m.noisy_as_clean == fn);
    CHECK(m.clean_as_clean == tn);
    CHECK(*m.noisy.precision == doctest::Approx(double(tp) / double(tp + fp)));
    CHECK(*m.noisy.recall == doctest::Approx(double(tp) / double(tp + fn)));
    CHECK(m.per_class_accuracy.size() == 3);
}

TEST_CASE("correction metrics") {
    const Dataset d = four();
    const auto m = correction_metrics({{2, 0}, {3, 0}}, 2, d);
    CHECK(m.relabeled == 2);
    CHECK(m.correct == 1);
    CHECK(*m.accuracy == 0.5);
    CHECK(*m.coverage == 1.0);
    const auto none = correction_metrics({}, 0, d);
    CHECK_FALSE(none.accuracy.has_value());
    CHECK_FALSE(none.coverage.has_value());
}

TEST_CASE("metrics need true labels") {
    const Dataset d = validate_dataset(Matrix(Matrix::Identity(2, 2)), {0, 1}, 2);
    CHECK_THROWS_AS(identification_metrics(split_by_score({0, 0}, 0.5), d), Error);
}

TEST_CASE("accuracy helpers") {
    Matrix p(4, 2);
    p << 0.9, 0.1, 0.5, 0.5, 0.2, 0.8, 0.6, 0.4;
    CHECK(argmax_rows(p) == std::vector<Label>{0, 0, 1, 0});
    CHECK(accuracy(p, {0, 1, 1, 1}) == 0.5);

    const Dataset d = make_blobs(4, 25, 3, 0.3, 2);
    const Model uniform = Model::zeros(3, 0, 4);
    CHECK(test_accuracy(uniform, d) == 0.25);
}

TEST_CASE("epoch evaluator fills the evaluation fields") {
    const Dataset d = four();
    const Model m = Model::zeros(4, 0, 2);
    EpochRecord warm;
    epoch_evaluator(d, &d)(warm, m);
    CHECK(warm.test_accuracy.has_value());
    CHECK_FALSE(warm.identification_precision.has_value());

    EpochRecord rec;
    rec.phase = EpochPhase::Nce;
    Partition p;
    p.clean = {0, 1};
    p.noisy = {2, 3};
    p.relabeled = {{2, 0}};
    p.dropped = {3};
    p.ver_scores = {0, 0, 1, 1};
    p.cor_scores = {0, 1};
    rec.partition = p;
    AlgorithmScope guard;
    epoch_evaluator(d)(rec, m);
    CHECK(*rec.identification_precision == 1.0);
    CHECK(*rec.identification_recall == 1.0);
    CHECK(*rec.correction_accuracy == 1.0);
    CHECK_FALSE(rec.test_accuracy.has_value());
}
