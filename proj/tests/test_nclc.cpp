#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "nce/nclc.hpp"

using namespace nce;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    std::copy(v.begin(), v.end(), out.data());
    return out;
}

// Points on a circle: class c occupies the arc around angle 2*pi*c/C.
Dataset arcs(int classes, int per_class, const std::vector<std::pair<SampleId, Label>>& flips) {
    Matrix x(classes * per_class, 2);
    std::vector<Label> y;
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < per_class; ++i) {
            const double a = 6.283185307179586 * c / classes + 0.01 * (i - per_class / 2);
            x(c * per_class + i, 0) = std::cos(a);
            x(c * per_class + i, 1) = std::sin(a);
            y.push_back(c);
        }
    for (auto [id, l] : flips) y[static_cast<std::size_t>(id)] = l;
    return validate_dataset(x, y, classes);
}

Matrix confident(const Dataset& d, double p) {
    const int c = d.num_classes();
    Matrix out = Matrix::Constant(d.size(), c, (1.0 - p) / (c - 1));
    for (SampleId i = 0; i < d.size(); ++i) out(i, i / (d.size() / c)) = p;
    return out;
}

}  // namespace

TEST_CASE("correction score fixtures") {
    CHECK(correction_score(vec({0.5, 0.5}), {0}) == doctest::Approx(0.31127812445913283).epsilon(1e-12));
    CHECK(correction_score(vec({1, 0}), {0, 0}) == 0.0);
    CHECK(correction_score(vec({1, 0}), {1}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(correction_score(Distribution(vec({0.5, 0.5})), {1}) == doctest::Approx(0.31127812445913283).epsilon(1e-12));
    CHECK_THROWS_AS(correction_score(vec({0.5, 0.5}), {}), Error);
}

TEST_CASE("correction tally and argmax fixtures") {
    const Vector tally = correction_tally(vec({0.6, 0.4}), {0, 1, 1});
    CHECK(tally[0] == doctest::Approx(0.7635472023399721).epsilon(1e-12));
    CHECK(tally[1] == doctest::Approx(1.2083687959932834).epsilon(1e-12));
    CHECK(correct(vec({0.6, 0.4}), {0, 1, 1}) == 1);
    CHECK(correct(vec({0.9, 0.1}), {0, 1}) == 0);
    CHECK(correct(vec({0.2, 0.3, 0.5}), {1, 1, 1}) == 1);
    // ties go to the lowest class
    CHECK(correct(vec({0.5, 0.5}), {1, 0}) == 0);
    // a zero-weight neighborhood still answers with a neighbor's label
    CHECK(correct(vec({0, 1, 0}), {0, 2}) == 0);
    CHECK_THROWS_AS(correct(vec({0.5, 0.5}), {}), Error);
}

TEST_CASE("correction is invariant to neighbor order") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    std::uniform_int_distribution<int> lab(0, 3);
    for (int t = 0; t < 100; ++t) {
        Vector p(4);
        for (int i = 0; i < 4; ++i) p[i] = u(rng);
        p /= p.sum();
        std::vector<Label> ys(9);
        for (auto& y : ys) y = lab(rng);
        auto shuffled = ys;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(correct(p, ys) == correct(p, shuffled));
        CHECK(correction_score(p, ys) == doctest::Approx(correction_score(p, shuffled)).epsilon(1e-14));
    }
}

TEST_CASE("relabel borrows the label of a confident clean neighborhood") {
    const Dataset d = arcs(3, 10, {{4, 2}, {25, 0}});
    const Matrix p = confident(d, 1.0 - 1e-9);
    VerificationReport ver = split_by_score(std::vector<double>(30, 0.0), 0.5);
    ver.clean_ids.erase(std::remove_if(ver.clean_ids.begin(), ver.clean_ids.end(), [](SampleId i) { return i == 4 || i == 25; }),
                        ver.clean_ids.end());
    ver.noisy_ids = {4, 25};
    const auto cor = relabel(d, ver, p, 5, 2e-3, true);
    REQUIRE(cor.relabeled.size() == 2);
    CHECK(cor.relabeled[0] == RelabeledSample{4, 0});
    CHECK(cor.relabeled[1] == RelabeledSample{25, 2});
    CHECK(cor.dropped.empty());
    for (double s : cor.cor_scores) CHECK(s < 2e-3);
    REQUIRE(cor.weight_traces.size() == 2);
    CHECK(cor.weight_traces[0].size() == 5);
    const auto part = make_partition(ver, cor);
    CHECK_NOTHROW(part.check(30));
}

TEST_CASE("unsure candidates are dropped and raising tau_prime only adds relabels") {
    const Dataset d = arcs(4, 12, {{3, 1}, {14, 3}, {30, 0}, {40, 2}});
    Matrix p = confident(d, 0.97);
    p.row(14) = vec({0.3, 0.3, 0.2, 0.2}).transpose();
    VerificationReport ver;
    for (SampleId i = 0; i < 48; ++i) (i == 3 || i == 14 || i == 30 || i == 40 ? ver.noisy_ids : ver.clean_ids).push_back(i);
    ver.scores.assign(48, 0.0);

    std::size_t previous = 0;
    for (double tp : {0.0, 1e-3, 0.01, 0.05, 0.1, 0.3, 0.6, 1.0, 1.1}) {
        const auto cor = relabel(d, ver, p, 6, tp);
        CHECK(cor.relabeled.size() + cor.dropped.size() == 4);
        CHECK(cor.relabeled.size() >= previous);
        previous = cor.relabeled.size();
        for (std::size_t i = 0; i < cor.candidates.size(); ++i) {
            const bool kept = std::any_of(cor.relabeled.begin(), cor.relabeled.end(),
                                          [&](const RelabeledSample& r) { return r.id == cor.candidates[i]; });
            CHECK(kept == (cor.cor_scores[i] < tp));
        }
    }
    CHECK(relabel(d, ver, p, 6, 0.0).relabeled.empty());
    CHECK(previous == 4);
}

TEST_CASE("relabel is invariant to positive feature scaling") {
    const Dataset d = arcs(3, 10, {{2, 1}, {12, 2}});
    Matrix scaled = d.features();
    for (Eigen::Index i = 0; i < scaled.rows(); ++i) scaled.row(i) *= 1.0 + 0.37 * i;
    const Matrix p = confident(d, 0.99);
    VerificationReport ver;
    for (SampleId i = 0; i < 30; ++i) (i == 2 || i == 12 ? ver.noisy_ids : ver.clean_ids).push_back(i);
    ver.scores.assign(30, 0.0);
    const auto a = relabel(d, ver, p, 4, 0.2);
    const auto b = relabel(d, scaled, ver, p, 4, 0.2);
    CHECK(a.relabeled == b.relabeled);
    CHECK(a.dropped == b.dropped);
}

TEST_CASE("relabel edge cases") {
    const Dataset d = arcs(2, 5, {});
    const Matrix p = confident(d, 0.99);
    VerificationReport everything_noisy = split_by_score(std::vector<double>(10, 1.0), 0.5);
    try {
        relabel(d, everything_noisy, p, 3, 0.5);
        FAIL("expected EmptyCleanPool");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EmptyCleanPool);
    }

    const auto none = relabel(d, split_by_score(std::vector<double>(10, 0.0), 0.5), p, 3, 0.5);
    CHECK(none.candidates.empty());
    CHECK(none.relabeled.empty());

    // fewer clean samples than K: every clean sample becomes a neighbor
    VerificationReport few;
    few.clean_ids = {0, 1};
    for (SampleId i = 2; i < 10; ++i) few.noisy_ids.push_back(i);
    few.scores.assign(10, 0.0);
    const auto cor = relabel(d, few, p, 5, 1.1, true);
    CHECK(cor.relabeled.size() == 8);
    for (const auto& w : cor.weight_traces) CHECK(w.size() == 2);
    for (const auto& r : cor.relabeled) CHECK(r.label == 0);
}

TEST_CASE("confidence-threshold comparator") {
    Matrix p(3, 2);
    p << 0.97, 0.03, 0.6, 0.4, 0.05, 0.95;
    VerificationReport ver;
    ver.noisy_ids = {0, 1, 2};
    ver.scores.assign(3, 1.0);
    const auto cor = relabel_by_confidence(ver, p, 0.95);
    REQUIRE(cor.relabeled.size() == 2);
    CHECK(cor.relabeled[0] == RelabeledSample{0, 0});
    CHECK(cor.relabeled[1] == RelabeledSample{2, 1});
    CHECK(cor.dropped == IdList{1});
    CHECK(cor.cor_scores[1] == doctest::Approx(0.4));
}
