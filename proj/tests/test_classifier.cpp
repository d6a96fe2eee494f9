#include "doctest.h"

#include <random>

#include "nce/classifier.hpp"
#include "nce/datagen.hpp"
#include "oracles.hpp"

using namespace nce;

namespace {

Matrix random_inputs(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix x(rows, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    return x;
}

std::vector<Label> random_labels(std::size_t n, int c, Rng& rng) {
    std::uniform_int_distribution<int> u(0, c - 1);
    std::vector<Label> y(n);
    for (auto& l : y) l = u(rng);
    return y;
}

}  // namespace

TEST_CASE("softmax fixtures") {
    Matrix z(3, 3);
    z << 0, 0, 0, 1000, 0, -1000, std::log(1.0), std::log(2.0), std::log(5.0);
    const Matrix p = softmax_rows(z);
    CHECK(p(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(p(1, 0) == 1.0);
    CHECK(p(1, 2) < 1e-300);
    CHECK(p(2, 2) == doctest::Approx(0.625).epsilon(1e-15));
    CHECK(p.allFinite());
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-15));
    const Matrix lp = log_softmax_rows(z);
    CHECK(lp(1, 2) == doctest::Approx(-2000.0));
    CHECK(lp(2, 0) == doctest::Approx(std::log(0.125)).epsilon(1e-14));
}

TEST_CASE("model shapes and initialization") {
    Rng rng(1);
    const Model m = Model::random(5, 7, 3, rng);
    CHECK(m.parameters().hidden_weight.rows() == 5);
    CHECK(m.parameters().hidden_weight.cols() == 7);
    CHECK(m.parameters().output_weight.rows() == 7);
    CHECK(m.parameters().hidden_weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(5.0));
    CHECK(m.parameters().output_weight.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(7.0));
    const Matrix x = random_inputs(4, 5, rng);
    CHECK(m.embed(x).cols() == 7);
    CHECK(m.embed(x).minCoeff() >= 0.0);
    CHECK(m.predict_proba(x).rows() == 4);
    CHECK_THROWS_AS(m.predict_proba(Matrix(Matrix::Zero(2, 4))), Error);

    const Model linear = Model::random(5, 0, 3, rng);
    CHECK(linear.parameters().hidden_weight.size() == 0);
    CHECK(linear.embed(x) == x);
    CHECK_THROWS_AS(Model::zeros(0, 1, 3), Error);
    CHECK_THROWS_AS(Model::zeros(2, 1, 1), Error);

    Rng a(9), b(9);
    CHECK(Model::random(4, 3, 2, a).parameters() == Model::random(4, 3, 2, b).parameters());
}

TEST_CASE("from_parameters validates shapes") {
    Rng rng(2);
    const Model m = Model::random(3, 4, 2, rng);
    CHECK(Model::from_parameters(m.parameters()).parameters() == m.parameters());
    auto broken = m.parameters();
    broken.output_bias = Matrix::Zero(1, 3);
    CHECK_THROWS_AS(Model::from_parameters(broken), Error);
    broken = m.parameters();
    broken.hidden_bias(0, 0) = std::nan("");
    CHECK_THROWS_AS(Model::from_parameters(broken), Error);
}

TEST_CASE("cross entropy of a zero model is log C") {
    const Model m = Model::zeros(3, 0, 4);
    const Matrix x = Matrix::Ones(5, 3);
    const auto lg = cross_entropy(m, x, {0, 1, 2, 3, 0});
    CHECK(lg.loss == doctest::Approx(std::log(4.0)).epsilon(1e-14));
    CHECK_THROWS_AS(cross_entropy(m, x, {0, 1}), Error);
    CHECK_THROWS_AS(cross_entropy(m, Matrix(0, 3), {}), Error);
}

TEST_CASE("cross entropy gradients match finite differences") {
    Rng rng(4);
    for (int t = 0; t < 10; ++t) {
        const Eigen::Index d = 2 + t % 4, h = t % 3 == 0 ? 0 : 3 + t % 5, c = 2 + t % 4;
        const Model m = Model::random(d, h, c, rng);
        const Matrix x = random_inputs(6, d, rng);
        const auto y = random_labels(6, static_cast<int>(c), rng);
        const auto analytic = cross_entropy(m, x, y).grad;
        const auto numeric = oracle::numeric_gradient(m, [&](const Model& p) { return cross_entropy(p, x, y).loss; });
        CHECK(oracle::gradient_error(analytic, numeric) < 1e-5);
    }
}

TEST_CASE("soft targets gradient matches finite differences") {
    Rng rng(6);
    const Model m = Model::random(4, 5, 3, rng);
    const Matrix x = random_inputs(7, 4, rng);
    Matrix t = Matrix::Random(7, 3).cwiseAbs();
    for (Eigen::Index i = 0; i < 7; ++i) t.row(i) /= t.row(i).sum();
    const auto analytic = soft_cross_entropy(m, x, t).grad;
    const auto numeric = oracle::numeric_gradient(m, [&](const Model& p) { return soft_cross_entropy(p, x, t).loss; });
    CHECK(oracle::gradient_error(analytic, numeric) < 1e-5);
}

TEST_CASE("sgd step follows the momentum recurrence") {
    Rng rng(8);
    Model m = Model::random(2, 0, 2, rng);
    const auto theta0 = m.parameters();
    auto g = theta0.zeros_like();
    g.output_weight.setConstant(0.5);
    g.output_bias.setConstant(-1.0);
    SgdMomentum<double> opt(0.1, 0.9, 0.01);

    opt.step(m, g);
    const Matrix v1 = g.output_weight + 0.01 * theta0.output_weight;
    const Matrix w1 = theta0.output_weight - 0.1 * v1;
    CHECK((m.parameters().output_weight - w1).cwiseAbs().maxCoeff() < 1e-15);

    opt.step(m, g);
    const Matrix v2 = 0.9 * v1 + g.output_weight + 0.01 * w1;
    const Matrix w2 = w1 - 0.1 * v2;
    CHECK((m.parameters().output_weight - w2).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((opt.velocity().output_weight - v2).cwiseAbs().maxCoeff() < 1e-15);

    auto bad = g;
    bad.output_bias(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(opt.step(m, bad), Error);
}

TEST_CASE("full-batch gradient descent lowers a convex loss") {
    Rng rng(10);
    Model m = Model::random(3, 0, 3, rng);
    const Matrix x = random_inputs(40, 3, rng);
    const auto y = random_labels(40, 3, rng);
    SgdMomentum<double> opt(0.1, 0.0, 0.0);
    double previous = cross_entropy(m, x, y).loss;
    for (int i = 0; i < 50; ++i) {
        opt.step(m, cross_entropy(m, x, y).grad);
        const double now = cross_entropy(m, x, y).loss;
        CHECK(now <= previous + 1e-12);
        previous = now;
    }
}

TEST_CASE("warm-up separates well-separated blobs") {
    const BlobModel blobs = make_blob_model(3, 6, 0.2, 11);
    const Dataset train = sample_blobs(blobs, 100, 12);
    const Dataset test = sample_blobs(blobs, 50, 13);
    Rng init(3);
    Model m = Model::random(6, 16, 3, init);
    warmup(m, train, 10, 0.05, 32, 5);
    const Matrix p = m.predict_proba(test.features());
    int hits = 0;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        Eigen::Index best;
        p.row(i).maxCoeff(&best);
        hits += best == test.given_labels()[static_cast<std::size_t>(i)];
    }
    CHECK(hits >= 0.95 * p.rows());
    CHECK_THROWS_AS(warmup(m, train, 0, 0.05, 32, 5), Error);
}

TEST_CASE("warm-up on a single class predicts that class") {
    Rng rng(12);
    const Matrix x = random_inputs(30, 4, rng);
    const Dataset d = validate_dataset(x, std::vector<Label>(30, 1), 3);
    Model m = Model::random(4, 8, 3, rng);
    warmup(m, d, 20, 0.05, 8, 1);
    const Matrix p = m.predict_proba(x);
    CHECK(p.col(1).minCoeff() > 0.9);
}

TEST_CASE("warm-up is deterministic for a seed") {
    const Dataset d = make_blobs(2, 40, 3, 0.5, 2);
    Rng a(1), b(1);
    Model m1 = Model::random(3, 5, 2, a), m2 = Model::random(3, 5, 2, b);
    warmup(m1, d, 3, 0.05, 16, 77);
    warmup(m2, d, 3, 0.05, 16, 77);
    CHECK(m1.parameters() == m2.parameters());
}

TEST_CASE("float instantiation tracks double") {
    Rng rng(14);
    const Model m = Model::random(3, 4, 2, rng);
    auto pf = Parameters<float>{m.parameters().hidden_weight.cast<float>(), m.parameters().hidden_bias.cast<float>(),
                                m.parameters().output_weight.cast<float>(), m.parameters().output_bias.cast<float>()};
    const auto mf = Classifier<float>::from_parameters(pf);
    const Matrix x = random_inputs(5, 3, rng);
    const Eigen::MatrixXf xf = x.cast<float>();
    CHECK((mf.predict_proba(xf).cast<double>() - m.predict_proba(x)).cwiseAbs().maxCoeff() < 1e-6);
}
