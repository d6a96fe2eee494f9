#include "doctest.h"

#include <cstdlib>
#include <numeric>
#include <random>

#include "nce/simindex.hpp"
#include "oracles.hpp"

using namespace nce;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> r) {
    Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& row : r) {
        Eigen::Index j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

std::vector<long> ids(const NeighborSet& s) { return {s.indices.begin(), s.indices.end()}; }

// Random features with a share of exact duplicates and zero rows.
Matrix tricky_features(int n, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    Matrix x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = g(rng);
    for (int i = 1; i < n; ++i) {
        const double u = coin(rng);
        if (u < 0.15) x.row(i) = x.row(pick(rng) % i);
        else if (u < 0.2) x.row(i).setZero();
    }
    return x;
}

}  // namespace

TEST_CASE("cosine similarity fixtures") {
    CHECK(cosine_similarity(Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 0)) == 1.0);
    CHECK(cosine_similarity(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)) == 0.0);
    CHECK(cosine_similarity(Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 2)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(cosine_similarity(Eigen::Vector2d(1, 1), Eigen::Vector2d(2, 2)) <= 1.0);
    CHECK_THROWS_AS(cosine_similarity(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0)), Error);
    CHECK_THROWS_AS(cosine_similarity(Vector(Eigen::Vector2d(1, 0)), Vector(Eigen::Vector3d(1, 0, 0))), Error);
}

TEST_CASE("build_index over all rows or a subset") {
    const Matrix x = Matrix::Random(5, 3);
    const auto full = build_index(x);
    CHECK(full.pool_size() == 5);
    const auto sub = build_index(x, IdList{1, 3});
    REQUIRE(sub.pool_size() == 2);
    CHECK(sub.pool_ids()[0] == 1);
    CHECK(sub.pool_ids()[1] == 3);
    for (Eigen::Index r = 0; r < sub.pool_vectors().rows(); ++r)
        CHECK(std::abs(sub.pool_vectors().row(r).norm() - 1.0) < 1e-9);
    CHECK_THROWS_AS(build_index(x, IdList{}), Error);
    CHECK_THROWS_AS(build_index(x, IdList{7}), Error);
    CHECK_THROWS_AS(build_index(Matrix(Matrix::Zero(3, 2))), Error);
}

TEST_CASE("degenerate rows are flagged and never returned") {
    Matrix x = rows({{1, 0}, {0, 0}, {0.5, 0.1}, {-1, 0}, {0, 1}});
    const auto index = build_index(x);
    CHECK(index.is_degenerate(1));
    CHECK_FALSE(index.is_degenerate(0));
    const auto all = knn(index, 0, 10, true);
    CHECK(all.size() == 3);
    for (auto id : all.indices) CHECK(id != 1);
    try {
        knn(index, 1, 2, true);
        FAIL("degenerate query must be rejected");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateVector);
    }
}

TEST_CASE("knn fixtures") {
    const Matrix pool = rows({{1, 0.01}, {0, 1}, {-1, 0}});
    const auto index = build_index(pool);
    const auto best = index.query_vector(Eigen::Vector2d(1, 0), 1);
    REQUIRE(best.size() == 1);
    CHECK(best.indices[0] == 0);

    const Matrix x = rows({{1, 0}, {1, 0.01}, {0, 1}});
    const auto self = knn(build_index(x), 0, 1, true);
    CHECK(self.indices == IdList{1});
    const auto with_self = knn(build_index(x), 0, 1, false);
    CHECK(with_self.indices == IdList{0});
}

TEST_CASE("knn returns the whole pool when K exceeds it") {
    const Matrix x = Matrix::Random(4, 3);
    const auto n = knn(build_index(x), 2, 25, true);
    CHECK(n.size() == 3);
    CHECK_THROWS_AS(knn(build_index(x, IdList{2}), 2, 3, true), Error);
    CHECK_THROWS_AS(knn(build_index(x), 0, 0, true), Error);
}

TEST_CASE("exact duplicates tie and resolve by ascending sample index") {
    Matrix x = rows({{1, 2}, {3, 1}, {1, 2}, {2, 4}, {1, 2.0001}});
    // rows 2 and 3 point exactly along row 0 (power-of-two scaling keeps the unit vectors equal)
    const auto q = knn(build_index(x), 0, 3, true);
    CHECK(q.indices[0] == 2);
    CHECK(q.indices[1] == 3);
    CHECK(q.similarities[0] == q.similarities[1]);
}

TEST_CASE("knn matches the exhaustive oracle on 50x8 pools") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        Matrix x(50, 8);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
        const auto index = build_index(x);
        std::vector<long> pool(50);
        std::iota(pool.begin(), pool.end(), 0L);
        for (long q = 0; q < 50; ++q) CHECK(ids(knn(index, q, 5, true)) == oracle::knn(x, pool, q, 5, true));
    }
}

TEST_CASE("knn exactness with ties, zeros and subsets") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> nd(2, 120), dd(1, 12), kd(1, 25);
    for (int t = 0; t < 40; ++t) {
        const int n = nd(rng), d = dd(rng), k = kd(rng);
        const Matrix x = tricky_features(n, d, rng);
        std::vector<long> pool;
        IdList subset;
        for (long i = 0; i < n; ++i)
            if (t % 2 == 0 || i % 3 != 0) {
                pool.push_back(i);
                subset.push_back(i);
            }
        bool any = false;
        for (long id : pool) any |= x.row(id).norm() >= 1e-12;
        if (!any) continue;
        const auto index = build_index(x, subset);
        for (long q = 0; q < n; ++q) {
            if (x.row(q).norm() < 1e-12) continue;
            const bool exclude = q % 2 == 0;
            const auto want = oracle::knn(x, pool, q, k, exclude);
            if (want.empty()) continue;
            const auto got = knn(index, q, k, exclude);
            CHECK(ids(got) == want);
            for (std::size_t i = 1; i < got.size(); ++i) CHECK(got.similarities[i - 1] >= got.similarities[i]);
        }
    }
}

TEST_CASE("knn is invariant under positive rescaling of rows") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> scale(1e-3, 10.0);
    for (int t = 0; t < 10; ++t) {
        Matrix x = Matrix::Random(60, 6);
        x.row(7) = x.row(3);  // keep a tie in play
        Matrix y = x;
        for (Eigen::Index i = 0; i < y.rows(); ++i)
            if (i != 7 && i != 3) y.row(i) *= scale(rng);
        const auto a = build_index(x), b = build_index(y);
        for (SampleId q = 0; q < 60; ++q) CHECK(knn(a, q, 8, true).indices == knn(b, q, 8, true).indices);
    }
}

TEST_CASE("knn_batch is identical across worker counts") {
    std::mt19937_64 rng(29);
    const Matrix x = tricky_features(300, 10, rng);
    const auto index = build_index(x);
    IdList queries;
    for (SampleId i = 0; i < 300; ++i)
        if (!index.is_degenerate(i)) queries.push_back(i);

    auto run = [&](const char* threads) {
        setenv("NCE_THREADS", threads, 1);
        auto out = knn_batch(index, queries, 20, true);
        unsetenv("NCE_THREADS");
        return out;
    };
    const auto one = run("1");
    const auto four = run("4");
    REQUIRE(one.size() == four.size());
    for (std::size_t i = 0; i < one.size(); ++i) {
        CHECK(one[i].indices == four[i].indices);
        CHECK(one[i].similarities == four[i].similarities);
        CHECK(one[i].indices == knn(index, queries[i], 20, true).indices);
    }
}

TEST_CASE("single-precision index agrees with the oracle on well-separated data") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix x(40, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    const Eigen::MatrixXf xf = x.cast<float>();
    const auto index = build_index(xf);
    std::vector<long> pool(40);
    std::iota(pool.begin(), pool.end(), 0L);
    int agree = 0;
    for (long q = 0; q < 40; ++q) agree += ids(knn(index, q, 3, true)) == oracle::knn(x, pool, q, 3, true);
    CHECK(agree >= 38);
}
