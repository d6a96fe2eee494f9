#include "doctest.h"

#include <map>

#include "nce/datagen.hpp"

using namespace nce;

TEST_CASE("derive_seed separates streams") {
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    CHECK(derive_seed(std::uint64_t{1} << 32, 0) != derive_seed(0, 0));
}

TEST_CASE("blob model and samples") {
    const BlobModel m = make_blob_model(4, 16, 0.3, 1);
    CHECK(m.means.rows() == 4);
    for (Eigen::Index i = 0; i < 4; ++i) {
        CHECK(m.means.row(i).norm() == doctest::Approx(1.0).epsilon(1e-12));
        for (Eigen::Index j = 0; j < i; ++j) CHECK(std::abs(m.means.row(i).dot(m.means.row(j))) < 1e-12);
    }
    const Dataset d = sample_blobs(m, 50, 2);
    CHECK(d.size() == 200);
    CHECK(d.num_classes() == 4);
    CHECK(d.given_labels() == d.true_labels());
    for (SampleId i = 0; i < d.size(); ++i) CHECK(d.given_labels()[static_cast<std::size_t>(i)] == i / 50);
    // every class centroid sits near its mean
    for (Eigen::Index c = 0; c < 4; ++c)
        CHECK((d.features().middleRows(c * 50, 50).colwise().mean() - m.means.row(c)).norm() < 0.3);

    CHECK(make_blobs(3, 10, 4, 0.5, 7) == make_blobs(3, 10, 4, 0.5, 7));
    CHECK_FALSE(make_blobs(3, 10, 4, 0.5, 7) == make_blobs(3, 10, 4, 0.5, 8));
    CHECK(make_blob_model(10, 3, 0.1, 1).means.rows() == 10);
    CHECK_THROWS_AS(make_blobs(1, 10, 4, 0.5, 7), Error);
    CHECK_THROWS_AS(make_blobs(3, 0, 4, 0.5, 7), Error);
}

TEST_CASE("symmetric noise flips exactly round(ratio * N) labels to other classes") {
    const Dataset clean = make_blobs(4, 250, 8, 0.3, 3);
    for (double ratio : {0.0, 0.2, 0.5, 0.8}) {
        NoiseSpec spec;
        spec.ratio = ratio;
        const auto inj = inject_noise(clean, spec, 11);
        const auto want = static_cast<std::size_t>(std::llround(ratio * 1000));
        CHECK(inj.corrupted.size() == want);
        CHECK(inj.realized_ratio == doctest::Approx(static_cast<double>(want) / 1000));
        std::size_t changed = 0;
        for (std::size_t i = 0; i < 1000; ++i) changed += inj.dataset.given_labels()[i] != clean.given_labels()[i];
        CHECK(changed == want);
        CHECK(inj.dataset.features() == clean.features());
        CHECK(inj.dataset.true_labels() == clean.true_labels());
        CHECK(std::is_sorted(inj.corrupted.begin(), inj.corrupted.end()));
        CHECK(inject_noise(clean, spec, 11).dataset == inj.dataset);
    }
}

TEST_CASE("symmetric targets are spread over the other classes") {
    const Dataset clean = make_blobs(4, 2500, 2, 0.3, 3);
    NoiseSpec spec;
    spec.ratio = 0.6;
    const auto inj = inject_noise(clean, spec, 5);
    std::map<std::pair<int, int>, int> moves;
    for (auto id : inj.corrupted) {
        const auto i = static_cast<std::size_t>(id);
        ++moves[{clean.given_labels()[i], inj.dataset.given_labels()[i]}];
    }
    // 6000 flips over 12 (from, to) pairs: 500 expected each
    CHECK(moves.size() == 12);
    for (const auto& [pair, n] : moves) CHECK(std::abs(n - 500) < 100);
}

TEST_CASE("inclusive symmetric noise may keep the label") {
    const Dataset clean = make_blobs(4, 500, 4, 0.3, 3);
    NoiseSpec spec;
    spec.ratio = 0.8;
    spec.inclusive = true;
    const auto inj = inject_noise(clean, spec, 5);
    CHECK(inj.realized_ratio == doctest::Approx(0.6).epsilon(0.05));
    CHECK(inj.corrupted.size() == static_cast<std::size_t>(std::llround(inj.realized_ratio * 2000)));
}

TEST_CASE("asymmetric noise follows the map per class") {
    const Dataset clean = make_blobs(4, 100, 4, 0.3, 9);
    NoiseSpec spec;
    spec.type = NoiseType::Asymmetric;
    spec.ratio = 0.4;
    spec.asym_map = cyclic_map(4);
    CHECK(*spec.asym_map == std::vector<Label>{1, 2, 3, 0});
    const auto inj = inject_noise(clean, spec, 2);
    std::vector<int> flipped(4, 0);
    for (auto id : inj.corrupted) {
        const auto i = static_cast<std::size_t>(id);
        const Label from = clean.given_labels()[i];
        CHECK(inj.dataset.given_labels()[i] == (from + 1) % 4);
        ++flipped[static_cast<std::size_t>(from)];
    }
    CHECK(flipped == std::vector<int>{40, 40, 40, 40});

    NoiseSpec unmapped = spec;
    unmapped.asym_map.reset();
    CHECK_THROWS_AS(inject_noise(clean, unmapped, 2), Error);
    NoiseSpec bad = spec;
    bad.ratio = 1.0;
    CHECK_THROWS_AS(inject_noise(clean, bad, 2), Error);
}
