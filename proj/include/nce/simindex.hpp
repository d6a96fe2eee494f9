#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "nce/parallel.hpp"
#include "nce/types.hpp"

namespace nce {

inline constexpr double kDegenerateNorm = 1e-12;

/// Cosine similarity, clamped into [-1, 1].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename DerivedA::Scalar;
    if (a.size() != b.size()) throw Error(ErrorKind::Shape, "cosine_similarity: dimension mismatch");
    const Scalar na = a.norm();
    const Scalar nb = b.norm();
    if (na < Scalar(kDegenerateNorm) || nb < Scalar(kDegenerateNorm))
        throw Error(ErrorKind::DegenerateVector, "cosine_similarity: zero-norm vector");
    const Scalar s = a.dot(b) / (na * nb);
    return std::clamp(s, Scalar(-1), Scalar(1));
}

/// Exact cosine KNN over a fixed pool of rows.
///
/// Every row of the source matrix is normalized once at build time so that
/// queries can come from anywhere in the dataset (NCLC queries noisy rows
/// against a clean-only pool). Pool vectors are kept column-major so a scan is
/// a sequence of axpy updates: each similarity accumulates its d products in
/// the same order for every pool row, which keeps exact duplicates exactly tied.
template <typename Scalar>
class SimilarityIndex {
public:
    using Mat = typename Types<Scalar>::Matrix;
    using Vec = typename Types<Scalar>::Vector;

    SimilarityIndex() = default;

    template <typename Derived>
    SimilarityIndex(const Eigen::MatrixBase<Derived>& features, const std::optional<IdList>& subset) {
        const Eigen::Index n = features.rows();
        normalized_.resize(n, features.cols());
        norms_.resize(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            const Scalar norm = features.row(r).template cast<Scalar>().norm();
            norms_[r] = norm;
            if (norm < Scalar(kDegenerateNorm)) {
                normalized_.row(r).setZero();
            } else {
                normalized_.row(r) = features.row(r).template cast<Scalar>() / norm;
            }
        }

        IdList members;
        if (subset) {
            members = *subset;
            for (auto id : members)
                if (id < 0 || id >= n) throw Error(ErrorKind::Shape, "build_index: subset index " + std::to_string(id) + " out of range");
        } else {
            members.resize(static_cast<std::size_t>(n));
            std::iota(members.begin(), members.end(), SampleId{0});
        }
        for (auto id : members)
            if (!is_degenerate(id)) pool_ids_.push_back(id);
        std::sort(pool_ids_.begin(), pool_ids_.end());
        pool_ids_.erase(std::unique(pool_ids_.begin(), pool_ids_.end()), pool_ids_.end());
        if (pool_ids_.empty()) throw Error(ErrorKind::EmptyPool, "build_index: pool has no non-degenerate vectors");

        pool_.resize(static_cast<Eigen::Index>(pool_ids_.size()), features.cols());
        for (std::size_t i = 0; i < pool_ids_.size(); ++i)
            pool_.row(static_cast<Eigen::Index>(i)) = normalized_.row(pool_ids_[i]);
    }

    Eigen::Index dim() const noexcept { return normalized_.cols(); }
    SampleId num_samples() const noexcept { return normalized_.rows(); }
    std::size_t pool_size() const noexcept { return pool_ids_.size(); }
    /// Pool row -> dataset sample index, ascending.
    const IdList& pool_ids() const noexcept { return pool_ids_; }
    const Mat& pool_vectors() const noexcept { return pool_; }
    const Vec& norms() const noexcept { return norms_; }
    bool is_degenerate(SampleId id) const { return norms_[id] < Scalar(kDegenerateNorm); }

    NeighborSet query(SampleId query_id, int k, bool exclude_self) const {
        if (query_id < 0 || query_id >= num_samples())
            throw Error(ErrorKind::Shape, "knn: query index " + std::to_string(query_id) + " out of range");
        if (is_degenerate(query_id))
            throw Error(ErrorKind::DegenerateVector, "knn: sample " + std::to_string(query_id) + " has a zero-norm feature vector");
        return scan(normalized_.row(query_id).transpose(), k, exclude_self ? query_id : SampleId{-1});
    }

    template <typename Derived>
    NeighborSet query_vector(const Eigen::MatrixBase<Derived>& q, int k) const {
        if (q.size() != dim()) throw Error(ErrorKind::Shape, "knn: query dimension mismatch");
        const Scalar norm = q.template cast<Scalar>().norm();
        if (norm < Scalar(kDegenerateNorm)) throw Error(ErrorKind::DegenerateVector, "knn: zero-norm query");
        return scan(Vec(q.template cast<Scalar>() / norm), k, SampleId{-1});
    }

private:
    NeighborSet scan(const Vec& unit_query, int k, SampleId excluded) const {
        if (k < 1) throw Error(ErrorKind::Shape, "knn: K must be >= 1");
        const Eigen::Index n = pool_.rows();
        Vec sims = Vec::Zero(n);
        for (Eigen::Index c = 0; c < pool_.cols(); ++c) sims.noalias() += unit_query[c] * pool_.col(c);

        // pool rows are in ascending sample order, so row order breaks ties by sample index
        auto closer = [&sims](Eigen::Index a, Eigen::Index b) {
            return sims[a] > sims[b] || (sims[a] == sims[b] && a < b);
        };
        // bounded heap whose front is the worst of the current best `k`
        const auto cap = static_cast<std::size_t>(k);
        std::vector<Eigen::Index> order;
        order.reserve(cap + 1);
        for (Eigen::Index r = 0; r < n; ++r) {
            if (pool_ids_[r] == excluded) continue;
            if (order.size() < cap) {
                order.push_back(r);
                std::push_heap(order.begin(), order.end(), closer);
            } else if (closer(r, order.front())) {
                std::pop_heap(order.begin(), order.end(), closer);
                order.back() = r;
                std::push_heap(order.begin(), order.end(), closer);
            }
        }
        if (order.empty()) throw Error(ErrorKind::EmptyPool, "knn: no candidates left in the pool");
        std::sort(order.begin(), order.end(), closer);
        const std::size_t take = order.size();

        NeighborSet out;
        out.indices.reserve(take);
        out.similarities.reserve(take);
        for (auto r : order) {
            out.indices.push_back(pool_ids_[r]);
            out.similarities.push_back(static_cast<double>(std::clamp(sims[r], Scalar(-1), Scalar(1))));
        }
        return out;
    }

    Mat normalized_;
    Vec norms_;
    IdList pool_ids_;
    Mat pool_;
};

using Index = SimilarityIndex<double>;

template <typename Derived>
SimilarityIndex<typename Derived::Scalar> build_index(const Eigen::MatrixBase<Derived>& features,
                                                       const std::optional<IdList>& subset = std::nullopt) {
    return SimilarityIndex<typename Derived::Scalar>(features, subset);
}

inline Index build_index(const Dataset& dataset, const std::optional<IdList>& subset = std::nullopt) {
    return Index(dataset.features(), subset);
}

template <typename Scalar>
NeighborSet knn(const SimilarityIndex<Scalar>& index, SampleId query_id, int k, bool exclude_self) {
    return index.query(query_id, k, exclude_self);
}

/// One query per id; result[i] answers queries[i]. Parallel over queries.
template <typename Scalar>
std::vector<NeighborSet> knn_batch(const SimilarityIndex<Scalar>& index, const IdList& queries, int k, bool exclude_self) {
    std::vector<NeighborSet> out(queries.size());
    parallel_for(queries.size(), [&](std::size_t i) { out[i] = index.query(queries[i], k, exclude_self); });
    return out;
}

}  // namespace nce
