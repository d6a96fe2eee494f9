#pragma once

#include <cmath>

#include "nce/types.hpp"

namespace nce {

/// KL(p || q) in bits. Zero-mass terms of p contribute nothing.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar kl(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q) {
    using Scalar = typename DerivedP::Scalar;
    if (p.size() != q.size()) throw Error(ErrorKind::Shape, "kl: distributions differ in dimension");
    Scalar total(0);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const Scalar pi = p.coeff(i);
        if (pi <= Scalar(0)) continue;
        const Scalar qi = q.coeff(i);
        if (qi <= Scalar(0)) throw Error(ErrorKind::InfiniteDivergence, "kl: p has mass where q has none");
        total += pi * std::log2(pi / qi);
    }
    return total;
}

template <typename Scalar>
Scalar kl(const LabelDistribution<Scalar>& p, const LabelDistribution<Scalar>& q) {
    return kl(p.probs(), q.probs());
}

/// Jensen-Shannon divergence in bits, so the value lies in [0, 1].
///
/// Each KL term is evaluated against the shared midpoint m = (p + q) / 2, which
/// is positive wherever p or q is, so the infinite branch of kl() is unreachable.
/// The two orders of (p, q) produce the same midpoint and the same two terms, and
/// the sum is taken as 0.5 * (a + b) with a, b sorted so js(p, q) == js(q, p) bitwise.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar js(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q) {
    using Scalar = typename DerivedP::Scalar;
    if (p.size() != q.size()) throw Error(ErrorKind::Shape, "js: distributions differ in dimension");
    Scalar a(0), b(0);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const Scalar pi = p.coeff(i);
        const Scalar qi = q.coeff(i);
        const Scalar mi = (pi + qi) / Scalar(2);
        if (pi > Scalar(0)) a += pi * std::log2(pi / mi);
        if (qi > Scalar(0)) b += qi * std::log2(qi / mi);
    }
    if (b < a) std::swap(a, b);
    const Scalar value = (a + b) / Scalar(2);
    // round-off can leave tiny excursions past the bounds
    if (value < Scalar(0)) return Scalar(0);
    if (value > Scalar(1)) return Scalar(1);
    return value;
}

template <typename Scalar>
Scalar js(const LabelDistribution<Scalar>& p, const LabelDistribution<Scalar>& q) {
    return js(p.probs(), q.probs());
}

/// js(one_hot(label), q) without materializing the one-hot vector.
template <typename Derived>
typename Derived::Scalar js_one_hot(Label label, const Eigen::MatrixBase<Derived>& q) {
    using Scalar = typename Derived::Scalar;
    if (label < 0 || label >= q.size()) throw Error(ErrorKind::InvalidLabel, "js_one_hot: label out of range");
    typename Types<Scalar>::Vector p = Types<Scalar>::Vector::Zero(q.size());
    p[label] = Scalar(1);
    return js(p, q);
}

}  // namespace nce
