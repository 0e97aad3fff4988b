#pragma once

#include "harmtheta/rational.hpp"

#include <optional>
#include <vector>

namespace harmtheta {

/// Dense row-major matrix over Q.
struct QMat {
    int rows = 0, cols = 0;
    std::vector<Rational> e;

    QMat() = default;
    QMat(int r, int c) : rows(r), cols(c), e(static_cast<std::size_t>(r) * c) {}

    Rational& at(int i, int j) { return e[static_cast<std::size_t>(i) * cols + j]; }
    const Rational& at(int i, int j) const { return e[static_cast<std::size_t>(i) * cols + j]; }

    static QMat identity(int n);
    QMat transpose() const;
    bool is_symmetric() const;

    friend bool operator==(const QMat&, const QMat&) = default;
};

/// Dense row-major matrix over Z.
struct ZMat {
    int rows = 0, cols = 0;
    std::vector<Int> e;

    ZMat() = default;
    ZMat(int r, int c) : rows(r), cols(c), e(static_cast<std::size_t>(r) * c) {}

    Int& at(int i, int j) { return e[static_cast<std::size_t>(i) * cols + j]; }
    const Int& at(int i, int j) const { return e[static_cast<std::size_t>(i) * cols + j]; }

    static ZMat identity(int n);
    ZMat transpose() const;

    friend bool operator==(const ZMat&, const ZMat&) = default;
};

QMat qmul(const QMat& x, const QMat& y);
ZMat zmul(const ZMat& x, const ZMat& y);
QMat q_from_z(const ZMat& z);
std::vector<Rational> qmul_vec(const QMat& m, const std::vector<Rational>& v);

/// Scale a rational matrix to integers; returns {scaled, common denominator}.
std::pair<ZMat, Int> scale_to_integer(const QMat& m);

/// Exact inverse via Gauss-Jordan; throws Error when singular.
QMat qinverse(const QMat& m);

/// Exact determinant (fraction-free Bareiss on the scaled integer matrix).
Rational qdet(const QMat& m);
Int zdet(ZMat m);

int qrank(QMat m);

/// Column-style Hermite normal form of the Z-span of the columns of `a`.
/// Returns the m x m lower-triangular canonical basis (diag > 0, entries left
/// of the pivot reduced into [0, diag)). Throws NonFullRank if the columns do
/// not span a rank-m sublattice.
ZMat hnf_column_basis(const ZMat& a);

/// Basis of the integer kernel {z : a z = 0} as columns; may have 0 columns.
ZMat z_kernel(const ZMat& a);

/// One integer solution of a z = g, if any.
std::optional<std::vector<Int>> z_solve(const ZMat& a, const std::vector<Int>& g);

/// LDL^T data of a positive definite rational Gram matrix:
///   x^T G x = sum_i diag[i] * (x_i + sum_{j>i} u(i,j) x_j)^2.
/// Throws Error if G is not positive definite.
struct Ldlt {
    std::vector<Rational> diag;
    QMat u; // strict upper part meaningful
};
Ldlt ldlt(const QMat& gram);

bool is_positive_definite(const QMat& gram);

/// Exact LLL (delta = 3/4) on a positive definite integer Gram matrix.
/// Returns unimodular U such that U^T G U is LLL-reduced.
ZMat lll_unimodular(const ZMat& gram);

} // namespace harmtheta
