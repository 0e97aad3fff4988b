#pragma once

#include "harmtheta/linalg.hpp"
#include "harmtheta/scalar.hpp"

#include <vector>

namespace harmtheta {

/// Dense matrix over Q(i, sqrt 6); used for Q(x,h) blocks, h-matrices and the
/// multiplier matrices m_sigma. Stays small (24 x 6 at most).
struct SMat {
    int rows = 0, cols = 0;
    std::vector<ThetaScalar> e;

    SMat() = default;
    SMat(int r, int c) : rows(r), cols(c), e(static_cast<std::size_t>(r) * c) {}

    ThetaScalar& at(int i, int j) { return e[static_cast<std::size_t>(i) * cols + j]; }
    const ThetaScalar& at(int i, int j) const { return e[static_cast<std::size_t>(i) * cols + j]; }

    static SMat identity(int n);
    SMat conj() const;
    SMat transpose() const;

    friend bool operator==(const SMat&, const SMat&) = default;

    void feed_hash(Fnv64& h) const;
};

SMat smul(const SMat& x, const SMat& y);
SMat smul_qs(const QMat& x, const SMat& y);
SMat s_from_q(const QMat& q);

/// Exact determinant. Cofactor expansion below 4x4, fraction-free Bareiss
/// above (division uses the field inverse, so intermediates stay exact).
ThetaScalar det_small(const SMat& m);

/// Reduced column echelon form; canonical for the column span.
SMat column_echelon_canonical(SMat m);

/// Solve x * sol = y for sol (x of full column rank); throws Error when y is
/// not in the column span of x.
SMat solve_right(const SMat& x, const SMat& y);

/// True iff every column of y lies in the column span of x.
bool span_contains(const SMat& x, const SMat& y);

} // namespace harmtheta
