#pragma once

#include "harmtheta/linalg.hpp"

#include <cstdint>
#include <vector>

namespace harmtheta {

/// Square integer matrix in the lattice basis frame, row-major int64.
/// Isometries of a positive definite form have uniformly bounded entries, so
/// int64 never overflows for the groups handled here (asserted on build).
struct IMat {
    int n = 0;
    std::vector<std::int64_t> e;

    IMat() = default;
    explicit IMat(int n_) : n(n_), e(static_cast<std::size_t>(n_) * n_) {}

    std::int64_t& at(int i, int j) { return e[static_cast<std::size_t>(i) * n + j]; }
    std::int64_t at(int i, int j) const { return e[static_cast<std::size_t>(i) * n + j]; }

    static IMat identity(int n);
    bool is_identity() const;

    friend bool operator==(const IMat&, const IMat&) = default;
};

IMat imat_mul(const IMat& a, const IMat& b);
void imat_apply(const IMat& a, const std::int32_t* in, std::int32_t* out);
IMat imat_from_zmat(const ZMat& z);
ZMat zmat_from_imat(const IMat& m);
QMat qmat_from_imat(const IMat& m);

} // namespace harmtheta
