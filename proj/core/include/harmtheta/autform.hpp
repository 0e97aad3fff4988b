#pragma once

#include "harmtheta/linalg.hpp"

#include <cstdint>
#include <vector>

namespace harmtheta {

/// Complete orthogonal group O(T) = { eps in GL_n(Z) : eps^T T eps = T } of a
/// small positive definite even matrix, listed elementwise.
struct FormAutGroup {
    int n = 0;
    std::size_t count = 0;
    std::vector<std::int32_t> elems; // count * n * n, row-major, canonical order
    bool has_det_minus_one = false;

    const std::int32_t* elem(std::size_t i) const { return elems.data() + i * n * n; }
    ZMat elem_zmat(std::size_t i) const;
};

/// Backtrack over column candidates with partial-Gram pruning; complete list.
FormAutGroup aut_of_form(const ZMat& t);

/// det(eps)^k = 1 for every element; always true for even k.
bool det_character_trivial(const FormAutGroup& g, unsigned long k);

/// Indices of a small generating subset (greedy closure growth).
std::vector<std::size_t> generating_indices(const FormAutGroup& g);

int det_sign_of_perm_matrix(const std::int32_t* m, int n); // +-1 determinant of a unimodular matrix

} // namespace harmtheta
