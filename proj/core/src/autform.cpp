#include "harmtheta/autform.hpp"

#include "harmtheta/errors.hpp"
#include "harmtheta/lattice.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace harmtheta {

ZMat FormAutGroup::elem_zmat(std::size_t i) const {
    ZMat z(n, n);
    const std::int32_t* p = elem(i);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) z.at(r, c) = static_cast<long>(p[r * n + c]);
    return z;
}

int det_sign_of_perm_matrix(const std::int32_t* m, int n) {
    // exact small determinant by fraction-free elimination over int64
    std::vector<std::int64_t> a(m, m + n * n);
    std::int64_t prev = 1;
    int sign = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (a[k * n + k] == 0) {
            int piv = -1;
            for (int i = k + 1; i < n; ++i)
                if (a[i * n + k] != 0) { piv = i; break; }
            if (piv < 0) return 0;
            for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j)
                a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
        prev = a[k * n + k];
    }
    std::int64_t d = n == 0 ? 1 : a[(n - 1) * n + (n - 1)];
    d *= sign;
    return d > 0 ? 1 : (d < 0 ? -1 : 0);
}

FormAutGroup aut_of_form(const ZMat& t) {
    const int n = t.rows;
    if (t.cols != n) throw Error("aut_of_form: not square");
    QMat tq = q_from_z(t);
    if (!is_positive_definite(tq)) throw Error("aut_of_form: form not positive definite");

    // candidate columns, bucketed by norm
    std::vector<AmbVec> std_basis;
    for (int i = 0; i < n; ++i) {
        AmbVec e(n, Rational(0));
        e[i] = 1;
        std_basis.push_back(std::move(e));
    }
    Lattice lat = Lattice::from_generators(tq, std_basis);
    std::vector<const VecList*> cand(n);
    for (int j = 0; j < n; ++j) {
        long norm = t.at(j, j).get_si();
        cand[j] = &lat.shorts(norm);
    }

    std::vector<std::int64_t> t64(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t64[i * n + j] = t.at(i, j).get_si();

    FormAutGroup out;
    out.n = n;
    std::vector<std::int32_t> cols(n * n); // chosen columns, column-major

    // partial inner products: accept column j when (c_i, c_j)_T = T_ij for i <= j
    auto dot_t = [&](const std::int32_t* x, const std::int32_t* y) {
        std::int64_t s = 0;
        for (int i = 0; i < n; ++i) {
            if (x[i] == 0) continue;
            std::int64_t r = 0;
            for (int j = 0; j < n; ++j) r += t64[i * n + j] * y[j];
            s += x[i] * r;
        }
        return s;
    };

    std::vector<std::size_t> stack(n, 0);
    int depth = 0;
    while (depth >= 0) {
        if (stack[depth] >= cand[depth]->count) {
            stack[depth] = 0;
            --depth;
            if (depth >= 0) ++stack[depth];
            continue;
        }
        const std::int32_t* c = cand[depth]->basis_row(stack[depth]);
        bool ok = true;
        for (int i = 0; i < depth; ++i) {
            if (dot_t(&cols[i * n], c) != t64[i * n + depth]) { ok = false; break; }
        }
        if (!ok) {
            ++stack[depth];
            continue;
        }
        std::copy(c, c + n, &cols[depth * n]);
        if (depth == n - 1) {
            // emit matrix: entry (r, c) = cols[c][r]
            std::vector<std::int32_t> m(n * n);
            for (int cc = 0; cc < n; ++cc)
                for (int r = 0; r < n; ++r) m[r * n + cc] = cols[cc * n + r];
            int d = det_sign_of_perm_matrix(m.data(), n);
            if (d == 0) throw Error("aut_of_form: singular element");
            if (d < 0) out.has_det_minus_one = true;
            out.elems.insert(out.elems.end(), m.begin(), m.end());
            ++out.count;
            ++stack[depth];
        } else {
            ++depth;
        }
    }

    // canonical element order
    std::vector<std::size_t> idx(out.count);
    for (std::size_t i = 0; i < out.count; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(out.elem(a), out.elem(a) + n * n, out.elem(b),
                                            out.elem(b) + n * n);
    });
    std::vector<std::int32_t> sorted(out.elems.size());
    for (std::size_t r = 0; r < out.count; ++r)
        std::copy(out.elem(idx[r]), out.elem(idx[r]) + n * n, sorted.begin() + r * n * n);
    out.elems.swap(sorted);
    return out;
}

bool det_character_trivial(const FormAutGroup& g, unsigned long k) {
    if (k % 2 == 0) return true;
    return !g.has_det_minus_one;
}

std::vector<std::size_t> generating_indices(const FormAutGroup& g) {
    const int n = g.n;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    auto key = [&](const std::int32_t* m) {
        Fnv64 h;
        h.feed(m, nn * sizeof(std::int32_t));
        return h.digest();
    };
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> index;
    for (std::size_t i = 0; i < g.count; ++i) index[key(g.elem(i))].push_back(i);
    auto find_elem = [&](const std::int32_t* m) -> std::int64_t {
        auto it = index.find(key(m));
        if (it == index.end()) return -1;
        for (std::size_t i : it->second)
            if (std::equal(m, m + nn, g.elem(i))) return static_cast<std::int64_t>(i);
        return -1;
    };

    std::vector<std::size_t> gens;
    std::vector<char> in_closure(g.count, 0);
    std::vector<std::size_t> closure;
    auto mul = [&](const std::int32_t* a, const std::int32_t* b, std::int32_t* c) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                std::int64_t s = 0;
                for (int k = 0; k < n; ++k)
                    s += static_cast<std::int64_t>(a[i * n + k]) * b[k * n + j];
                c[i * n + j] = static_cast<std::int32_t>(s);
            }
    };
    // seed with the identity
    {
        std::vector<std::int32_t> id(nn, 0);
        for (int i = 0; i < n; ++i) id[i * n + i] = 1;
        std::int64_t idpos = find_elem(id.data());
        if (idpos < 0) throw Error("generating_indices: identity missing");
        in_closure[idpos] = 1;
        closure.push_back(static_cast<std::size_t>(idpos));
    }
    std::vector<std::int32_t> prod(nn);
    while (closure.size() < g.count) {
        // first element outside the closure becomes a generator
        std::size_t pick = 0;
        while (pick < g.count && in_closure[pick]) ++pick;
        gens.push_back(pick);
        // grow closure
        std::size_t head = 0;
        if (!in_closure[pick]) {
            in_closure[pick] = 1;
            closure.push_back(pick);
        }
        head = 0;
        while (head < closure.size()) {
            std::size_t cur = closure[head++];
            for (std::size_t gidx : gens) {
                mul(g.elem(gidx), g.elem(cur), prod.data());
                std::int64_t t = find_elem(prod.data());
                if (t < 0) throw Error("generating_indices: closure left the group");
                if (!in_closure[t]) {
                    in_closure[t] = 1;
                    closure.push_back(static_cast<std::size_t>(t));
                }
                mul(g.elem(cur), g.elem(gidx), prod.data());
                t = find_elem(prod.data());
                if (t >= 0 && !in_closure[t]) {
                    in_closure[t] = 1;
                    closure.push_back(static_cast<std::size_t>(t));
                }
            }
        }
    }
    return gens;
}

} // namespace harmtheta
