#include "harmtheta/linalg.hpp"

#include "harmtheta/errors.hpp"

#include <algorithm>
#include <utility>

namespace harmtheta {

QMat QMat::identity(int n) {
    QMat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
}

QMat QMat::transpose() const {
    QMat t(cols, rows);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t.at(j, i) = at(i, j);
    return t;
}

bool QMat::is_symmetric() const {
    if (rows != cols) return false;
    for (int i = 0; i < rows; ++i)
        for (int j = i + 1; j < cols; ++j)
            if (at(i, j) != at(j, i)) return false;
    return true;
}

ZMat ZMat::identity(int n) {
    ZMat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
}

ZMat ZMat::transpose() const {
    ZMat t(cols, rows);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t.at(j, i) = at(i, j);
    return t;
}

QMat qmul(const QMat& x, const QMat& y) {
    if (x.cols != y.rows) throw Error("qmul: shape mismatch");
    QMat r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const Rational& v = x.at(i, k);
            if (v == 0) continue;
            for (int j = 0; j < y.cols; ++j) r.at(i, j) += v * y.at(k, j);
        }
    return r;
}

ZMat zmul(const ZMat& x, const ZMat& y) {
    if (x.cols != y.rows) throw Error("zmul: shape mismatch");
    ZMat r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const Int& v = x.at(i, k);
            if (v == 0) continue;
            for (int j = 0; j < y.cols; ++j) r.at(i, j) += v * y.at(k, j);
        }
    return r;
}

QMat q_from_z(const ZMat& z) {
    QMat q(z.rows, z.cols);
    for (std::size_t i = 0; i < z.e.size(); ++i) q.e[i] = Rational(z.e[i]);
    return q;
}

std::vector<Rational> qmul_vec(const QMat& m, const std::vector<Rational>& v) {
    if (static_cast<int>(v.size()) != m.cols) throw Error("qmul_vec: shape mismatch");
    std::vector<Rational> r(m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j)
            if (m.at(i, j) != 0) r[i] += m.at(i, j) * v[j];
    return r;
}

std::pair<ZMat, Int> scale_to_integer(const QMat& m) {
    Int den = 1;
    for (const auto& q : m.e) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), q.get_den().get_mpz_t());
    ZMat z(m.rows, m.cols);
    for (std::size_t i = 0; i < m.e.size(); ++i)
        z.e[i] = m.e[i].get_num() * (den / m.e[i].get_den());
    return {std::move(z), den};
}

QMat qinverse(const QMat& m) {
    if (m.rows != m.cols) throw Error("qinverse: not square");
    int n = m.rows;
    QMat a = m;
    QMat inv = QMat::identity(n);
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int i = col; i < n; ++i)
            if (a.at(i, col) != 0) { piv = i; break; }
        if (piv < 0) throw Error("qinverse: singular matrix");
        if (piv != col) {
            for (int j = 0; j < n; ++j) {
                std::swap(a.at(piv, j), a.at(col, j));
                std::swap(inv.at(piv, j), inv.at(col, j));
            }
        }
        Rational p = a.at(col, col);
        for (int j = 0; j < n; ++j) { a.at(col, j) /= p; inv.at(col, j) /= p; }
        for (int i = 0; i < n; ++i) {
            if (i == col || a.at(i, col) == 0) continue;
            Rational f = a.at(i, col);
            for (int j = 0; j < n; ++j) {
                a.at(i, j) -= f * a.at(col, j);
                inv.at(i, j) -= f * inv.at(col, j);
            }
        }
    }
    return inv;
}

Int zdet(ZMat m) {
    if (m.rows != m.cols) throw Error("zdet: not square");
    int n = m.rows;
    if (n == 0) return 1;
    Int prev = 1;
    int sign = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (m.at(k, k) == 0) {
            int piv = -1;
            for (int i = k + 1; i < n; ++i)
                if (m.at(i, k) != 0) { piv = i; break; }
            if (piv < 0) return 0;
            for (int j = 0; j < n; ++j) std::swap(m.at(k, j), m.at(piv, j));
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j) {
                Int t = m.at(i, j) * m.at(k, k) - m.at(i, k) * m.at(k, j);
                mpz_divexact(m.at(i, j).get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
            }
        prev = m.at(k, k);
    }
    return sign > 0 ? m.at(n - 1, n - 1) : -m.at(n - 1, n - 1);
}

Rational qdet(const QMat& m) {
    auto [z, den] = scale_to_integer(m);
    Rational d(zdet(std::move(z)));
    Rational pw = 1;
    for (int i = 0; i < m.rows; ++i) pw *= Rational(den);
    return d / pw;
}

int qrank(QMat m) {
    int r = 0;
    for (int col = 0; col < m.cols && r < m.rows; ++col) {
        int piv = -1;
        for (int i = r; i < m.rows; ++i)
            if (m.at(i, col) != 0) { piv = i; break; }
        if (piv < 0) continue;
        if (piv != r)
            for (int j = 0; j < m.cols; ++j) std::swap(m.at(piv, j), m.at(r, j));
        for (int i = r + 1; i < m.rows; ++i) {
            if (m.at(i, col) == 0) continue;
            Rational f = m.at(i, col) / m.at(r, col);
            for (int j = col; j < m.cols; ++j) m.at(i, j) -= f * m.at(r, j);
        }
        ++r;
    }
    return r;
}

namespace {

Int round_nearest(const Int& num, const Int& den) {
    Rational t(num, den);
    t.canonicalize();
    return floor_rational(t + Rational(1, 2));
}

// In-place column echelon reduction; returns the pivot (row, col) list. When
// u is non-null it must start as the identity and tracks the column ops.
std::vector<std::pair<int, int>> column_echelon(ZMat& a, ZMat* u) {
    std::vector<std::pair<int, int>> pivots;
    int p = 0;
    auto colswap = [&](int x, int y) {
        if (x == y) return;
        for (int i = 0; i < a.rows; ++i) std::swap(a.at(i, x), a.at(i, y));
        if (u)
            for (int i = 0; i < u->rows; ++i) std::swap(u->at(i, x), u->at(i, y));
    };
    auto colsub = [&](int dst, int src, const Int& q) { // col_dst -= q*col_src
        if (q == 0) return;
        for (int i = 0; i < a.rows; ++i) a.at(i, dst) -= q * a.at(i, src);
        if (u)
            for (int i = 0; i < u->rows; ++i) u->at(i, dst) -= q * u->at(i, src);
    };
    auto colneg = [&](int x) {
        for (int i = 0; i < a.rows; ++i) a.at(i, x) = -a.at(i, x);
        if (u)
            for (int i = 0; i < u->rows; ++i) u->at(i, x) = -u->at(i, x);
    };
    for (int row = 0; row < a.rows && p < a.cols; ++row) {
        while (true) {
            int jmin = -1;
            for (int j = p; j < a.cols; ++j) {
                if (a.at(row, j) == 0) continue;
                if (jmin < 0 ||
                    mpz_cmpabs(a.at(row, j).get_mpz_t(), a.at(row, jmin).get_mpz_t()) < 0)
                    jmin = j;
            }
            if (jmin < 0) break; // no pivot in this row
            bool clean = true;
            for (int j = p; j < a.cols; ++j) {
                if (j == jmin || a.at(row, j) == 0) continue;
                colsub(j, jmin, round_nearest(a.at(row, j), a.at(row, jmin)));
                if (a.at(row, j) != 0) clean = false;
            }
            if (clean) {
                colswap(p, jmin);
                if (a.at(row, p) < 0) colneg(p);
                pivots.emplace_back(row, p);
                ++p;
                break;
            }
        }
    }
    return pivots;
}

} // namespace

ZMat hnf_column_basis(const ZMat& a) {
    ZMat w = a;
    auto pivots = column_echelon(w, nullptr);
    int m = a.rows;
    if (static_cast<int>(pivots.size()) != m)
        throw NonFullRank("generators span a rank-" + std::to_string(pivots.size()) +
                          " sublattice of Z^" + std::to_string(m));
    ZMat h(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) h.at(i, j) = w.at(i, j);
    // canonical reduction: entries left of each pivot into [0, pivot)
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < i; ++j) {
            Int q = floor_div(h.at(i, j), h.at(i, i));
            if (q == 0) continue;
            for (int r = i; r < m; ++r) h.at(r, j) -= q * h.at(r, i);
        }
    }
    return h;
}

ZMat z_kernel(const ZMat& a) {
    ZMat w = a;
    ZMat u = ZMat::identity(a.cols);
    column_echelon(w, &u);
    std::vector<int> zero_cols;
    for (int j = 0; j < w.cols; ++j) {
        bool z = true;
        for (int i = 0; i < w.rows; ++i)
            if (w.at(i, j) != 0) { z = false; break; }
        if (z) zero_cols.push_back(j);
    }
    ZMat k(a.cols, static_cast<int>(zero_cols.size()));
    for (int idx = 0; idx < k.cols; ++idx)
        for (int i = 0; i < a.cols; ++i) k.at(i, idx) = u.at(i, zero_cols[idx]);
    return k;
}

std::optional<std::vector<Int>> z_solve(const ZMat& a, const std::vector<Int>& g) {
    if (static_cast<int>(g.size()) != a.rows) throw Error("z_solve: shape mismatch");
    ZMat w = a;
    ZMat u = ZMat::identity(a.cols);
    auto pivots = column_echelon(w, &u);
    std::vector<Int> y(a.cols, Int(0));
    std::vector<Int> rem = g;
    for (const auto& [row, col] : pivots) {
        Int num = rem[row];
        if (!mpz_divisible_p(num.get_mpz_t(), w.at(row, col).get_mpz_t())) return std::nullopt;
        Int q = num / w.at(row, col);
        y[col] = q;
        if (q != 0)
            for (int i = 0; i < a.rows; ++i) rem[i] -= q * w.at(i, col);
    }
    for (const auto& r : rem)
        if (r != 0) return std::nullopt;
    std::vector<Int> z(a.cols, Int(0));
    for (int i = 0; i < a.cols; ++i)
        for (int j = 0; j < a.cols; ++j)
            if (y[j] != 0) z[i] += u.at(i, j) * y[j];
    return z;
}

Ldlt ldlt(const QMat& gram) {
    if (!gram.is_symmetric()) throw Error("ldlt: matrix not symmetric");
    int n = gram.rows;
    Ldlt out;
    out.diag.assign(n, Rational(0));
    out.u = QMat(n, n);
    QMat w = gram;
    for (int i = 0; i < n; ++i) {
        Rational q = w.at(i, i);
        if (q <= 0) throw Error("ldlt: matrix not positive definite");
        out.diag[i] = q;
        for (int j = i + 1; j < n; ++j) out.u.at(i, j) = w.at(i, j) / q;
        for (int r = i + 1; r < n; ++r)
            for (int c = r; c < n; ++c) {
                w.at(r, c) -= out.u.at(i, r) * out.u.at(i, c) * q;
                if (c != r) w.at(c, r) = w.at(r, c);
            }
    }
    return out;
}

bool is_positive_definite(const QMat& gram) {
    if (!gram.is_symmetric()) return false;
    try {
        ldlt(gram);
        return true;
    } catch (const Error&) {
        return false;
    }
}

ZMat lll_unimodular(const ZMat& gram) {
    const int n = gram.rows;
    if (gram.cols != n) throw Error("lll: gram not square");
    if (n <= 1) return ZMat::identity(std::max(n, 0));

    ZMat u = ZMat::identity(n);
    QMat g = q_from_z(gram); // gram of the working basis

    std::vector<Rational> bstar(n);
    QMat mu(n, n);
    auto gso_init = [&] {
        for (int i = 0; i < n; ++i) {
            Rational norm = g.at(i, i);
            for (int k = 0; k < i; ++k) norm -= mu.at(i, k) * mu.at(i, k) * bstar[k];
            if (norm <= 0) throw Error("lll: gram not positive definite");
            bstar[i] = norm;
            for (int j = i + 1; j < n; ++j) {
                Rational v = g.at(j, i);
                for (int k = 0; k < i; ++k) v -= mu.at(j, k) * mu.at(i, k) * bstar[k];
                mu.at(j, i) = v / norm;
            }
        }
    };
    gso_init();

    // b_k -= q*b_j with incremental mu update
    auto reduce = [&](int k, int j) {
        Int q = floor_rational(mu.at(k, j) + Rational(1, 2));
        if (q == 0) return;
        Rational qq(q);
        for (int i = 0; i < n; ++i) u.at(i, k) -= q * u.at(i, j);
        for (int t = 0; t < n; ++t) g.at(k, t) -= qq * g.at(j, t);
        for (int t = 0; t < n; ++t) g.at(t, k) -= qq * g.at(t, j);
        mu.at(k, j) -= qq;
        for (int l = 0; l < j; ++l) mu.at(k, l) -= qq * mu.at(j, l);
    };

    auto swap_level = [&](int k) {
        for (int i = 0; i < n; ++i) std::swap(u.at(i, k - 1), u.at(i, k));
        for (int t = 0; t < n; ++t) std::swap(g.at(k - 1, t), g.at(k, t));
        for (int t = 0; t < n; ++t) std::swap(g.at(t, k - 1), g.at(t, k));
        Rational m = mu.at(k, k - 1);
        Rational big = bstar[k] + m * m * bstar[k - 1];
        mu.at(k, k - 1) = m * bstar[k - 1] / big;
        Rational old_b = bstar[k - 1];
        bstar[k] = bstar[k] * old_b / big;
        bstar[k - 1] = big;
        for (int j = 0; j < k - 1; ++j) std::swap(mu.at(k, j), mu.at(k - 1, j));
        for (int i = k + 1; i < n; ++i) {
            Rational t = mu.at(i, k);
            mu.at(i, k) = mu.at(i, k - 1) - m * t;
            mu.at(i, k - 1) = t + mu.at(k, k - 1) * mu.at(i, k);
        }
    };

    const Rational delta(3, 4);
    int k = 1;
    while (k < n) {
        reduce(k, k - 1);
        if (bstar[k] < (delta - mu.at(k, k - 1) * mu.at(k, k - 1)) * bstar[k - 1]) {
            swap_level(k);
            k = std::max(k - 1, 1);
        } else {
            for (int j = k - 2; j >= 0; --j) reduce(k, j);
            ++k;
        }
    }
    return u;
}

} // namespace harmtheta
