#include "harmtheta/smallmat.hpp"

#include "harmtheta/errors.hpp"

#include <utility>

namespace harmtheta {

SMat SMat::identity(int n) {
    SMat m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = ThetaScalar::one();
    return m;
}

SMat SMat::conj() const {
    SMat m(rows, cols);
    for (std::size_t i = 0; i < e.size(); ++i) m.e[i] = e[i].conj();
    return m;
}

SMat SMat::transpose() const {
    SMat t(cols, rows);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t.at(j, i) = at(i, j);
    return t;
}

void SMat::feed_hash(Fnv64& h) const {
    h.feed_u64(static_cast<std::uint64_t>(rows));
    h.feed_u64(static_cast<std::uint64_t>(cols));
    for (const auto& x : e) x.feed_hash(h);
}

SMat smul(const SMat& x, const SMat& y) {
    if (x.cols != y.rows) throw Error("smul: shape mismatch");
    SMat r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const ThetaScalar& v = x.at(i, k);
            if (v.is_zero()) continue;
            for (int j = 0; j < y.cols; ++j) r.at(i, j) += v * y.at(k, j);
        }
    return r;
}

SMat smul_qs(const QMat& x, const SMat& y) {
    if (x.cols != y.rows) throw Error("smul_qs: shape mismatch");
    SMat r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const Rational& v = x.at(i, k);
            if (v == 0) continue;
            for (int j = 0; j < y.cols; ++j) {
                const ThetaScalar& w = y.at(k, j);
                if (w.is_zero()) continue;
                ThetaScalar& dst = r.at(i, j);
                dst.a += v * w.a;
                dst.b += v * w.b;
                dst.c += v * w.c;
                dst.d += v * w.d;
            }
        }
    return r;
}

SMat s_from_q(const QMat& q) {
    SMat m(q.rows, q.cols);
    for (std::size_t i = 0; i < q.e.size(); ++i) m.e[i] = ThetaScalar(q.e[i]);
    return m;
}

namespace {

ThetaScalar det_cofactor(const SMat& m) {
    int n = m.rows;
    if (n == 0) return ThetaScalar::one();
    if (n == 1) return m.at(0, 0);
    if (n == 2) return m.at(0, 0) * m.at(1, 1) - m.at(0, 1) * m.at(1, 0);
    // n == 3
    return m.at(0, 0) * (m.at(1, 1) * m.at(2, 2) - m.at(1, 2) * m.at(2, 1)) -
           m.at(0, 1) * (m.at(1, 0) * m.at(2, 2) - m.at(1, 2) * m.at(2, 0)) +
           m.at(0, 2) * (m.at(1, 0) * m.at(2, 1) - m.at(1, 1) * m.at(2, 0));
}

ThetaScalar det_bareiss(SMat m) {
    int n = m.rows;
    ThetaScalar prev = ThetaScalar::one();
    int sign = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (m.at(k, k).is_zero()) {
            int piv = -1;
            for (int i = k + 1; i < n; ++i)
                if (!m.at(i, k).is_zero()) { piv = i; break; }
            if (piv < 0) return ThetaScalar::zero();
            for (int j = 0; j < n; ++j) std::swap(m.at(k, j), m.at(piv, j));
            sign = -sign;
        }
        ThetaScalar prev_inv = prev.inverse();
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j)
                m.at(i, j) = (m.at(i, j) * m.at(k, k) - m.at(i, k) * m.at(k, j)) * prev_inv;
        prev = m.at(k, k);
    }
    ThetaScalar d = m.at(n - 1, n - 1);
    return sign > 0 ? d : -d;
}

} // namespace

ThetaScalar det_small(const SMat& m) {
    if (m.rows != m.cols) throw Error("det_small: not square");
    if (m.rows < 4) return det_cofactor(m);
    return det_bareiss(m);
}

SMat column_echelon_canonical(SMat m) {
    int p = 0; // next pivot column
    for (int row = 0; row < m.rows && p < m.cols; ++row) {
        int piv = -1;
        for (int j = p; j < m.cols; ++j)
            if (!m.at(row, j).is_zero()) { piv = j; break; }
        if (piv < 0) continue;
        if (piv != p)
            for (int i = 0; i < m.rows; ++i) std::swap(m.at(i, p), m.at(i, piv));
        ThetaScalar inv = m.at(row, p).inverse();
        for (int i = 0; i < m.rows; ++i) m.at(i, p) = m.at(i, p) * inv;
        for (int j = 0; j < m.cols; ++j) {
            if (j == p || m.at(row, j).is_zero()) continue;
            ThetaScalar f = m.at(row, j);
            for (int i = 0; i < m.rows; ++i) m.at(i, j) -= f * m.at(i, p);
        }
        ++p;
    }
    return m;
}

SMat solve_right(const SMat& x, const SMat& y) {
    if (x.rows != y.rows) throw Error("solve_right: shape mismatch");
    // row-eliminate the augmented matrix [x | y]
    SMat aug(x.rows, x.cols + y.cols);
    for (int i = 0; i < x.rows; ++i) {
        for (int j = 0; j < x.cols; ++j) aug.at(i, j) = x.at(i, j);
        for (int j = 0; j < y.cols; ++j) aug.at(i, x.cols + j) = y.at(i, j);
    }
    int r = 0;
    std::vector<int> pivot_rows;
    for (int col = 0; col < x.cols; ++col) {
        int piv = -1;
        for (int i = r; i < aug.rows; ++i)
            if (!aug.at(i, col).is_zero()) { piv = i; break; }
        if (piv < 0) throw Error("solve_right: columns not independent");
        if (piv != r)
            for (int j = 0; j < aug.cols; ++j) std::swap(aug.at(piv, j), aug.at(r, j));
        ThetaScalar inv = aug.at(r, col).inverse();
        for (int j = 0; j < aug.cols; ++j) aug.at(r, j) = aug.at(r, j) * inv;
        for (int i = 0; i < aug.rows; ++i) {
            if (i == r || aug.at(i, col).is_zero()) continue;
            ThetaScalar f = aug.at(i, col);
            for (int j = 0; j < aug.cols; ++j) aug.at(i, j) -= f * aug.at(r, j);
        }
        pivot_rows.push_back(r);
        ++r;
    }
    // rows beyond rank must now be zero on the y side, else inconsistent
    for (int i = r; i < aug.rows; ++i)
        for (int j = 0; j < y.cols; ++j)
            if (!aug.at(i, x.cols + j).is_zero())
                throw Error("solve_right: target not in column span");
    SMat sol(x.cols, y.cols);
    for (int col = 0; col < x.cols; ++col)
        for (int j = 0; j < y.cols; ++j) sol.at(col, j) = aug.at(col, x.cols + j);
    return sol;
}

bool span_contains(const SMat& x, const SMat& y) {
    try {
        (void)solve_right(x, y);
        return true;
    } catch (const Error&) {
        return false;
    }
}

} // namespace harmtheta
