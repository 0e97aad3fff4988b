#include "harmtheta/imat.hpp"

#include "harmtheta/errors.hpp"

#include <cstdlib>

namespace harmtheta {

IMat IMat::identity(int n) {
    IMat m(n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
}

bool IMat::is_identity() const {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (at(i, j) != (i == j ? 1 : 0)) return false;
    return true;
}

IMat imat_mul(const IMat& a, const IMat& b) {
    if (a.n != b.n) throw Error("imat_mul: size mismatch");
    IMat r(a.n);
    for (int i = 0; i < a.n; ++i)
        for (int k = 0; k < a.n; ++k) {
            std::int64_t v = a.at(i, k);
            if (v == 0) continue;
            for (int j = 0; j < a.n; ++j) r.at(i, j) += v * b.at(k, j);
        }
    return r;
}

void imat_apply(const IMat& a, const std::int32_t* in, std::int32_t* out) {
    for (int i = 0; i < a.n; ++i) {
        std::int64_t s = 0;
        const std::int64_t* row = a.e.data() + static_cast<std::size_t>(i) * a.n;
        for (int j = 0; j < a.n; ++j) s += row[j] * in[j];
        if (s < INT32_MIN || s > INT32_MAX) throw Error("imat_apply: coordinate overflow");
        out[i] = static_cast<std::int32_t>(s);
    }
}

IMat imat_from_zmat(const ZMat& z) {
    if (z.rows != z.cols) throw Error("imat_from_zmat: not square");
    IMat m(z.rows);
    for (std::size_t i = 0; i < z.e.size(); ++i) {
        if (!z.e[i].fits_slong_p()) throw Error("imat_from_zmat: entry overflow");
        m.e[i] = z.e[i].get_si();
    }
    return m;
}

ZMat zmat_from_imat(const IMat& m) {
    ZMat z(m.n, m.n);
    for (std::size_t i = 0; i < m.e.size(); ++i) z.e[i] = static_cast<long>(m.e[i]);
    return z;
}

QMat qmat_from_imat(const IMat& m) {
    QMat q(m.n, m.n);
    for (std::size_t i = 0; i < m.e.size(); ++i) q.e[i] = Rational(static_cast<long>(m.e[i]));
    return q;
}

} // namespace harmtheta
