#include "harmtheta/lattice.hpp"

#include "harmtheta/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>

namespace harmtheta {

void VecList::push(const std::int32_t* z, const std::int64_t* a) {
    basis.insert(basis.end(), z, z + m);
    amb.insert(amb.end(), a, a + m);
    ++count;
}

void VecList::sort_canonical() {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
        return compare_i64_row(amb_row(x), amb_row(y), m) < 0;
    });
    std::vector<std::int32_t> nb(basis.size());
    std::vector<std::int64_t> na(amb.size());
    for (std::size_t r = 0; r < count; ++r) {
        std::copy_n(basis_row(idx[r]), m, nb.begin() + r * m);
        std::copy_n(amb_row(idx[r]), m, na.begin() + r * m);
    }
    basis.swap(nb);
    amb.swap(na);
}

std::uint64_t hash_i64_row(const std::int64_t* p, int m) {
    Fnv64 h;
    h.feed(p, sizeof(std::int64_t) * static_cast<std::size_t>(m));
    return h.digest();
}

int compare_i64_row(const std::int64_t* a, const std::int64_t* b, int m) {
    for (int i = 0; i < m; ++i) {
        if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
    }
    return 0;
}

VecIndex::VecIndex(const VecList& vl) : vl_(&vl) {
    buckets_.reserve(vl.count * 2);
    for (std::size_t i = 0; i < vl.count; ++i)
        buckets_[hash_i64_row(vl.amb_row(i), vl.m)].push_back(static_cast<std::int32_t>(i));
}

std::int64_t VecIndex::find(const std::int64_t* amb) const {
    if (!vl_) return -1;
    auto it = buckets_.find(hash_i64_row(amb, vl_->m));
    if (it == buckets_.end()) return -1;
    for (std::int32_t i : it->second)
        if (compare_i64_row(vl_->amb_row(i), amb, vl_->m) == 0) return i;
    return -1;
}

namespace {

// Largest integer t with t + w <= sqrt(r2) and smallest with t + w >= -sqrt(r2),
// computed exactly (double estimate, exact rational fix-up).
std::pair<long, long> z_interval(const Rational& w, const Rational& r2) {
    if (r2 < 0) return {1, 0};
    double wd = mpq_get_d(w.get_mpq_t());
    double rd = std::sqrt(std::max(0.0, mpq_get_d(r2.get_mpq_t())));
    auto ok_hi = [&](long t) {
        Rational x = Rational(t) + w;
        return x <= 0 || x * x <= r2;
    };
    auto ok_lo = [&](long t) {
        Rational x = Rational(t) + w;
        return x >= 0 || x * x <= r2;
    };
    long hi = static_cast<long>(std::floor(-wd + rd));
    while (ok_hi(hi + 1)) ++hi;
    while (!ok_hi(hi)) --hi;
    long lo = static_cast<long>(std::ceil(-wd - rd));
    while (ok_lo(lo - 1)) --lo;
    while (!ok_lo(lo)) ++lo;
    return {lo, hi};
}

// All integer z with (z + center)^T Q (z + center) == target, Q given via its
// LDL^T data. With half=true (zero center only) one vector per +-pair is
// reported, the leading nonzero coordinate positive.
void enumerate_ellipsoid(const Ldlt& ld, const std::vector<Rational>& center,
                         const Rational& target, bool half,
                         const std::function<void(const std::vector<long>&)>& emit) {
    const int r = static_cast<int>(ld.diag.size());
    if (r == 0) {
        if (target == 0) emit({});
        return;
    }
    std::vector<long> z(r, 0);
    std::vector<Rational> y(r); // z_j + center_j for assigned levels
    auto center_at = [&](int i) -> Rational {
        return center.empty() ? Rational(0) : center[i];
    };

    // recursive descent from level r-1 down to 0
    std::function<void(int, const Rational&, bool)> descend =
        [&](int level, const Rational& slack, bool all_zero_above) {
            Rational c = center_at(level);
            for (int j = level + 1; j < r; ++j)
                if (y[j] != 0) c += ld.u.at(level, j) * y[j];
            Rational r2 = slack / ld.diag[level];
            auto [lo, hi] = z_interval(c, r2);
            if (half && all_zero_above) lo = std::max(lo, 0L);
            for (long t = lo; t <= hi; ++t) {
                Rational x = Rational(t) + c;
                Rational rest = slack - ld.diag[level] * x * x;
                if (rest < 0) continue;
                z[level] = t;
                y[level] = Rational(t) + center_at(level);
                if (level == 0) {
                    if (rest == 0) {
                        bool zero = true;
                        for (long v : z)
                            if (v != 0) { zero = false; break; }
                        if (!(half && zero)) emit(z);
                    }
                } else {
                    descend(level - 1, rest, all_zero_above && t == 0);
                }
            }
            z[level] = 0;
            y[level] = 0;
        };
    descend(r - 1, target, true);
}

} // namespace

Lattice Lattice::from_generators(QMat ambient_gram, const std::vector<AmbVec>& generators) {
    if (!ambient_gram.is_symmetric()) throw Error("lattice: ambient gram not symmetric");
    const int m = ambient_gram.rows;
    if (generators.empty()) throw NonFullRank("lattice: no generators");
    for (const auto& g : generators)
        if (static_cast<int>(g.size()) != m) throw Error("lattice: generator length mismatch");

    Lattice l;
    l.m_ = m;
    l.ambient_gram_ = std::move(ambient_gram);

    // stack generators as columns, scale to integers, HNF
    QMat gen(m, static_cast<int>(generators.size()));
    for (int j = 0; j < gen.cols; ++j)
        for (int i = 0; i < m; ++i) gen.at(i, j) = generators[j][i];
    auto [genz, den] = scale_to_integer(gen);
    ZMat h = hnf_column_basis(genz);

    l.basis_ = QMat(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) l.basis_.at(i, j) = Rational(h.at(i, j), den);
    for (auto& q : l.basis_.e) q.canonicalize();
    l.basis_inv_ = qinverse(l.basis_);

    QMat gram_q = qmul(qmul(l.basis_.transpose(), l.ambient_gram_), l.basis_);
    l.gram_ = ZMat(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Rational& v = gram_q.at(i, j);
            if (!is_integer(v))
                throw NonIntegral("lattice: Gram of the generator span is not integral");
            l.gram_.at(i, j) = v.get_num();
        }

    l.even_ = true;
    for (int i = 0; i < m; ++i)
        if (mpz_odd_p(l.gram_.at(i, i).get_mpz_t())) { l.even_ = false; break; }
    l.det_ = zdet(l.gram_);
    l.pos_def_ = is_positive_definite(gram_q);

    l.amb_den_ = 1;
    for (const auto& q : l.basis_.e)
        mpz_lcm(l.amb_den_.get_mpz_t(), l.amb_den_.get_mpz_t(), q.get_den().get_mpz_t());
    l.bscaled_.resize(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            Int v = l.basis_.at(i, j).get_num() * (l.amb_den_ / l.basis_.at(i, j).get_den());
            if (!v.fits_slong_p()) throw Error("lattice: basis entries overflow int64");
            l.bscaled_[static_cast<std::size_t>(i) * m + j] = v.get_si();
        }
    l.g64_.resize(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Int& v = l.gram_.at(i, j);
            if (!v.fits_slong_p()) throw Error("lattice: gram entries overflow int64");
            l.g64_[static_cast<std::size_t>(i) * m + j] = v.get_si();
        }

    Fnv64 fh;
    fh.feed_u64(static_cast<std::uint64_t>(m));
    for (const auto& q : l.ambient_gram_.e) fh.feed_rational(q);
    for (const auto& q : l.basis_.e) fh.feed_rational(q);
    l.content_hash_ = fh.digest();
    return l;
}

std::optional<std::vector<Int>> Lattice::basis_coords(const AmbVec& x) const {
    if (static_cast<int>(x.size()) != m_) throw Error("lattice: coordinate length mismatch");
    std::vector<Rational> z = qmul_vec(basis_inv_, x);
    std::vector<Int> out(m_);
    for (int i = 0; i < m_; ++i) {
        if (!is_integer(z[i])) return std::nullopt;
        out[i] = z[i].get_num();
    }
    return out;
}

AmbVec Lattice::ambient_from_basis(const std::vector<Int>& z) const {
    AmbVec x(m_, Rational(0));
    for (int i = 0; i < m_; ++i)
        for (int j = 0; j < m_; ++j)
            if (z[j] != 0) x[i] += basis_.at(i, j) * Rational(z[j]);
    return x;
}

long Lattice::dot(const std::int32_t* a, const std::int32_t* b) const {
    const std::int64_t* g = g64_.data();
    std::int64_t s = 0;
    for (int i = 0; i < m_; ++i) {
        if (a[i] == 0) continue;
        const std::int64_t* row = g + static_cast<std::size_t>(i) * m_;
        std::int64_t t = 0;
        for (int j = 0; j < m_; ++j) t += row[j] * b[j];
        s += a[i] * t;
    }
    return s;
}

void Lattice::amb_scaled_from_basis(const std::int32_t* z, std::int64_t* out) const {
    for (int i = 0; i < m_; ++i) {
        const std::int64_t* row = bscaled_.data() + static_cast<std::size_t>(i) * m_;
        std::int64_t s = 0;
        for (int j = 0; j < m_; ++j) s += row[j] * z[j];
        out[i] = s;
    }
}

void Lattice::ensure_reduction() const {
    std::lock_guard<std::mutex> lk(cache_->mu);
    if (cache_->reduced) return;
    if (!pos_def_) throw Error("lattice: enumeration needs a positive definite form");
    cache_->red_u = lll_unimodular(gram_);
    cache_->red_gram = zmul(zmul(cache_->red_u.transpose(), gram_), cache_->red_u);
    cache_->red_ldlt = ldlt(q_from_z(cache_->red_gram));
    cache_->reduced = true;
}

VecList Lattice::enumerate_norm(long norm) const {
    ensure_reduction();
    VecList out(m_);
    if (norm <= 0) return out;
    std::vector<std::int32_t> zb(m_);
    std::vector<std::int64_t> za(m_);
    enumerate_ellipsoid(cache_->red_ldlt, {}, Rational(norm), /*half=*/true,
                        [&](const std::vector<long>& zred) {
                            for (int i = 0; i < m_; ++i) {
                                Int v = 0;
                                for (int j = 0; j < m_; ++j)
                                    if (zred[j] != 0) v += cache_->red_u.at(i, j) * static_cast<long>(zred[j]);
                                if (!v.fits_sint_p()) throw Error("lattice: coordinate overflow");
                                zb[i] = static_cast<std::int32_t>(v.get_si());
                            }
                            if (norm_of(zb.data()) != norm)
                                throw Error("lattice: enumeration norm mismatch");
                            amb_scaled_from_basis(zb.data(), za.data());
                            out.push(zb.data(), za.data());
                            for (int i = 0; i < m_; ++i) zb[i] = -zb[i];
                            amb_scaled_from_basis(zb.data(), za.data());
                            out.push(zb.data(), za.data());
                        });
    out.sort_canonical();
    return out;
}

const VecList& Lattice::shorts(long norm) const {
    {
        std::lock_guard<std::mutex> lk(cache_->mu);
        auto it = cache_->shorts.find(norm);
        if (it != cache_->shorts.end()) return *it->second;
    }

    // disk cache
    std::unique_ptr<VecList> loaded;
    if (!cache_dir_.empty()) {
        std::filesystem::path p =
            std::filesystem::path(cache_dir_) /
            ("sv_" + hex64(content_hash_) + "_" + std::to_string(norm) + ".bin");
        std::ifstream in(p, std::ios::binary);
        if (in) {
            char magic[4];
            std::uint32_t ver = 0;
            std::uint64_t hash = 0, count = 0;
            std::int64_t fnorm = 0;
            std::int32_t fm = 0;
            in.read(magic, 4);
            in.read(reinterpret_cast<char*>(&ver), sizeof ver);
            in.read(reinterpret_cast<char*>(&hash), sizeof hash);
            in.read(reinterpret_cast<char*>(&fnorm), sizeof fnorm);
            in.read(reinterpret_cast<char*>(&fm), sizeof fm);
            in.read(reinterpret_cast<char*>(&count), sizeof count);
            if (in && std::memcmp(magic, "HTSV", 4) == 0 && ver == 1 && hash == content_hash_ &&
                fnorm == norm && fm == m_) {
                auto vl = std::make_unique<VecList>(m_);
                vl->count = count;
                vl->basis.resize(count * m_);
                vl->amb.resize(count * m_);
                in.read(reinterpret_cast<char*>(vl->basis.data()),
                        static_cast<std::streamsize>(vl->basis.size() * sizeof(std::int32_t)));
                in.read(reinterpret_cast<char*>(vl->amb.data()),
                        static_cast<std::streamsize>(vl->amb.size() * sizeof(std::int64_t)));
                if (in) loaded = std::move(vl);
            }
        }
    }

    const bool from_disk = loaded != nullptr;
    std::unique_ptr<VecList> vl =
        from_disk ? std::move(loaded) : std::make_unique<VecList>(enumerate_norm(norm));
    if (!from_disk && !cache_dir_.empty()) {
        std::filesystem::create_directories(cache_dir_);
        std::filesystem::path p =
            std::filesystem::path(cache_dir_) /
            ("sv_" + hex64(content_hash_) + "_" + std::to_string(norm) + ".bin");
        std::ofstream outf(p, std::ios::binary | std::ios::trunc);
        std::uint32_t ver = 1;
        std::uint64_t hash = content_hash_, count = vl->count;
        std::int64_t fnorm = norm;
        std::int32_t fm = m_;
        outf.write("HTSV", 4);
        outf.write(reinterpret_cast<const char*>(&ver), sizeof ver);
        outf.write(reinterpret_cast<const char*>(&hash), sizeof hash);
        outf.write(reinterpret_cast<const char*>(&fnorm), sizeof fnorm);
        outf.write(reinterpret_cast<const char*>(&fm), sizeof fm);
        outf.write(reinterpret_cast<const char*>(&count), sizeof count);
        outf.write(reinterpret_cast<const char*>(vl->basis.data()),
                   static_cast<std::streamsize>(vl->basis.size() * sizeof(std::int32_t)));
        outf.write(reinterpret_cast<const char*>(vl->amb.data()),
                   static_cast<std::streamsize>(vl->amb.size() * sizeof(std::int64_t)));
    }
    std::lock_guard<std::mutex> lk(cache_->mu);
    auto [it, inserted] = cache_->shorts.emplace(norm, std::move(vl));
    return *it->second;
}

const VecIndex& Lattice::shorts_index(long norm) const {
    const VecList& vl = shorts(norm);
    std::lock_guard<std::mutex> lk(cache_->mu);
    auto it = cache_->index.find(norm);
    if (it != cache_->index.end()) return *it->second;
    auto idx = std::make_unique<VecIndex>(vl);
    auto& ref = *idx;
    cache_->index[norm] = std::move(idx);
    return ref;
}

bool Lattice::shorts_cached(long norm) const {
    std::lock_guard<std::mutex> lk(cache_->mu);
    return cache_->shorts.count(norm) > 0;
}

VecList Lattice::constrained_filter(long norm, const std::vector<Anchor>& anchors) const {
    const VecList& all = shorts(norm);
    VecList out(m_);
    std::vector<std::vector<std::int64_t>> w;
    for (const auto& a : anchors) {
        std::vector<std::int64_t> row(m_);
        for (int i = 0; i < m_; ++i) {
            std::int64_t s = 0;
            for (int j = 0; j < m_; ++j)
                s += g64_[static_cast<std::size_t>(i) * m_ + j] * a.z[j];
            row[i] = s;
        }
        w.push_back(std::move(row));
    }
    for (std::size_t i = 0; i < all.count; ++i) {
        const std::int32_t* z = all.basis_row(i);
        bool ok = true;
        for (std::size_t k = 0; k < anchors.size(); ++k) {
            std::int64_t s = 0;
            for (int j = 0; j < m_; ++j) s += w[k][j] * z[j];
            if (s != anchors[k].ip) { ok = false; break; }
        }
        if (ok) out.push(z, all.amb_row(i));
    }
    return out; // already canonical (source list sorted)
}

VecList Lattice::constrained_fiber(long norm, const std::vector<Anchor>& anchors) const {
    VecList out(m_);
    const int j = static_cast<int>(anchors.size());
    ZMat a(j, m_);
    std::vector<Int> t(j);
    for (int r = 0; r < j; ++r) {
        for (int i = 0; i < m_; ++i) {
            Int s = 0;
            for (int c = 0; c < m_; ++c) s += gram_.at(i, c) * anchors[r].z[c];
            a.at(r, i) = s;
        }
        t[r] = anchors[r].ip;
    }
    auto x0 = z_solve(a, t);
    if (!x0) return out;

    ZMat k = z_kernel(a);
    const int r = k.cols;
    std::vector<std::int32_t> zb(m_);
    std::vector<std::int64_t> za(m_);
    auto emit_x = [&](const std::vector<Int>& x) {
        for (int i = 0; i < m_; ++i) {
            if (!x[i].fits_sint_p()) throw Error("lattice: coordinate overflow");
            zb[i] = static_cast<std::int32_t>(x[i].get_si());
        }
        if (norm_of(zb.data()) != norm) return;
        amb_scaled_from_basis(zb.data(), za.data());
        out.push(zb.data(), za.data());
    };

    if (r == 0) {
        emit_x(*x0);
        out.sort_canonical();
        return out;
    }

    ZMat gk = zmul(zmul(k.transpose(), gram_), k);
    std::vector<Rational> lvec(r, Rational(0));
    {
        // l = k^T gram x0
        std::vector<Int> gx(m_, Int(0));
        for (int i = 0; i < m_; ++i)
            for (int c = 0; c < m_; ++c)
                if ((*x0)[c] != 0) gx[i] += gram_.at(i, c) * (*x0)[c];
        for (int i = 0; i < r; ++i) {
            Int s = 0;
            for (int c = 0; c < m_; ++c)
                if (gx[c] != 0) s += k.at(c, i) * gx[c];
            lvec[i] = Rational(s);
        }
    }
    Int x0n = 0;
    for (int i = 0; i < m_; ++i)
        for (int c = 0; c < m_; ++c)
            if ((*x0)[i] != 0 && (*x0)[c] != 0) x0n += (*x0)[i] * gram_.at(i, c) * (*x0)[c];
    Rational c0 = Rational(norm) - Rational(x0n);

    // center mu = -gk^{-1} l  (solve exactly)
    QMat gkq = q_from_z(gk);
    QMat gkinv = qinverse(gkq);
    std::vector<Rational> mu = qmul_vec(gkinv, lvec);
    for (auto& v : mu) v = -v;
    Rational target = c0;
    {
        // + mu^T gk mu
        std::vector<Rational> gmu = qmul_vec(gkq, mu);
        for (int i = 0; i < r; ++i) target += mu[i] * gmu[i];
    }
    if (target < 0) return out;

    ZMat uk = lll_unimodular(gk);
    ZMat gk_red = zmul(zmul(uk.transpose(), gk), uk);
    Ldlt ld = ldlt(q_from_z(gk_red));
    QMat ukinv = qinverse(q_from_z(uk));
    std::vector<Rational> mu_red = qmul_vec(ukinv, mu);
    std::vector<Rational> center(r);
    for (int i = 0; i < r; ++i) center[i] = -mu_red[i];

    std::vector<Int> x(m_);
    enumerate_ellipsoid(ld, center, target, /*half=*/false, [&](const std::vector<long>& wred) {
        // x = x0 + k * uk * wred
        std::vector<Int> wv(r, Int(0));
        for (int i = 0; i < r; ++i)
            for (int c = 0; c < r; ++c)
                if (wred[c] != 0) wv[i] += uk.at(i, c) * static_cast<long>(wred[c]);
        for (int i = 0; i < m_; ++i) {
            Int s = (*x0)[i];
            for (int c = 0; c < r; ++c)
                if (wv[c] != 0) s += k.at(i, c) * wv[c];
            x[i] = s;
        }
        emit_x(x);
    });
    out.sort_canonical();
    return out;
}

VecList Lattice::constrained(long norm, const std::vector<Anchor>& anchors, int strategy) const {
    if (anchors.empty() && strategy != 2) {
        const VecList& all = shorts(norm);
        VecList out(m_);
        out.basis = all.basis;
        out.amb = all.amb;
        out.count = all.count;
        return out;
    }
    if (strategy == 1) return constrained_filter(norm, anchors);
    if (strategy == 2) return constrained_fiber(norm, anchors);
    // auto: use the cached list when it exists, otherwise the fiber route
    if (shorts_cached(norm)) return constrained_filter(norm, anchors);
    return constrained_fiber(norm, anchors);
}

long Lattice::min_norm() const {
    {
        std::lock_guard<std::mutex> lk(cache_->mu);
        if (cache_->min_norm) return *cache_->min_norm;
    }
    ensure_reduction();
    long bound = 0;
    for (int i = 0; i < m_; ++i) {
        Int d = cache_->red_gram.at(i, i);
        long v = d.get_si();
        if (bound == 0 || v < bound) bound = v;
    }
    long step = even_ ? 2 : 1;
    long start = even_ ? 2 : 1;
    long found = bound;
    for (long t = start; t <= bound; t += step) {
        if (shorts(t).count > 0) { found = t; break; }
    }
    std::lock_guard<std::mutex> lk(cache_->mu);
    cache_->min_norm = found;
    return found;
}

std::vector<AmbVec> Lattice::short_vectors(long norm) const {
    const VecList& vl = shorts(norm);
    std::vector<AmbVec> out;
    out.reserve(vl.count);
    for (std::size_t i = 0; i < vl.count; ++i) {
        AmbVec v(m_);
        const std::int64_t* row = vl.amb_row(i);
        for (int c = 0; c < m_; ++c) {
            v[c] = Rational(Int(row[c]), amb_den_);
            v[c].canonicalize();
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<AmbVec> Lattice::constrained_vectors(
    long norm, const std::vector<std::pair<AmbVec, Int>>& anchors) const {
    std::vector<Anchor> as;
    for (const auto& [y, ip] : anchors) {
        auto z = basis_coords(y);
        if (!z) throw Error("lattice: anchor vector is not a lattice member");
        Anchor a;
        a.z.resize(m_);
        for (int i = 0; i < m_; ++i) {
            if (!(*z)[i].fits_sint_p()) throw Error("lattice: anchor coordinate overflow");
            a.z[i] = static_cast<std::int32_t>((*z)[i].get_si());
        }
        if (!ip.fits_slong_p()) throw Error("lattice: anchor inner product overflow");
        a.ip = ip.get_si();
        as.push_back(std::move(a));
    }
    VecList vl = constrained(norm, as);
    std::vector<AmbVec> out;
    out.reserve(vl.count);
    for (std::size_t i = 0; i < vl.count; ++i) {
        AmbVec v(m_);
        const std::int64_t* row = vl.amb_row(i);
        for (int c = 0; c < m_; ++c) {
            v[c] = Rational(Int(row[c]), amb_den_);
            v[c].canonicalize();
        }
        out.push_back(std::move(v));
    }
    return out;
}

Rational m_of_matrix(const ZMat& t) {
    Rational m(min_norm_of_gram(t), 2);
    m.canonicalize();
    return m;
}

long min_norm_of_gram(const ZMat& t) {
    const int n = t.rows;
    QMat amb = q_from_z(t);
    std::vector<AmbVec> gens;
    for (int i = 0; i < n; ++i) {
        AmbVec e(n, Rational(0));
        e[i] = 1;
        gens.push_back(std::move(e));
    }
    Lattice l = Lattice::from_generators(amb, gens);
    return l.min_norm();
}

std::size_t short_vector_count(const Lattice& l, long norm) {
    return l.shorts(norm).count;
}

} // namespace harmtheta
