#pragma once

#include "harmtheta/linalg.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace harmtheta {

/// Ambient rational coordinates of a lattice vector (the frame the catalog
/// data is written in).
using AmbVec = std::vector<Rational>;

/// Flat list of lattice vectors in both frames: integer coordinates w.r.t.
/// the canonical basis, and ambient coordinates scaled by the lattice's
/// common denominator. Rows are kept in canonical (lex-on-ambient) order
/// whenever the producer says so.
struct VecList {
    int m = 0;
    std::size_t count = 0;
    std::vector<std::int32_t> basis; // count * m
    std::vector<std::int64_t> amb;   // count * m

    explicit VecList(int rank = 0) : m(rank) {}

    const std::int32_t* basis_row(std::size_t i) const { return basis.data() + i * m; }
    const std::int64_t* amb_row(std::size_t i) const { return amb.data() + i * m; }
    void push(const std::int32_t* z, const std::int64_t* a);
    void sort_canonical();
};

/// Hash index over the ambient rows of a VecList.
class VecIndex {
public:
    VecIndex() = default;
    explicit VecIndex(const VecList& vl);
    /// index of the row with these scaled ambient coordinates, or -1
    std::int64_t find(const std::int64_t* amb) const;

private:
    const VecList* vl_ = nullptr;
    std::unordered_map<std::uint64_t, std::vector<std::int32_t>> buckets_;
};

std::uint64_t hash_i64_row(const std::int64_t* p, int m);
int compare_i64_row(const std::int64_t* a, const std::int64_t* b, int m);

struct Anchor {
    std::vector<std::int32_t> z; // basis coordinates
    long ip = 0;                 // required inner product
};

/// Even lattice presented by an ambient Gram matrix and generating vectors.
/// The canonical basis is the column Hermite normal form of the generator
/// span; everything downstream works in integer basis coordinates against the
/// integral basis Gram.
class Lattice {
public:
    static Lattice from_generators(QMat ambient_gram, const std::vector<AmbVec>& generators);

    int rank() const { return m_; }
    const QMat& ambient_gram() const { return ambient_gram_; }
    /// columns are the canonical Z-basis in ambient coordinates
    const QMat& basis() const { return basis_; }
    const QMat& basis_inverse() const { return basis_inv_; }
    const ZMat& gram() const { return gram_; }
    Int determinant() const { return det_; }
    bool is_even() const { return even_; }
    bool positive_definite() const { return pos_def_; }
    const Int& amb_den() const { return amb_den_; }

    long min_norm() const;

    bool contains(const AmbVec& x) const { return basis_coords(x).has_value(); }
    std::optional<std::vector<Int>> basis_coords(const AmbVec& x) const;
    AmbVec ambient_from_basis(const std::vector<Int>& z) const;

    /// all x with (x,x) = norm, canonical order (spec surface)
    std::vector<AmbVec> short_vectors(long norm) const;
    std::vector<AmbVec> constrained_vectors(long norm,
                                            const std::vector<std::pair<AmbVec, Int>>& anchors) const;

    // --- engine surface (integer basis frame) ---

    /// cached canonical list of norm-`norm` vectors
    const VecList& shorts(long norm) const;
    const VecIndex& shorts_index(long norm) const;
    bool shorts_cached(long norm) const;

    /// all x with (x,x) = norm and (x, anchor.z) = anchor.ip for each anchor;
    /// `strategy`: 0 auto, 1 filter cached list, 2 fiber enumeration
    VecList constrained(long norm, const std::vector<Anchor>& anchors, int strategy = 0) const;

    long dot(const std::int32_t* a, const std::int32_t* b) const;
    long norm_of(const std::int32_t* z) const { return dot(z, z); }
    void amb_scaled_from_basis(const std::int32_t* z, std::int64_t* out) const;

    std::uint64_t content_hash() const { return content_hash_; }

    /// when set, shorts() consults/writes binary cache files under dir
    void enable_disk_cache(std::string dir) { cache_dir_ = std::move(dir); }

private:
    Lattice() = default;

    VecList enumerate_norm(long norm) const;
    VecList constrained_filter(long norm, const std::vector<Anchor>& anchors) const;
    VecList constrained_fiber(long norm, const std::vector<Anchor>& anchors) const;
    void ensure_reduction() const;

    int m_ = 0;
    QMat ambient_gram_;
    QMat basis_, basis_inv_;
    ZMat gram_;
    Int det_;
    bool even_ = false;
    bool pos_def_ = false;
    Int amb_den_;                       // lcm denominator of basis entries
    std::vector<std::int64_t> bscaled_; // basis * amb_den, row-major int64
    std::vector<std::int64_t> g64_;     // gram as int64
    std::uint64_t content_hash_ = 0;

    // lazily built enumeration backend and result caches; boxed so the
    // lattice itself stays movable
    struct Cache {
        ZMat red_u; // unimodular: reduced basis = basis * red_u
        ZMat red_gram;
        Ldlt red_ldlt;
        bool reduced = false;
        std::mutex mu;
        std::map<long, std::unique_ptr<VecList>> shorts;
        std::map<long, std::unique_ptr<VecIndex>> index;
        std::optional<long> min_norm;
    };
    std::unique_ptr<Cache> cache_ = std::make_unique<Cache>();
    std::string cache_dir_;
};

/// m(T) = min_{x != 0} (1/2) x^T T x for positive definite even T
Rational m_of_matrix(const ZMat& t);
long min_norm_of_gram(const ZMat& t);

/// count (exactly) the vectors of the given norm; convenience over shorts()
std::size_t short_vector_count(const Lattice& l, long norm);

} // namespace harmtheta
