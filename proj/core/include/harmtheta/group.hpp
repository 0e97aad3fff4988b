#pragma once

#include "harmtheta/imat.hpp"
#include "harmtheta/lattice.hpp"
#include "harmtheta/smallmat.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace harmtheta {

/// Exact linear map preserving the ambient Gram form and the lattice.
struct Isometry {
    QMat mat; // ambient-frame action
};

/// Check the isometry invariants (form preservation, lattice stability,
/// determinant +-1) and return the integral basis-frame matrix.
IMat validate_isometry(const Lattice& lat, const QMat& ambient);

using Word = std::vector<std::int32_t>; // letter k>=0: gens[k]; k<0: gens[-k-1]^{-1}

Word inverse_word(const Word& w);

class GeneratedGroup;

/// Result of subgroup extraction: K plus right-coset representatives of K\H.
struct SubgroupSplit;

/// Orbit partition of a finite vector set under a group, with witnesses.
struct TupleOrbitIndex {
    std::vector<std::size_t> rep_of;  // member -> index of its representative member
    std::vector<std::size_t> reps;    // indices of representatives (canonical minima)
    std::vector<Word> witness;        // witness[i] maps member i to its representative
    std::vector<Int> orbit_size;      // per member: size of its orbit
};

/// Group of lattice isometries given by generators, with a stabilizer chain
/// over the union of short-vector sets of the seed norms.
class GeneratedGroup {
public:
    /// Build a group; throws NotIsometry / UnfaithfulAction per the contract.
    static GeneratedGroup build(const Lattice& lat, const std::vector<QMat>& ambient_gens,
                                const std::vector<long>& seed_norms,
                                std::uint64_t rng_seed = 0x5eed);

    const Lattice& lattice() const { return *lat_; }
    const Int& order() const { return order_; }
    const std::vector<long>& seed_norms() const { return seed_norms_; }
    int num_generators() const { return static_cast<int>(gen_basis_.size()); }
    const IMat& generator_basis(int i) const { return gen_basis_[i]; }
    QMat generator_ambient(int i) const;
    std::uint64_t content_hash() const { return content_hash_; }

    // --- domain (union of short-vector blocks) ---
    std::size_t domain_size() const { return domain_.count; }
    const VecList& domain() const { return domain_; }
    std::int64_t domain_find(const std::int32_t* basis_vec) const;
    const std::int32_t* domain_vec(std::size_t id) const { return domain_.basis_row(id); }
    /// [offset, offset+count) of the block holding vectors of this norm
    std::pair<std::size_t, std::size_t> norm_block(long norm) const;
    bool norm_in_domain(long norm) const;

    // --- word action ---
    std::int64_t apply_letter(std::int32_t letter, std::int64_t p) const;
    std::int64_t apply_word(const Word& w, std::int64_t p) const;
    void apply_word_vec(const Word& w, const std::int32_t* in, std::int32_t* out) const;
    IMat word_matrix(const Word& w) const;
    QMat word_matrix_ambient(const Word& w) const;
    bool word_is_identity(const Word& w) const;

    /// sift through the chain; true iff the element is in the group
    bool contains(const QMat& ambient) const;
    bool word_in_group(const Word& w) const;

    /// orbit of a domain point under the whole group: points + transversal
    /// words (walkable on demand)
    struct PointOrbit {
        std::vector<std::int64_t> points;
        std::unordered_map<std::int64_t, std::pair<std::int64_t, std::int32_t>> tree;
        std::int64_t root = -1;
        Word path_from_root(std::int64_t p) const; // word w with w(root) = p
    };
    PointOrbit orbit_of_point(std::int64_t p) const;

    /// random element as a word over the generator alphabet
    Word random_word(std::mt19937_64& rng) const;

    /// enumerate all elements (matrices, basis frame); throws if order > cap
    std::vector<IMat> all_elements(std::size_t cap) const;

    /// independent exhaustive order computation by closure over the images of
    /// the spanning points (exact; throws BudgetExceeded above cap)
    Int count_elements(std::size_t cap) const;

    // incremental construction (used by subgroup extraction)
    static GeneratedGroup incremental(const Lattice& lat, const std::vector<long>& seed_norms);
    /// sift the element in; returns true if the group grew
    bool extend_with_matrix(const IMat& basis_mat);
    void finalize(std::uint64_t rng_seed = 0x5eed);

    // --- spec surface operations ---

    /// orbit partition of X (vectors given in ambient coordinates); X must be
    /// group-closed, else NotClosed
    TupleOrbitIndex orbit_index(const std::vector<AmbVec>& x) const;

    /// pointwise stabilizer of the given lattice vectors
    GeneratedGroup pointwise_stabilizer(const std::vector<AmbVec>& fixed) const;

    /// Subgroup K = {s in H : member(s)} plus right-coset representatives of
    /// K\H. `label` must be a canonical invariant of the right coset: it is
    /// called with sigma^{-1} (basis frame) and its value must satisfy
    /// label(sigma) == label(rho) iff K sigma == K rho. When absent a
    /// quadratic membership-test fallback is used (small index only).
    struct CosetLabel {
        std::uint64_t digest;
        std::string canon;
        bool operator==(const CosetLabel&) const = default;
    };
    using MemberFn = std::function<bool(const QMat&)>;
    using LabelFn = std::function<CosetLabel(const IMat& sigma_inv_basis)>;
    SubgroupSplit subgroup_by_predicate(const MemberFn& member, const LabelFn& label = nullptr,
                                        std::size_t index_cap = 1u << 22) const;

    /// membership test for a basis-frame matrix
    bool member_basis(const IMat& m) const;
    /// current product of chain orbit sizes (exact order once finalized)
    Int order_lower_bound() const;

    // internal chain inspection (tests)
    int chain_depth() const { return static_cast<int>(levels_.size()); }
    std::vector<std::size_t> chain_orbit_sizes() const;

private:
    GeneratedGroup() = default;

    struct Level {
        std::int64_t base = -1;
        std::vector<std::int64_t> orbit;
        std::unordered_map<std::int64_t, std::pair<std::int64_t, std::int32_t>> tree;
        std::vector<std::int32_t> gens; // letters of strong gens first moving this base
    };

    // alphabet: every strong generator is materialized as a letter with its
    // permutation, inverse permutation, and exact matrices
    struct Letter {
        std::vector<std::int32_t> fwd, inv;
        IMat mat, mat_inv;
    };

    void build_domain();
    std::vector<std::int32_t> matrix_to_perm(const IMat& m) const;
    int add_letter(const IMat& m);
    void pick_spanning_points();
    static Word transversal_path(const Level& lv, std::int64_t p);
    void rebuild_orbit(std::size_t level);
    /// sift; true when the word reduces to the identity, false when a strong
    /// generator was inserted
    bool sift_insert(Word w);
    void schreier_sims(std::uint64_t seed);
    void deterministic_verify();
    void recompute_order();

    const Lattice* lat_ = nullptr;
    std::vector<long> seed_norms_;
    std::vector<QMat> gen_ambient_;
    std::vector<IMat> gen_basis_;
    std::vector<int> gen_letter_; // generator index -> alphabet letter
    VecList domain_;
    std::vector<std::pair<long, std::pair<std::size_t, std::size_t>>> blocks_; // norm -> [off, cnt)
    std::unordered_map<std::uint64_t, std::vector<std::int64_t>> domain_map_;  // by basis row
    std::vector<Letter> letters_;
    std::vector<Level> levels_;
    std::vector<std::int64_t> span_points_;
    Int order_ = 1;
    std::uint64_t content_hash_ = 0;
};

struct SubgroupSplit {
    GeneratedGroup subgroup;
    std::vector<Word> coset_words; // right-coset representatives of K\H
    std::vector<IMat> coset_basis; // same, as basis-frame matrices
};

/// O(L)_h machinery: subgroup of `ambient_group` preserving span(h_1..h_n),
/// its right-coset representatives, and the multiplier matrices of its
/// generators. Throws NonRationalResult-style errors only downstream.
struct OLhResult {
    GeneratedGroup group;          // K = stabilizer of the span inside H
    std::vector<Word> coset_words; // K\H representatives
    std::vector<IMat> coset_basis;
    std::vector<SMat> multipliers; // m_sigma for each generator of K
    Int index;                     // [H : K]
};
OLhResult compute_olh(const Lattice& lat, const SMat& h, const GeneratedGroup& ambient_group);

/// m_sigma with (sigma^{-1} h_1, ..., sigma^{-1} h_n) = (h_1,...,h_n) m_sigma
SMat multiplier_of(const Lattice& lat, const SMat& h, const QMat& sigma_ambient);

} // namespace harmtheta
