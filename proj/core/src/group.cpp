#include "harmtheta/group.hpp"

#include "harmtheta/errors.hpp"

#include <algorithm>
#include <deque>
#include <unordered_set>

namespace harmtheta {

namespace {

std::uint64_t hash_i32_row(const std::int32_t* p, int m) {
    Fnv64 h;
    h.feed(p, sizeof(std::int32_t) * static_cast<std::size_t>(m));
    return h.digest();
}

std::uint64_t hash_imat(const IMat& m) {
    Fnv64 h;
    h.feed(m.e.data(), m.e.size() * sizeof(std::int64_t));
    return h.digest();
}

IMat integer_inverse(const IMat& m) {
    QMat inv = qinverse(qmat_from_imat(m));
    IMat out(m.n);
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) {
            const Rational& v = inv.at(i, j);
            if (!is_integer(v)) throw Error("group: inverse not integral");
            out.at(i, j) = v.get_num().get_si();
        }
    return out;
}

} // namespace

IMat validate_isometry(const Lattice& lat, const QMat& ambient) {
    const int m = lat.rank();
    if (ambient.rows != m || ambient.cols != m) throw NotIsometry("isometry: wrong shape");
    QMat mt = ambient.transpose();
    QMat check = qmul(qmul(mt, lat.ambient_gram()), ambient);
    if (!(check == lat.ambient_gram()))
        throw NotIsometry("isometry: does not preserve the ambient form");
    QMat bi = qmul(qmul(lat.basis_inverse(), ambient), lat.basis());
    IMat out(m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const Rational& v = bi.at(i, j);
            if (!is_integer(v)) throw NotIsometry("isometry: does not stabilize the lattice");
            if (!v.get_num().fits_slong_p()) throw NotIsometry("isometry: entry overflow");
            out.at(i, j) = v.get_num().get_si();
        }
    Int det = zdet(zmat_from_imat(out));
    if (det != 1 && det != -1) throw NotIsometry("isometry: basis determinant is not a unit");
    return out;
}

Word inverse_word(const Word& w) {
    Word r(w.rbegin(), w.rend());
    for (auto& l : r) l = -l - 1;
    return r;
}

GeneratedGroup GeneratedGroup::incremental(const Lattice& lat,
                                           const std::vector<long>& seed_norms) {
    GeneratedGroup g;
    g.lat_ = &lat;
    g.seed_norms_ = seed_norms;
    std::sort(g.seed_norms_.begin(), g.seed_norms_.end());
    g.seed_norms_.erase(std::unique(g.seed_norms_.begin(), g.seed_norms_.end()),
                        g.seed_norms_.end());
    g.build_domain();
    g.pick_spanning_points();
    return g;
}

GeneratedGroup GeneratedGroup::build(const Lattice& lat, const std::vector<QMat>& ambient_gens,
                                     const std::vector<long>& seed_norms, std::uint64_t rng_seed) {
    GeneratedGroup g = incremental(lat, seed_norms);
    for (const QMat& a : ambient_gens) {
        IMat bi = validate_isometry(lat, a);
        g.gen_ambient_.push_back(a);
        g.gen_basis_.push_back(bi);
        g.gen_letter_.push_back(g.add_letter(bi));
        g.sift_insert(Word{static_cast<std::int32_t>(g.gen_letter_.back())});
    }
    g.finalize(rng_seed);
    return g;
}

void GeneratedGroup::finalize(std::uint64_t rng_seed) {
    schreier_sims(rng_seed);
    deterministic_verify();
    recompute_order();
    Fnv64 h;
    h.feed_u64(lat_->content_hash());
    for (const auto& a : gen_ambient_)
        for (const auto& q : a.e) h.feed_rational(q);
    content_hash_ = h.digest();
}

bool GeneratedGroup::extend_with_matrix(const IMat& basis_mat) {
    // membership first; only grow on new elements
    if (member_basis(basis_mat)) return false;
    gen_basis_.push_back(basis_mat);
    gen_ambient_.push_back(
        qmul(qmul(lat_->basis(), qmat_from_imat(basis_mat)), lat_->basis_inverse()));
    gen_letter_.push_back(add_letter(basis_mat));
    sift_insert(Word{static_cast<std::int32_t>(gen_letter_.back())});
    recompute_order();
    return true;
}

void GeneratedGroup::build_domain() {
    const Lattice& l = *lat_;
    domain_ = VecList(l.rank());
    blocks_.clear();
    for (long n : seed_norms_) {
        const VecList& vl = l.shorts(n);
        std::size_t off = domain_.count;
        for (std::size_t i = 0; i < vl.count; ++i) domain_.push(vl.basis_row(i), vl.amb_row(i));
        blocks_.push_back({n, {off, vl.count}});
    }
    domain_map_.clear();
    domain_map_.reserve(domain_.count * 2);
    for (std::size_t i = 0; i < domain_.count; ++i)
        domain_map_[hash_i32_row(domain_.basis_row(i), domain_.m)].push_back(
            static_cast<std::int64_t>(i));
}

std::int64_t GeneratedGroup::domain_find(const std::int32_t* basis_vec) const {
    auto it = domain_map_.find(hash_i32_row(basis_vec, domain_.m));
    if (it == domain_map_.end()) return -1;
    for (std::int64_t id : it->second) {
        const std::int32_t* row = domain_.basis_row(static_cast<std::size_t>(id));
        if (std::equal(row, row + domain_.m, basis_vec)) return id;
    }
    return -1;
}

std::pair<std::size_t, std::size_t> GeneratedGroup::norm_block(long norm) const {
    for (const auto& [n, blk] : blocks_)
        if (n == norm) return blk;
    throw Error("group: norm " + std::to_string(norm) + " not in domain");
}

bool GeneratedGroup::norm_in_domain(long norm) const {
    for (const auto& [n, blk] : blocks_)
        if (n == norm) return true;
    return false;
}

void GeneratedGroup::pick_spanning_points() {
    const int m = lat_->rank();
    span_points_.clear();
    std::vector<std::vector<Rational>> rows; // reduced row echelon, grown greedily
    for (std::size_t id = 0; id < domain_.count && static_cast<int>(span_points_.size()) < m;
         ++id) {
        const std::int32_t* z = domain_.basis_row(id);
        std::vector<Rational> cand(m);
        for (int i = 0; i < m; ++i) cand[i] = Rational(static_cast<long>(z[i]));
        for (const auto& r : rows) {
            int lead = -1;
            for (int i = 0; i < m; ++i)
                if (r[i] != 0) { lead = i; break; }
            if (lead >= 0 && cand[lead] != 0) {
                Rational f = cand[lead] / r[lead];
                for (int i = 0; i < m; ++i) cand[i] -= f * r[i];
            }
        }
        bool nonzero = false;
        for (int i = 0; i < m; ++i)
            if (cand[i] != 0) { nonzero = true; break; }
        if (nonzero) {
            rows.push_back(std::move(cand));
            span_points_.push_back(static_cast<std::int64_t>(id));
        }
    }
    if (static_cast<int>(span_points_.size()) < m)
        throw UnfaithfulAction("group: seed-norm vectors do not span the space");
}

std::vector<std::int32_t> GeneratedGroup::matrix_to_perm(const IMat& m) const {
    std::vector<std::int32_t> perm(domain_.count);
    std::vector<std::int32_t> img(domain_.m);
    for (std::size_t id = 0; id < domain_.count; ++id) {
        imat_apply(m, domain_.basis_row(id), img.data());
        std::int64_t t = domain_find(img.data());
        if (t < 0) throw NotIsometry("group: element leaves the action domain");
        perm[id] = static_cast<std::int32_t>(t);
    }
    return perm;
}

int GeneratedGroup::add_letter(const IMat& m) {
    Letter l;
    l.fwd = matrix_to_perm(m);
    l.inv.resize(l.fwd.size());
    for (std::size_t i = 0; i < l.fwd.size(); ++i) l.inv[l.fwd[i]] = static_cast<std::int32_t>(i);
    l.mat = m;
    l.mat_inv = integer_inverse(m);
    letters_.push_back(std::move(l));
    return static_cast<int>(letters_.size()) - 1;
}

std::int64_t GeneratedGroup::apply_letter(std::int32_t letter, std::int64_t p) const {
    if (letter >= 0) return letters_[letter].fwd[p];
    return letters_[-letter - 1].inv[p];
}

std::int64_t GeneratedGroup::apply_word(const Word& w, std::int64_t p) const {
    for (std::int32_t l : w) p = apply_letter(l, p);
    return p;
}

void GeneratedGroup::apply_word_vec(const Word& w, const std::int32_t* in,
                                    std::int32_t* out) const {
    std::vector<std::int32_t> cur(in, in + lat_->rank());
    std::vector<std::int32_t> nxt(lat_->rank());
    for (std::int32_t l : w) {
        const IMat& m = l >= 0 ? letters_[l].mat : letters_[-l - 1].mat_inv;
        imat_apply(m, cur.data(), nxt.data());
        cur.swap(nxt);
    }
    std::copy(cur.begin(), cur.end(), out);
}

IMat GeneratedGroup::word_matrix(const Word& w) const {
    IMat acc = IMat::identity(lat_->rank());
    // word applies left to right, so the matrix is (last letter) * ... * (first)
    for (std::int32_t l : w) {
        const IMat& m = l >= 0 ? letters_[l].mat : letters_[-l - 1].mat_inv;
        acc = imat_mul(m, acc);
    }
    return acc;
}

QMat GeneratedGroup::word_matrix_ambient(const Word& w) const {
    return qmul(qmul(lat_->basis(), qmat_from_imat(word_matrix(w))), lat_->basis_inverse());
}

bool GeneratedGroup::word_is_identity(const Word& w) const {
    for (std::int64_t p : span_points_)
        if (apply_word(w, p) != p) return false;
    return true;
}

QMat GeneratedGroup::generator_ambient(int i) const { return gen_ambient_[i]; }

// ---- chain machinery ----

Word GeneratedGroup::transversal_path(const Level& lv, std::int64_t p) {
    Word w;
    while (p != lv.base) {
        auto it = lv.tree.find(p);
        if (it == lv.tree.end()) throw Error("group: point outside orbit");
        w.push_back(it->second.second);
        p = it->second.first;
    }
    std::reverse(w.begin(), w.end());
    return w;
}

void GeneratedGroup::rebuild_orbit(std::size_t level) {
    Level& lv = levels_[level];
    lv.orbit.clear();
    lv.tree.clear();
    lv.orbit.push_back(lv.base);
    lv.tree[lv.base] = {lv.base, 0};
    std::vector<std::int32_t> gens;
    for (std::size_t j = level; j < levels_.size(); ++j)
        for (std::int32_t g : levels_[j].gens) gens.push_back(g);
    std::size_t head = 0;
    while (head < lv.orbit.size()) {
        std::int64_t q = lv.orbit[head++];
        for (std::int32_t g : gens) {
            for (std::int32_t letter : {g, static_cast<std::int32_t>(-g - 1)}) {
                std::int64_t t = apply_letter(letter, q);
                if (lv.tree.count(t)) continue;
                lv.tree[t] = {q, letter};
                lv.orbit.push_back(t);
            }
        }
    }
}

bool GeneratedGroup::sift_insert(Word w) {
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        Level& lv = levels_[i];
        std::int64_t p = apply_word(w, lv.base);
        auto it = lv.tree.find(p);
        if (it == lv.tree.end()) {
            // new strong generator at this level
            std::int32_t letter;
            if (w.size() == 1 && w[0] >= 0)
                letter = w[0];
            else
                letter = static_cast<std::int32_t>(add_letter(word_matrix(w)));
            lv.gens.push_back(letter);
            for (std::size_t j = 0; j <= i; ++j) rebuild_orbit(j);
            return false;
        }
        Word back = inverse_word(transversal_path(lv, p));
        w.insert(w.end(), back.begin(), back.end());
    }
    if (word_is_identity(w)) return true;
    // residual fixes all current bases: open a new level at a moved point
    std::int64_t nb = -1;
    for (std::int64_t s : span_points_)
        if (apply_word(w, s) != s) { nb = s; break; }
    if (nb < 0) throw Error("group: non-identity residual fixes the spanning set");
    Level lv;
    lv.base = nb;
    levels_.push_back(std::move(lv));
    std::int32_t letter;
    if (w.size() == 1 && w[0] >= 0)
        letter = w[0];
    else
        letter = static_cast<std::int32_t>(add_letter(word_matrix(w)));
    levels_.back().gens.push_back(letter);
    for (std::size_t j = 0; j < levels_.size(); ++j) rebuild_orbit(j);
    return false;
}

void GeneratedGroup::schreier_sims(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    if (letters_.empty()) return;
    int consecutive = 0;
    const int wanted = 24;
    while (consecutive < wanted) {
        Word w = random_word(rng);
        if (sift_insert(std::move(w)))
            ++consecutive;
        else
            consecutive = 0;
    }
}

void GeneratedGroup::deterministic_verify() {
    // Sims criterion: every Schreier generator sifts to the identity
    bool clean = false;
    while (!clean) {
        clean = true;
        for (std::size_t i = 0; i < levels_.size() && clean; ++i) {
            Level& lv = levels_[i];
            std::vector<std::int32_t> gens;
            for (std::size_t j = i; j < levels_.size(); ++j)
                for (std::int32_t g : levels_[j].gens) gens.push_back(g);
            for (std::size_t oi = 0; oi < lv.orbit.size() && clean; ++oi) {
                std::int64_t p = lv.orbit[oi];
                Word up = transversal_path(lv, p);
                for (std::int32_t g : gens) {
                    std::int64_t q = apply_letter(g, p);
                    Word s = up;
                    s.push_back(g);
                    Word back = inverse_word(transversal_path(lv, q));
                    s.insert(s.end(), back.begin(), back.end());
                    if (!sift_insert(std::move(s))) {
                        clean = false;
                        break;
                    }
                }
            }
        }
    }
}

void GeneratedGroup::recompute_order() {
    order_ = 1;
    for (const auto& lv : levels_) order_ *= static_cast<unsigned long>(lv.orbit.size());
}

std::vector<std::size_t> GeneratedGroup::chain_orbit_sizes() const {
    std::vector<std::size_t> out;
    for (const auto& lv : levels_) out.push_back(lv.orbit.size());
    return out;
}

bool GeneratedGroup::member_basis(const IMat& m) const {
    // hybrid sift: element is (word w) o (matrix m), starting with empty word
    Word w;
    std::vector<std::int32_t> img(lat_->rank());
    auto image_of = [&](std::int64_t p) -> std::int64_t {
        imat_apply(m, domain_vec(static_cast<std::size_t>(p)), img.data());
        std::int64_t q = domain_find(img.data());
        if (q < 0) throw NotIsometry("group: element leaves the action domain");
        return apply_word(w, q);
    };
    for (const Level& lv : levels_) {
        std::int64_t p = image_of(lv.base);
        auto it = lv.tree.find(p);
        if (it == lv.tree.end()) return false;
        Word back = inverse_word(transversal_path(lv, p));
        w.insert(w.end(), back.begin(), back.end());
    }
    for (std::int64_t s : span_points_)
        if (image_of(s) != s) return false;
    return true;
}

bool GeneratedGroup::contains(const QMat& ambient) const {
    IMat bi = validate_isometry(*lat_, ambient);
    return member_basis(bi);
}

bool GeneratedGroup::word_in_group(const Word& w) const {
    return member_basis(word_matrix(w));
}

GeneratedGroup::PointOrbit GeneratedGroup::orbit_of_point(std::int64_t p) const {
    PointOrbit o;
    o.root = p;
    o.points.push_back(p);
    o.tree[p] = {p, 0};
    std::size_t head = 0;
    const int ng = static_cast<int>(gen_basis_.size());
    while (head < o.points.size()) {
        std::int64_t q = o.points[head++];
        for (int g = 0; g < ng; ++g) {
            std::int32_t lg = static_cast<std::int32_t>(gen_letter_[g]);
            for (std::int32_t letter : {lg, static_cast<std::int32_t>(-lg - 1)}) {
                std::int64_t t = apply_letter(letter, q);
                if (o.tree.count(t)) continue;
                o.tree[t] = {q, letter};
                o.points.push_back(t);
            }
        }
    }
    return o;
}

Word GeneratedGroup::PointOrbit::path_from_root(std::int64_t p) const {
    Word w;
    while (p != root) {
        auto it = tree.find(p);
        if (it == tree.end()) throw Error("orbit: point not in orbit");
        w.push_back(it->second.second);
        p = it->second.first;
    }
    std::reverse(w.begin(), w.end());
    return w;
}

Word GeneratedGroup::random_word(std::mt19937_64& rng) const {
    Word w;
    if (letters_.empty()) return w;
    int len = 8 + static_cast<int>(rng() % 17);
    for (int i = 0; i < len; ++i) {
        int l = static_cast<int>(rng() % letters_.size());
        bool inv = rng() & 1;
        w.push_back(inv ? static_cast<std::int32_t>(-l - 1) : static_cast<std::int32_t>(l));
    }
    return w;
}

std::vector<IMat> GeneratedGroup::all_elements(std::size_t cap) const {
    std::vector<IMat> out;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> seen;
    auto push = [&](const IMat& m) -> bool {
        std::uint64_t h = hash_imat(m);
        auto& bucket = seen[h];
        for (std::size_t idx : bucket)
            if (out[idx] == m) return false;
        bucket.push_back(out.size());
        out.push_back(m);
        return true;
    };
    push(IMat::identity(lat_->rank()));
    std::size_t head = 0;
    while (head < out.size()) {
        if (out.size() > cap) throw BudgetExceeded("group: element enumeration over budget");
        IMat cur = out[head++];
        for (const IMat& g : gen_basis_) push(imat_mul(g, cur));
    }
    return out;
}

Int GeneratedGroup::count_elements(std::size_t cap) const {
    // closure over the images of the spanning points; exact because the
    // spanning images determine the matrix
    const int k = static_cast<int>(span_points_.size());
    using State = std::vector<std::int32_t>;
    auto hash_state = [k](const State& s) {
        Fnv64 h;
        h.feed(s.data(), sizeof(std::int32_t) * static_cast<std::size_t>(k));
        return h.digest();
    };
    State root(k);
    for (int i = 0; i < k; ++i) root[i] = static_cast<std::int32_t>(span_points_[i]);
    std::unordered_map<std::uint64_t, std::vector<State>> seen;
    std::deque<State> queue;
    auto push = [&](const State& s) {
        auto& bucket = seen[hash_state(s)];
        for (const State& t : bucket)
            if (t == s) return;
        bucket.push_back(s);
        queue.push_back(s);
    };
    push(root);
    std::size_t count = 0;
    const int ng = static_cast<int>(gen_basis_.size());
    while (!queue.empty()) {
        State cur = std::move(queue.front());
        queue.pop_front();
        ++count;
        if (count > cap) throw BudgetExceeded("group: element count over budget");
        for (int g = 0; g < ng; ++g) {
            State nxt(k);
            for (int i = 0; i < k; ++i)
                nxt[i] = letters_[gen_letter_[g]].fwd[cur[i]];
            push(nxt);
        }
    }
    return Int(static_cast<unsigned long>(count));
}

// ---- spec surface ----

TupleOrbitIndex GeneratedGroup::orbit_index(const std::vector<AmbVec>& x) const {
    const int m = lat_->rank();
    // local table of the member vectors
    VecList vl(m);
    std::vector<std::int32_t> zb(m);
    std::vector<std::int64_t> za(m);
    for (const AmbVec& v : x) {
        auto z = lat_->basis_coords(v);
        if (!z) throw NotClosed("orbit_index: vector not in the lattice");
        for (int i = 0; i < m; ++i) zb[i] = static_cast<std::int32_t>((*z)[i].get_si());
        lat_->amb_scaled_from_basis(zb.data(), za.data());
        vl.push(zb.data(), za.data());
    }
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> lookup;
    for (std::size_t i = 0; i < vl.count; ++i)
        lookup[hash_i32_row(vl.basis_row(i), m)].push_back(i);
    auto find_local = [&](const std::int32_t* z) -> std::int64_t {
        auto it = lookup.find(hash_i32_row(z, m));
        if (it == lookup.end()) return -1;
        for (std::size_t i : it->second)
            if (std::equal(vl.basis_row(i), vl.basis_row(i) + m, z)) return static_cast<std::int64_t>(i);
        return -1;
    };

    TupleOrbitIndex out;
    out.rep_of.assign(vl.count, SIZE_MAX);
    out.witness.assign(vl.count, Word{});
    out.orbit_size.assign(vl.count, Int(0));
    std::vector<int> seen(vl.count, 0);
    const int ng = static_cast<int>(gen_basis_.size());
    std::vector<std::int32_t> img(m);
    for (std::size_t start = 0; start < vl.count; ++start) {
        if (seen[start]) continue;
        // BFS orbit, tracking words from start
        std::vector<std::size_t> orbit{start};
        std::unordered_map<std::size_t, Word> word_from_start;
        word_from_start[start] = {};
        std::size_t head = 0;
        while (head < orbit.size()) {
            std::size_t cur = orbit[head++];
            for (int g = 0; g < ng; ++g) {
                std::int32_t lg = static_cast<std::int32_t>(gen_letter_[g]);
                for (std::int32_t letter : {lg, static_cast<std::int32_t>(-lg - 1)}) {
                    const IMat& mat = letter >= 0 ? letters_[letter].mat : letters_[-letter - 1].mat_inv;
                    imat_apply(mat, vl.basis_row(cur), img.data());
                    std::int64_t t = find_local(img.data());
                    if (t < 0) throw NotClosed("orbit_index: set not closed under the group");
                    if (word_from_start.count(static_cast<std::size_t>(t))) continue;
                    Word w = word_from_start[cur];
                    w.push_back(letter);
                    word_from_start[static_cast<std::size_t>(t)] = std::move(w);
                    orbit.push_back(static_cast<std::size_t>(t));
                }
            }
        }
        // canonical representative: minimal ambient row
        std::size_t rep = orbit[0];
        for (std::size_t i : orbit)
            if (compare_i64_row(vl.amb_row(i), vl.amb_row(rep), m) < 0) rep = i;
        out.reps.push_back(rep);
        Word to_rep_inv = word_from_start[rep]; // start -> rep
        for (std::size_t i : orbit) {
            seen[i] = 1;
            out.rep_of[i] = rep;
            // witness maps member i to rep: (start->rep) o (i->start)
            Word w = inverse_word(word_from_start[i]);
            w.insert(w.end(), to_rep_inv.begin(), to_rep_inv.end());
            out.witness[i] = std::move(w);
            out.orbit_size[i] = Int(static_cast<unsigned long>(orbit.size()));
        }
    }
    return out;
}

GeneratedGroup GeneratedGroup::pointwise_stabilizer(const std::vector<AmbVec>& fixed) const {
    const int m = lat_->rank();
    GeneratedGroup cur = *this;
    for (const AmbVec& v : fixed) {
        auto zc = lat_->basis_coords(v);
        if (!zc) throw Error("pointwise_stabilizer: vector not in the lattice");
        std::vector<std::int32_t> z(m);
        for (int i = 0; i < m; ++i) z[i] = static_cast<std::int32_t>((*zc)[i].get_si());

        // orbit of v under cur with transversal matrices (local vector BFS)
        struct Node {
            std::vector<std::int32_t> vec;
            std::size_t parent;
            std::int32_t gen; // signed generator index
        };
        std::vector<Node> nodes;
        std::unordered_map<std::uint64_t, std::vector<std::size_t>> lookup;
        auto find_node = [&](const std::int32_t* p) -> std::int64_t {
            auto it = lookup.find(hash_i32_row(p, m));
            if (it == lookup.end()) return -1;
            for (std::size_t i : it->second)
                if (std::equal(nodes[i].vec.begin(), nodes[i].vec.end(), p))
                    return static_cast<std::int64_t>(i);
            return -1;
        };
        auto add_node = [&](std::vector<std::int32_t> p, std::size_t parent, std::int32_t g) {
            lookup[hash_i32_row(p.data(), m)].push_back(nodes.size());
            nodes.push_back({std::move(p), parent, g});
        };
        add_node(z, 0, 0);
        const int ng = cur.num_generators();
        std::vector<std::int32_t> img(m);
        std::vector<IMat> gens_inv;
        for (int g = 0; g < ng; ++g) gens_inv.push_back(integer_inverse(cur.gen_basis_[g]));
        for (std::size_t head = 0; head < nodes.size(); ++head) {
            for (int g = 0; g < ng; ++g) {
                for (int s = 0; s < 2; ++s) {
                    const IMat& mat = s == 0 ? cur.gen_basis_[g] : gens_inv[g];
                    imat_apply(mat, nodes[head].vec.data(), img.data());
                    if (find_node(img.data()) >= 0) continue;
                    add_node(std::vector<std::int32_t>(img.begin(), img.end()), head,
                             s == 0 ? static_cast<std::int32_t>(g)
                                    : static_cast<std::int32_t>(-g - 1));
                }
            }
        }
        Int target = cur.order() / static_cast<unsigned long>(nodes.size());

        auto node_matrix = [&](std::size_t idx) -> IMat {
            // matrix carrying v to nodes[idx]
            IMat acc = IMat::identity(m);
            while (idx != 0) {
                const Node& nd = nodes[idx];
                const IMat& mat = nd.gen >= 0 ? cur.gen_basis_[nd.gen] : gens_inv[-nd.gen - 1];
                acc = imat_mul(acc, mat); // build right-to-left; applied to v last step first
                idx = nd.parent;
            }
            return acc;
        };

        GeneratedGroup sub = GeneratedGroup::incremental(*lat_, seed_norms_);
        // Schreier generators u_{g(p)}^{-1} g u_p until the known order is hit
        bool done = target == 1;
        for (std::size_t ni = 0; ni < nodes.size() && !done; ++ni) {
            IMat up = node_matrix(ni); // v -> node
            for (int g = 0; g < ng && !done; ++g) {
                const IMat& mat = cur.gen_basis_[g];
                imat_apply(mat, nodes[ni].vec.data(), img.data());
                std::int64_t t = find_node(img.data());
                if (t < 0) throw Error("pointwise_stabilizer: orbit not closed");
                IMat ut = node_matrix(static_cast<std::size_t>(t));
                IMat s = imat_mul(integer_inverse(ut), imat_mul(mat, up));
                if (s.is_identity()) continue;
                sub.extend_with_matrix(s);
                if (sub.order_lower_bound() == target) done = true;
            }
        }
        sub.finalize();
        if (sub.order() != target)
            throw Error("pointwise_stabilizer: generated order mismatch");
        cur = std::move(sub);
    }
    return cur;
}

Int GeneratedGroup::order_lower_bound() const {
    Int o = 1;
    for (const auto& lv : levels_) o *= static_cast<unsigned long>(lv.orbit.size());
    return o;
}

SubgroupSplit GeneratedGroup::subgroup_by_predicate(
    const MemberFn& member, const LabelFn& label, std::size_t index_cap) const {
    const int m = lat_->rank();
    struct Node {
        Word word;
        IMat mat, mat_inv;
    };
    std::vector<Node> nodes;
    GeneratedGroup k = GeneratedGroup::incremental(*lat_, seed_norms_);
    Int known_order = order();

    auto ambient_of = [&](const IMat& bm) {
        return qmul(qmul(lat_->basis(), qmat_from_imat(bm)), lat_->basis_inverse());
    };
    if (!member(ambient_of(IMat::identity(m))))
        throw PredicateInconsistent("subgroup: predicate rejects the identity");

    std::unordered_map<std::uint64_t, std::vector<std::size_t>> by_label;
    std::vector<std::string> label_canon;
    auto classify = [&](const IMat& mat_inv, const IMat& mat) -> std::int64_t {
        if (label) {
            CosetLabel cl = label(mat_inv);
            auto it = by_label.find(cl.digest);
            if (it != by_label.end())
                for (std::size_t i : it->second)
                    if (label_canon[i] == cl.canon) return static_cast<std::int64_t>(i);
            return -1;
        }
        // generic fallback: test membership of mat * node.mat_inv
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            IMat rel = imat_mul(mat, nodes[i].mat_inv);
            if (member(ambient_of(rel))) return static_cast<std::int64_t>(i);
        }
        return -1;
    };
    auto register_node = [&](Node nd) {
        if (label) {
            CosetLabel cl = label(nd.mat_inv);
            by_label[cl.digest].push_back(nodes.size());
            label_canon.push_back(std::move(cl.canon));
        }
        nodes.push_back(std::move(nd));
    };

    {
        Node root;
        root.mat = IMat::identity(m);
        root.mat_inv = root.mat;
        register_node(std::move(root));
    }
    const int ng = static_cast<int>(gen_basis_.size());
    std::vector<IMat> gens_inv;
    for (int g = 0; g < ng; ++g) gens_inv.push_back(integer_inverse(gen_basis_[g]));
    for (std::size_t head = 0; head < nodes.size(); ++head) {
        if (nodes.size() > index_cap)
            throw BudgetExceeded("subgroup: coset index over budget");
        for (int g = 0; g < ng; ++g) {
            for (int s = 0; s < 2; ++s) {
                // right-multiply the representative by the generator
                const IMat& gm = s == 0 ? gen_basis_[g] : gens_inv[g];
                const IMat& gmi = s == 0 ? gens_inv[g] : gen_basis_[g];
                IMat mat = imat_mul(nodes[head].mat, gm);
                IMat mat_inv = imat_mul(gmi, nodes[head].mat_inv);
                std::int64_t t = classify(mat_inv, mat);
                if (t < 0) {
                    Node nd;
                    nd.word = nodes[head].word;
                    std::int32_t lg = static_cast<std::int32_t>(gen_letter_[g]);
                    nd.word.push_back(s == 0 ? lg : static_cast<std::int32_t>(-lg - 1));
                    nd.mat = std::move(mat);
                    nd.mat_inv = std::move(mat_inv);
                    register_node(std::move(nd));
                } else {
                    // Schreier element of K
                    IMat srel = imat_mul(mat, nodes[static_cast<std::size_t>(t)].mat_inv);
                    if (!srel.is_identity()) {
                        QMat amb = ambient_of(srel);
                        if (!member(amb))
                            throw PredicateInconsistent(
                                "subgroup: Schreier element fails the predicate");
                        k.extend_with_matrix(srel);
                    }
                }
            }
        }
    }
    k.finalize();
    Int idx(static_cast<unsigned long>(nodes.size()));
    if (k.order() * idx != known_order)
        throw Error("subgroup: order certificate failed (|K| * index != |H|)");

    SubgroupSplit res{std::move(k), {}, {}};
    for (auto& nd : nodes) {
        res.coset_words.push_back(std::move(nd.word));
        res.coset_basis.push_back(std::move(nd.mat));
    }
    return res;
}

// ---- O(L)_h ----

SMat multiplier_of(const Lattice& lat, const SMat& h, const QMat& sigma_ambient) {
    QMat inv = qinverse(sigma_ambient);
    SMat moved = smul_qs(inv, h);
    return solve_right(h, moved);
}

OLhResult compute_olh(const Lattice& lat, const SMat& h, const GeneratedGroup& ambient_group) {
    const int m = lat.rank();
    // span test in the ambient frame
    GeneratedGroup::MemberFn member = [&](const QMat& sigma) {
        SMat moved = smul_qs(sigma, h);
        return span_contains(h, moved);
    };
    // coset label: canonical echelon of sigma^{-1} applied to h, basis frame
    SMat h_basis = smul_qs(lat.basis_inverse(), h);
    GeneratedGroup::LabelFn label = [&, h_basis](const IMat& sigma_inv) {
        SMat moved = smul_qs(qmat_from_imat(sigma_inv), h_basis);
        SMat canon = column_echelon_canonical(std::move(moved));
        GeneratedGroup::CosetLabel cl;
        Fnv64 fh;
        canon.feed_hash(fh);
        cl.digest = fh.digest();
        std::string s;
        for (const auto& x : canon.e) {
            s += x.to_string();
            s += ';';
        }
        cl.canon = std::move(s);
        return cl;
    };
    auto sub = ambient_group.subgroup_by_predicate(member, label);
    OLhResult out{std::move(sub.subgroup), std::move(sub.coset_words),
                  std::move(sub.coset_basis), {}, Int(0)};
    out.index = ambient_group.order() / out.group.order();
    for (int i = 0; i < out.group.num_generators(); ++i)
        out.multipliers.push_back(multiplier_of(lat, h, out.group.generator_ambient(i)));
    return out;
}

} // namespace harmtheta
