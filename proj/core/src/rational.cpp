#include "harmtheta/rational.hpp"

#include "harmtheta/errors.hpp"

#include <cstdio>

namespace harmtheta {

Int floor_div(const Int& num, const Int& den) {
    Int q;
    mpz_fdiv_q(q.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    return q;
}

Int floor_rational(const Rational& q) {
    return floor_div(q.get_num(), q.get_den());
}

Int ceil_rational(const Rational& q) {
    Int r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
    return r;
}

Int isqrt(const Int& n) {
    Int r;
    mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
    return r;
}

std::string rational_to_string(const Rational& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

Rational parse_rational(const std::string& s) {
    if (s.empty()) throw ParseError("empty rational literal");
    Rational q;
    if (mpq_set_str(q.get_mpq_t(), s.c_str(), 10) != 0)
        throw ParseError("bad rational literal: " + s);
    q.canonicalize();
    if (q.get_den() <= 0) throw ParseError("zero denominator: " + s);
    return q;
}

Int common_denominator(const std::vector<Rational>& qs) {
    Int l = 1;
    for (const auto& q : qs) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den().get_mpz_t());
    return l;
}

void Fnv64::feed(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        state ^= p[i];
        state *= 1099511628211ull;
    }
}

void Fnv64::feed_string(const std::string& s) {
    feed_u64(s.size());
    feed(s.data(), s.size());
}

void Fnv64::feed_int(const Int& z) { feed_string(z.get_str()); }

void Fnv64::feed_rational(const Rational& q) {
    feed_int(q.get_num());
    feed_int(q.get_den());
}

void Fnv64::feed_u64(std::uint64_t v) { feed(&v, sizeof v); }

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace harmtheta
