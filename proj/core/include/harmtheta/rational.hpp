#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>
#include <vector>

namespace harmtheta {

// Exact arithmetic is backed by GMP. mpq_class keeps exactly the invariants
// we need: always reduced, denominator positive.
using Int = mpz_class;
using Rational = mpq_class;

inline Rational make_rational(long num, long den = 1) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

inline bool is_integer(const Rational& q) { return q.get_den() == 1; }

// floor(num/den) for exact integers
Int floor_div(const Int& num, const Int& den);

Int floor_rational(const Rational& q);
Int ceil_rational(const Rational& q);

// Largest integer x with x*x <= n (n >= 0).
Int isqrt(const Int& n);

// "p" or "p/q", q > 0 after canonicalization
std::string rational_to_string(const Rational& q);
Rational parse_rational(const std::string& s);

// lcm of the denominators of a range of rationals
Int common_denominator(const std::vector<Rational>& qs);

// 64-bit FNV-1a, the content-hash primitive for cache keys
struct Fnv64 {
    std::uint64_t state = 1469598103934665603ull;
    void feed(const void* data, std::size_t n);
    void feed_string(const std::string& s);
    void feed_int(const Int& z);
    void feed_rational(const Rational& q);
    void feed_u64(std::uint64_t v);
    std::uint64_t digest() const { return state; }
};

std::string hex64(std::uint64_t v);

} // namespace harmtheta
