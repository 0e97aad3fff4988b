#pragma once

#include "harmtheta/rational.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace harmtheta {

/// Element of Q(i, sqrt 6), written a + b*i + c*r6 + d*i*r6 with r6 = sqrt(6).
/// The four basis elements 1, i, r6, i*r6 are linearly independent over Q, so
/// the representation is unique. This is the value ring of all harmonic
/// evaluations; no other number field occurs.
class ThetaScalar {
public:
    Rational a, b, c, d;

    ThetaScalar() = default;
    ThetaScalar(Rational a_, Rational b_ = 0, Rational c_ = 0, Rational d_ = 0)
        : a(std::move(a_)), b(std::move(b_)), c(std::move(c_)), d(std::move(d_)) {}

    static ThetaScalar zero() { return ThetaScalar(); }
    static ThetaScalar one() { return ThetaScalar(1); }
    static ThetaScalar i() { return ThetaScalar(0, 1); }
    static ThetaScalar r6() { return ThetaScalar(0, 0, 1); }
    static ThetaScalar i_r6() { return ThetaScalar(0, 0, 0, 1); }

    bool is_zero() const { return a == 0 && b == 0 && c == 0 && d == 0; }
    bool is_real() const { return b == 0 && d == 0; }
    bool is_rational() const { return b == 0 && c == 0 && d == 0; }

    /// complex conjugation: fixes r6, negates i
    ThetaScalar conj() const { return ThetaScalar(a, -b, c, -d); }
    /// Galois twist r6 -> -r6 (used for norms/inversion, not part of the spec surface)
    ThetaScalar twist_r6() const { return ThetaScalar(a, b, -c, -d); }

    ThetaScalar operator-() const { return ThetaScalar(-a, -b, -c, -d); }
    ThetaScalar& operator+=(const ThetaScalar& o);
    ThetaScalar& operator-=(const ThetaScalar& o);
    ThetaScalar& operator*=(const ThetaScalar& o);

    friend ThetaScalar operator+(ThetaScalar x, const ThetaScalar& y) { return x += y; }
    friend ThetaScalar operator-(ThetaScalar x, const ThetaScalar& y) { return x -= y; }
    friend ThetaScalar operator*(ThetaScalar x, const ThetaScalar& y) { return x *= y; }
    friend bool operator==(const ThetaScalar& x, const ThetaScalar& y) {
        return x.a == y.a && x.b == y.b && x.c == y.c && x.d == y.d;
    }
    friend bool operator!=(const ThetaScalar& x, const ThetaScalar& y) { return !(x == y); }

    /// field inverse; throws on zero
    ThetaScalar inverse() const;
    ThetaScalar operator/(const ThetaScalar& o) const { return *this * o.inverse(); }

    ThetaScalar pow(unsigned long e) const;

    /// Fast-path probe: true when all four components are integers that fit
    /// int64 after multiplication by `scale`. The engine's integer kernel
    /// keys off this; results are identical either way.
    bool fits_scaled_int64(const Int& scale) const;

    std::string to_string() const;          // "a+b*i+c*r6+d*i*r6", zero terms dropped
    static ThetaScalar parse(const std::string& s);

    void feed_hash(Fnv64& h) const;
};

std::ostream& operator<<(std::ostream& os, const ThetaScalar& x);

} // namespace harmtheta
