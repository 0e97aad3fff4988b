#include "harmtheta/scalar.hpp"

#include "harmtheta/errors.hpp"

#include <ostream>

namespace harmtheta {

ThetaScalar& ThetaScalar::operator+=(const ThetaScalar& o) {
    a += o.a; b += o.b; c += o.c; d += o.d;
    return *this;
}

ThetaScalar& ThetaScalar::operator-=(const ThetaScalar& o) {
    a -= o.a; b -= o.b; c -= o.c; d -= o.d;
    return *this;
}

ThetaScalar& ThetaScalar::operator*=(const ThetaScalar& o) {
    // i^2 = -1, r6^2 = 6, (i*r6)^2 = -6
    Rational na = a * o.a - b * o.b + 6 * (c * o.c - d * o.d);
    Rational nb = a * o.b + b * o.a + 6 * (c * o.d + d * o.c);
    Rational nc = a * o.c + c * o.a - (b * o.d + d * o.b);
    Rational nd = a * o.d + d * o.a + b * o.c + c * o.b;
    a = std::move(na); b = std::move(nb); c = std::move(nc); d = std::move(nd);
    return *this;
}

ThetaScalar ThetaScalar::inverse() const {
    if (is_zero()) throw Error("ThetaScalar: division by zero");
    ThetaScalar x1 = conj();
    ThetaScalar x2 = twist_r6();
    ThetaScalar x3 = x1.twist_r6();
    ThetaScalar num = x1 * x2 * x3;
    ThetaScalar nrm = *this * num; // rational by Galois theory
    if (!nrm.is_rational() || nrm.a == 0)
        throw Error("ThetaScalar: inconsistent field norm");
    Rational inv = 1 / nrm.a;
    return ThetaScalar(num.a * inv, num.b * inv, num.c * inv, num.d * inv);
}

ThetaScalar ThetaScalar::pow(unsigned long e) const {
    ThetaScalar acc = one();
    ThetaScalar base = *this;
    while (e) {
        if (e & 1) acc *= base;
        base *= base;
        e >>= 1;
    }
    return acc;
}

bool ThetaScalar::fits_scaled_int64(const Int& scale) const {
    for (const Rational* q : {&a, &b, &c, &d}) {
        Int num = q->get_num() * scale;
        if (!mpz_divisible_p(num.get_mpz_t(), q->get_den().get_mpz_t())) return false;
        Int v = num / q->get_den();
        if (!v.fits_slong_p()) return false;
    }
    return true;
}

std::string ThetaScalar::to_string() const {
    std::string out;
    auto append = [&out](const Rational& q, const char* unit) {
        if (q == 0) return;
        std::string term = rational_to_string(q);
        if (unit[0]) {
            if (term == "1") term = unit;
            else if (term == "-1") term = std::string("-") + unit;
            else term += std::string("*") + unit;
        }
        if (!out.empty() && term[0] != '-') out += "+";
        out += term;
    };
    append(a, "");
    append(b, "i");
    append(c, "r6");
    append(d, "i*r6");
    return out.empty() ? "0" : out;
}

ThetaScalar ThetaScalar::parse(const std::string& s) {
    if (s.empty()) throw ParseError("empty scalar literal");
    ThetaScalar out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t start = pos;
        if (s[pos] == '+' || s[pos] == '-') ++pos;
        while (pos < s.size() && s[pos] != '+' && s[pos] != '-') ++pos;
        std::string term = s.substr(start, pos - start);
        if (term == "+" || term == "-" || term.empty())
            throw ParseError("bad scalar literal: " + s);

        Rational* slot = &out.a;
        auto strip_suffix = [&term](const std::string& suf) {
            if (term.size() >= suf.size() &&
                term.compare(term.size() - suf.size(), suf.size(), suf) == 0) {
                term.erase(term.size() - suf.size());
                return true;
            }
            return false;
        };
        if (strip_suffix("i*r6")) slot = &out.d;
        else if (strip_suffix("r6")) slot = &out.c;
        else if (strip_suffix("i")) slot = &out.b;
        if (!term.empty() && term.back() == '*') term.pop_back();
        if (term.empty() || term == "+") term = "1";
        else if (term == "-") term = "-1";
        *slot += parse_rational(term);
    }
    return out;
}

void ThetaScalar::feed_hash(Fnv64& h) const {
    h.feed_rational(a);
    h.feed_rational(b);
    h.feed_rational(c);
    h.feed_rational(d);
}

std::ostream& operator<<(std::ostream& os, const ThetaScalar& x) {
    return os << x.to_string();
}

} // namespace harmtheta
