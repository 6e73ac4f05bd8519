#ifndef STAIRCASE_NUMERIC_HPP
#define STAIRCASE_NUMERIC_HPP

#include <gmpxx.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace staircase {

using BigInt = mpz_class;
using Rational = mpq_class;

enum class RoundDir { down, up, nearest };

/// num/den in canonical form (mpq_class(num, den) does not reduce).
inline Rational ratio(const BigInt& num, const BigInt& den) {
    if (den == 0) throw std::domain_error("zero denominator");
    Rational q(num, den);
    q.canonicalize();
    return q;
}

inline std::string to_decimal(const BigInt& x) { return x.get_str(10); }

inline std::string to_fraction(const Rational& q) {
    if (q.get_den() == 1) return q.get_num().get_str(10);
    return q.get_num().get_str(10) + "/" + q.get_den().get_str(10);
}

inline BigInt pow10(unsigned long e) {
    BigInt p;
    mpz_ui_pow_ui(p.get_mpz_t(), 10, e);
    return p;
}

inline BigInt floor_div(const BigInt& a, const BigInt& b) {
    BigInt q;
    mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}

inline BigInt ceil_div(const BigInt& a, const BigInt& b) {
    BigInt q;
    mpz_cdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return q;
}

// log10|x| without overflow for huge integers; -inf for zero.
inline double log10_abs(const BigInt& x) {
    if (x == 0) return -INFINITY;
    long exp2 = 0;
    double mant = mpz_get_d_2exp(&exp2, x.get_mpz_t());
    return std::log10(std::fabs(mant)) + static_cast<double>(exp2) * std::log10(2.0);
}

inline double log10_abs(const Rational& q) {
    if (q == 0) return -INFINITY;
    return log10_abs(BigInt(q.get_num())) - log10_abs(BigInt(q.get_den()));
}

inline double to_double(const Rational& q) {
    double lg = log10_abs(q);
    if (lg < -300.0) return 0.0;
    if (lg > 300.0) return q > 0 ? INFINITY : -INFINITY;
    return q.get_d();
}

// Scientific notation with `digits` significant digits. Directed modes round
// the last digit outward so that printed bounds still bracket the value.
inline std::string format_sci(const Rational& q, int digits = 17, RoundDir dir = RoundDir::nearest) {
    if (q == 0) return "0";
    if (digits < 1) digits = 1;
    const bool negative = q < 0;
    Rational a = negative ? Rational(-q) : q;
    long e = static_cast<long>(std::floor(log10_abs(a)));
    auto scaled_for = [&](long exponent) {
        long shift = digits - 1 - exponent;
        Rational s = a;
        if (shift >= 0) s *= Rational(pow10(static_cast<unsigned long>(shift)));
        else s /= Rational(pow10(static_cast<unsigned long>(-shift)));
        return s;
    };
    Rational s = scaled_for(e);
    // log10 estimate can be off by one near powers of ten
    BigInt lo_digits = pow10(static_cast<unsigned long>(digits - 1));
    if (s < Rational(lo_digits)) {
        --e;
        s = scaled_for(e);
    } else if (s >= Rational(lo_digits * 10)) {
        ++e;
        s = scaled_for(e);
    }
    RoundDir eff = dir;
    if (negative && dir == RoundDir::down) eff = RoundDir::up;
    else if (negative && dir == RoundDir::up) eff = RoundDir::down;
    BigInt m;
    if (eff == RoundDir::down) m = floor_div(s.get_num(), s.get_den());
    else if (eff == RoundDir::up) m = ceil_div(s.get_num(), s.get_den());
    else m = floor_div(BigInt(2 * s.get_num() + s.get_den()), BigInt(2 * s.get_den()));
    if (m >= lo_digits * 10) {
        m /= 10;
        ++e;
    }
    std::string ds = m.get_str(10);
    std::string out = negative ? "-" : "";
    out += ds.substr(0, 1);
    if (ds.size() > 1) out += "." + ds.substr(1);
    out += "e";
    out += (e < 0 ? "-" : "+");
    std::string es = std::to_string(e < 0 ? -e : e);
    if (es.size() < 2) es = "0" + es;
    return out + es;
}

inline BigInt parse_bigint(std::string_view text) {
    std::string s(text);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    size_t start = 0;
    while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
    s = s.substr(start);
    if (!s.empty() && s[0] == '+') s = s.substr(1);
    if (s.empty()) throw std::invalid_argument("empty integer");
    for (size_t i = (s[0] == '-' ? 1 : 0); i < s.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i])))
            throw std::invalid_argument("not an integer: '" + std::string(text) + "'");
    return BigInt(s, 10);
}

// Accepts "p/q", "123", "-0.25", "1e-9", "2.5E+3". Decimal input is converted exactly.
inline Rational parse_rational(std::string_view text) {
    std::string s(text);
    auto trim = [](std::string& t) {
        while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
        size_t b = 0;
        while (b < t.size() && std::isspace(static_cast<unsigned char>(t[b]))) ++b;
        t = t.substr(b);
    };
    trim(s);
    if (s.empty()) throw std::invalid_argument("empty rational");
    if (auto slash = s.find('/'); slash != std::string::npos) {
        BigInt num = parse_bigint(s.substr(0, slash));
        BigInt den = parse_bigint(s.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("zero denominator in '" + s + "'");
        Rational q(num, den);
        q.canonicalize();
        return q;
    }
    std::string mant = s;
    long exponent = 0;
    if (auto epos = s.find_first_of("eE"); epos != std::string::npos) {
        mant = s.substr(0, epos);
        try {
            exponent = std::stol(s.substr(epos + 1));
        } catch (const std::exception&) {
            throw std::invalid_argument("bad exponent in '" + s + "'");
        }
    }
    bool negative = false;
    if (!mant.empty() && (mant[0] == '-' || mant[0] == '+')) {
        negative = mant[0] == '-';
        mant = mant.substr(1);
    }
    std::string digits;
    long frac = 0;
    bool seen_point = false;
    for (char c : mant) {
        if (c == '.' && !seen_point) {
            seen_point = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            digits.push_back(c);
            if (seen_point) ++frac;
        } else {
            throw std::invalid_argument("not a rational: '" + s + "'");
        }
    }
    if (digits.empty()) throw std::invalid_argument("not a rational: '" + s + "'");
    Rational q{BigInt(digits, 10)};
    long e = exponent - frac;
    if (e >= 0) q *= Rational(pow10(static_cast<unsigned long>(e)));
    else q /= Rational(pow10(static_cast<unsigned long>(-e)));
    q.canonicalize();
    return negative ? Rational(-q) : q;
}

inline Rational rational_pow(const Rational& base, long e) {
    Rational out = 1;
    Rational b = e >= 0 ? base : Rational(1 / base);
    unsigned long k = static_cast<unsigned long>(e >= 0 ? e : -e);
    while (k) {
        if (k & 1u) out *= b;
        b *= b;
        k >>= 1u;
    }
    return out;
}

}  // namespace staircase

#endif
