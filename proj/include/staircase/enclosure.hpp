#ifndef STAIRCASE_ENCLOSURE_HPP
#define STAIRCASE_ENCLOSURE_HPP

#include "staircase/numeric.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <string>

namespace staircase {

/// Closed rational interval [lo, hi] known to contain an exact real quantity.
///
/// Arithmetic is exact on the endpoints, so combining enclosures never needs
/// outward rounding. `converged` is false when the producer gave up before
/// reaching its width target; the flag propagates through arithmetic.
struct Enclosure {
    Rational lo{0};
    Rational hi{0};
    bool converged = true;
    int stage = -1;  // construction stage that produced the bounds, -1 if derived

    Enclosure() = default;
    Enclosure(Rational l, Rational h, bool conv = true, int st = -1)
        : lo(std::move(l)), hi(std::move(h)), converged(conv), stage(st) {
        if (lo > hi) throw std::invalid_argument("enclosure with lo > hi");
    }

    static Enclosure exact(const Rational& v) { return Enclosure(v, v); }

    Rational width() const { return hi - lo; }
    Rational midpoint() const { return (lo + hi) / 2; }
    bool contains(const Rational& v) const { return lo <= v && v <= hi; }
    bool contains(const Enclosure& other) const { return lo <= other.lo && other.hi <= hi; }

    Enclosure clamped(const Rational& floor, const Rational& ceil) const {
        Enclosure e = *this;
        e.lo = std::clamp(e.lo, floor, ceil);
        e.hi = std::clamp(e.hi, floor, ceil);
        return e;
    }
};

inline Enclosure operator+(const Enclosure& a, const Enclosure& b) {
    return {a.lo + b.lo, a.hi + b.hi, a.converged && b.converged};
}

inline Enclosure operator-(const Enclosure& a) { return {-a.hi, -a.lo, a.converged}; }

inline Enclosure operator-(const Enclosure& a, const Enclosure& b) {
    return {a.lo - b.hi, a.hi - b.lo, a.converged && b.converged};
}

inline Enclosure operator*(const Enclosure& a, const Enclosure& b) {
    Rational p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
    return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4}), a.converged && b.converged};
}

inline Enclosure operator*(const Rational& k, const Enclosure& a) {
    if (k >= 0) return {k * a.lo, k * a.hi, a.converged};
    return {k * a.hi, k * a.lo, a.converged};
}

inline Enclosure operator*(const Enclosure& a, const Rational& k) { return k * a; }

inline Enclosure& operator+=(Enclosure& a, const Enclosure& b) {
    a.lo += b.lo;
    a.hi += b.hi;
    a.converged = a.converged && b.converged;
    a.stage = -1;
    return a;
}

inline Enclosure square(const Enclosure& a) {
    if (a.lo >= 0) return {a.lo * a.lo, a.hi * a.hi, a.converged};
    if (a.hi <= 0) return {a.hi * a.hi, a.lo * a.lo, a.converged};
    return {0, std::max(a.lo * a.lo, a.hi * a.hi), a.converged};
}

inline Enclosure abs(const Enclosure& a) {
    if (a.lo >= 0) return a;
    if (a.hi <= 0) return -a;
    return {0, std::max(Rational(-a.lo), a.hi), a.converged};
}

/// Three-valued outcome of comparing an enclosed quantity with a threshold.
enum class Verdict { holds, fails, indeterminate };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::holds: return "holds";
        case Verdict::fails: return "fails";
        case Verdict::indeterminate: return "indeterminate";
    }
    return "?";
}

// quantity <= bound
inline Verdict verdict_at_most(const Enclosure& e, const Rational& bound) {
    if (e.hi <= bound) return Verdict::holds;
    if (e.lo > bound) return Verdict::fails;
    return Verdict::indeterminate;
}

// quantity < bound
inline Verdict verdict_below(const Enclosure& e, const Rational& bound) {
    if (e.hi < bound) return Verdict::holds;
    if (e.lo >= bound) return Verdict::fails;
    return Verdict::indeterminate;
}

inline std::ostream& operator<<(std::ostream& os, const Enclosure& e) {
    return os << "[" << format_sci(e.lo, 12, RoundDir::down) << ", "
              << format_sci(e.hi, 12, RoundDir::up) << "]";
}

}  // namespace staircase

#endif
