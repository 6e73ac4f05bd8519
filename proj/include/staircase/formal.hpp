#ifndef STAIRCASE_FORMAL_HPP
#define STAIRCASE_FORMAL_HPP

#include "staircase/enclosure.hpp"
#include "staircase/numeric.hpp"

#include <concepts>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace staircase {

/// Finite combination sum_a coef(a) T^a f with exact rational coefficients.
class FormalVector {
public:
    using Map = std::map<BigInt, Rational>;

    FormalVector() = default;
    FormalVector(std::initializer_list<std::pair<const BigInt, Rational>> init) {
        for (const auto& [a, q] : init) add(a, q);
    }

    void add(const BigInt& exponent, const Rational& coef) {
        if (coef == 0) return;
        auto [it, inserted] = terms_.try_emplace(exponent, coef);
        if (!inserted) {
            it->second += coef;
            if (it->second == 0) terms_.erase(it);
        }
    }

    Rational coefficient(const BigInt& exponent) const {
        auto it = terms_.find(exponent);
        return it == terms_.end() ? Rational(0) : it->second;
    }

    /// T^k applied to the combination.
    FormalVector shifted(const BigInt& k) const {
        FormalVector out;
        for (const auto& [a, q] : terms_) out.terms_.emplace(a + k, q);
        return out;
    }

    FormalVector& operator+=(const FormalVector& o) {
        if (&o == this) return *this *= 2;
        for (const auto& [a, q] : o.terms_) add(a, q);
        return *this;
    }
    FormalVector& operator-=(const FormalVector& o) {
        if (&o == this) {
            terms_.clear();
            return *this;
        }
        for (const auto& [a, q] : o.terms_) add(a, -q);
        return *this;
    }
    FormalVector& operator*=(const Rational& k) {
        if (k == 0) terms_.clear();
        for (auto& [a, q] : terms_) q *= k;
        return *this;
    }

    friend FormalVector operator+(FormalVector a, const FormalVector& b) { return a += b; }
    friend FormalVector operator-(FormalVector a, const FormalVector& b) { return a -= b; }
    friend FormalVector operator*(const Rational& k, FormalVector a) { return a *= k; }
    friend bool operator==(const FormalVector&, const FormalVector&) = default;

    size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    const Map& terms() const { return terms_; }
    auto begin() const { return terms_.begin(); }
    auto end() const { return terms_.end(); }

private:
    Map terms_;
};

/// Finite combination sum coef(a, b) T^a f ⊗ T^b f.
class FormalBitensor {
public:
    using Key = std::pair<BigInt, BigInt>;
    using Map = std::map<Key, Rational>;

    FormalBitensor() = default;
    FormalBitensor(std::initializer_list<std::pair<const Key, Rational>> init) {
        for (const auto& [k, q] : init) add(k.first, k.second, q);
    }

    void add(const BigInt& a, const BigInt& b, const Rational& coef) {
        if (coef == 0) return;
        auto [it, inserted] = terms_.try_emplace(Key{a, b}, coef);
        if (!inserted) {
            it->second += coef;
            if (it->second == 0) terms_.erase(it);
        }
    }

    Rational coefficient(const BigInt& a, const BigInt& b) const {
        auto it = terms_.find(Key{a, b});
        return it == terms_.end() ? Rational(0) : it->second;
    }

    /// (T ⊗ T)^k applied to the combination.
    FormalBitensor diagonal_shift(const BigInt& k) const {
        FormalBitensor out;
        for (const auto& [key, q] : terms_) out.terms_.emplace(Key{key.first + k, key.second + k}, q);
        return out;
    }

    FormalBitensor& operator+=(const FormalBitensor& o) {
        if (&o == this) return *this *= 2;
        for (const auto& [k, q] : o.terms_) add(k.first, k.second, q);
        return *this;
    }
    FormalBitensor& operator-=(const FormalBitensor& o) {
        if (&o == this) {
            terms_.clear();
            return *this;
        }
        for (const auto& [k, q] : o.terms_) add(k.first, k.second, -q);
        return *this;
    }
    FormalBitensor& operator*=(const Rational& k) {
        if (k == 0) terms_.clear();
        for (auto& [key, q] : terms_) q *= k;
        return *this;
    }

    friend FormalBitensor operator+(FormalBitensor a, const FormalBitensor& b) { return a += b; }
    friend FormalBitensor operator-(FormalBitensor a, const FormalBitensor& b) { return a -= b; }
    friend FormalBitensor operator*(const Rational& k, FormalBitensor a) { return a *= k; }
    friend bool operator==(const FormalBitensor&, const FormalBitensor&) = default;

    Rational l1_norm() const {
        Rational s = 0;
        for (const auto& [k, q] : terms_) s += q < 0 ? Rational(-q) : q;
        return s;
    }

    size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    const Map& terms() const { return terms_; }
    auto begin() const { return terms_.begin(); }
    auto end() const { return terms_.end(); }

    /// One line per term: "a b numerator/denominator".
    void dump(std::ostream& os) const {
        for (const auto& [k, q] : terms_)
            os << to_decimal(k.first) << " " << to_decimal(k.second) << " " << q.get_num().get_str()
               << "/" << q.get_den().get_str() << "\n";
    }

private:
    Map terms_;
};

/// Q_r T^{pre_shift} f = (1/r) sum_{i<r} T^{pre_shift - i} f.
inline FormalVector cesaro_vector(long r, const BigInt& pre_shift = 0) {
    if (r <= 0) throw std::invalid_argument("Cesaro length must be >= 1");
    FormalVector v;
    Rational w(1, r);
    for (long i = 0; i < r; ++i) v.add(pre_shift - i, w);
    return v;
}

inline FormalBitensor tensor(const FormalVector& x, const FormalVector& y) {
    FormalBitensor t;
    for (const auto& [a, p] : x)
        for (const auto& [b, q] : y) t.add(a, b, p * q);
    return t;
}

/// One summand weight * Δ^diagonal_shift (Q_len T^pre_shift f ⊗ Q_len T^pre_shift f).
struct IdentityTerm {
    Rational weight;
    long length = 1;
    BigInt pre_shift = 0;
    BigInt diagonal_shift = 0;
};

inline FormalBitensor expand_terms(const std::vector<IdentityTerm>& terms) {
    FormalBitensor out;
    for (const IdentityTerm& t : terms) {
        if (t.weight == 0) continue;
        FormalVector q = cesaro_vector(t.length, t.pre_shift);
        out += t.weight * tensor(q, q).diagonal_shift(t.diagonal_shift);
    }
    return out;
}

/// T^r f ⊗ f + f ⊗ T^r f.
inline FormalBitensor symmetric_shift_pair(const BigInt& r) {
    FormalBitensor lhs;
    lhs.add(r, 0, 1);
    lhs.add(0, r, 1);
    return lhs;
}

/// Right-hand side in the form that balances exactly: the four Cesaro squares
/// of lengths r+1, r-1, r, r, each moved along the diagonal so that its
/// support becomes the corresponding square block of [0, r]^2.
inline std::vector<IdentityTerm> corrected_identity_terms(long r) {
    if (r < 2) throw std::invalid_argument("identity requires r >= 2");
    Rational rr(r);
    return {
        {Rational((r + 1) * (r + 1)), r + 1, 0, r},
        {Rational((r - 1) * (r - 1)), r - 1, 1, r - 2},
        {Rational(-rr * rr), r, 0, r - 1},
        {Rational(-rr * rr), r, 1, r - 1},
    };
}

/// Right-hand side exactly as typeset: lengths r, r-2, r-1, r-1, no diagonal moves.
inline std::vector<IdentityTerm> printed_identity_terms(long r) {
    if (r < 2) throw std::invalid_argument("identity requires r >= 2");
    return {
        {Rational(r * r), r, 0, 0},
        {Rational((r - 2) * (r - 2)), std::max(r - 2, 1L), 1, 0},
        {Rational(-(r - 1) * (r - 1)), r - 1, 0, 0},
        {Rational(-(r - 1) * (r - 1)), r - 1, 1, 0},
    };
}

/// LHS - RHS of the balanced identity; empty for every r >= 2.
inline FormalBitensor corrected_identity_residual(long r) {
    return symmetric_shift_pair(r) - expand_terms(corrected_identity_terms(r));
}

struct PrintedIdentityReport {
    long r = 0;
    FormalBitensor residual;
    Rational l1_norm;
    BigInt best_common_shift = 0;     // k minimizing |LHS - Δ^k RHS|_1 over [-2r, 2r]
    Rational best_shift_l1_norm;
};

inline PrintedIdentityReport printed_identity_residual(long r) {
    PrintedIdentityReport rep;
    rep.r = r;
    FormalBitensor lhs = symmetric_shift_pair(r);
    FormalBitensor rhs = expand_terms(printed_identity_terms(r));
    rep.residual = lhs - rhs;
    rep.l1_norm = rep.residual.l1_norm();
    bool first = true;
    for (long k = -2 * r; k <= 2 * r; ++k) {
        Rational n = (lhs - rhs.diagonal_shift(k)).l1_norm();
        if (first || n < rep.best_shift_l1_norm) {
            rep.best_shift_l1_norm = n;
            rep.best_common_shift = k;
            first = false;
        }
    }
    return rep;
}

template <class F>
concept CorrelationOracle = requires(F f, const BigInt& n) {
    { f(n) } -> std::convertible_to<Enclosure>;
};

/// <x, y> = sum x(a,b) y(c,d) c(a-c) c(b-d), with c supplied as enclosures.
/// Coefficients are grouped by lag pair first, so each distinct product of
/// correlations is formed once.
template <CorrelationOracle Oracle>
Enclosure bitensor_inner(const FormalBitensor& x, const FormalBitensor& y, Oracle&& corr) {
    std::map<std::pair<BigInt, BigInt>, Rational> lag_weights;
    for (const auto& [kx, qx] : x)
        for (const auto& [ky, qy] : y) {
            BigInt l1 = kx.first - ky.first;
            BigInt l2 = kx.second - ky.second;
            if (l1 < 0) l1 = -l1;  // c is even
            if (l2 < 0) l2 = -l2;
            if (l2 < l1) std::swap(l1, l2);  // the product is symmetric in the two lags
            lag_weights[{l1, l2}] += qx * qy;
        }
    std::map<BigInt, Enclosure> memo;
    auto c = [&](const BigInt& n) -> const Enclosure& {
        auto it = memo.find(n);
        if (it == memo.end()) it = memo.emplace(n, Enclosure(corr(n))).first;
        return it->second;
    };
    Enclosure sum = Enclosure::exact(0);
    for (const auto& [lags, w] : lag_weights) {
        if (w == 0) continue;
        sum += w * (c(lags.first) * c(lags.second));
    }
    return sum;
}

}  // namespace staircase

#endif
