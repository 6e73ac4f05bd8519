#ifndef STAIRCASE_GRAM_HPP
#define STAIRCASE_GRAM_HPP

#include "staircase/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace staircase {

/// Symmetric matrix stored row-major.
template <class T>
struct SymMatrix {
    size_t n = 0;
    std::vector<T> a;

    SymMatrix() = default;
    SymMatrix(size_t dim, const T& fill) : n(dim), a(dim * dim, fill) {}

    T& operator()(size_t i, size_t j) { return a[i * n + j]; }
    const T& operator()(size_t i, size_t j) const { return a[i * n + j]; }
};

/// Squared distance from v to span{u_k}, given Gram data G_kl = <u_k, u_l>,
/// b_k = <v, u_k> and |v|^2.
struct ProjectionResult {
    mpf_class rho_sq;
    double condition = 0.0;        // largest / smallest accepted pivot
    double solver_residual = 0.0;  // |b.x - x.Gx| plus a rounding allowance
    size_t effective_rank = 0;
    size_t dimension = 0;
    int precision_bits = 0;
};

inline double mpf_to_double(const mpf_class& x) {
    long e = 0;
    double m = mpf_get_d_2exp(&e, x.get_mpf_t());
    if (e > 1000) return m > 0 ? INFINITY : -INFINITY;
    if (e < -1000) return 0.0;
    return std::ldexp(m, static_cast<int>(e));
}

/// Least-squares projection at `precision_bits` working precision.
///
/// Diagonally pivoted Cholesky; a pivot below `relative_cutoff` times the
/// largest diagonal entry ends the factorization, which drops directions the
/// working precision cannot resolve. The returned rho_sq is |v - sum x_k u_k|^2
/// for the computed coefficients, so it is an upper bound for the true
/// distance whenever the Gram data are exact.
inline ProjectionResult project_onto_span(const SymMatrix<Rational>& gram, const std::vector<Rational>& b,
                                          const Rational& v_norm_sq, int precision_bits,
                                          double relative_cutoff_log2) {
    if (gram.n != b.size()) throw std::invalid_argument("Gram matrix and right-hand side differ in size");
    if (precision_bits < 64) throw std::invalid_argument("precision must be at least 64 bits");
    const auto prec = static_cast<mp_bitcnt_t>(precision_bits);
    const size_t n = gram.n;
    auto mk = [prec](const Rational& q) { return mpf_class(q, prec); };

    SymMatrix<mpf_class> g(n, mpf_class(0, prec));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) g(i, j) = mk(gram(i, j));
    std::vector<mpf_class> rhs;
    rhs.reserve(n);
    for (const Rational& q : b) rhs.push_back(mk(q));

    // Schur complement, updated in place
    SymMatrix<mpf_class> s = g;
    std::vector<size_t> order;
    std::vector<bool> used(n, false);
    std::vector<std::vector<mpf_class>> lcols;  // column k holds L(:, k) over all n rows
    mpf_class max_diag(0, prec);
    for (size_t i = 0; i < n; ++i)
        if (s(i, i) > max_diag) max_diag = s(i, i);
    mpf_class tol(max_diag, prec);
    if (relative_cutoff_log2 < 0) mpf_div_2exp(tol.get_mpf_t(), tol.get_mpf_t(), static_cast<mp_bitcnt_t>(-relative_cutoff_log2));

    mpf_class first_pivot(0, prec), last_pivot(0, prec);
    for (size_t k = 0; k < n; ++k) {
        size_t p = n;
        for (size_t i = 0; i < n; ++i)
            if (!used[i] && (p == n || s(i, i) > s(p, p))) p = i;
        if (p == n || s(p, p) <= tol || s(p, p) <= 0) break;
        if (order.empty()) first_pivot = s(p, p);
        last_pivot = s(p, p);
        used[p] = true;
        order.push_back(p);
        mpf_class root(0, prec);
        mpf_sqrt(root.get_mpf_t(), s(p, p).get_mpf_t());
        std::vector<mpf_class> col(n, mpf_class(0, prec));
        for (size_t i = 0; i < n; ++i)
            if (!used[i] || i == p) col[i] = s(i, p) / root;
        for (size_t i = 0; i < n; ++i) {
            if (used[i]) continue;
            for (size_t j = 0; j < n; ++j) {
                if (used[j]) continue;
                s(i, j) -= col[i] * col[j];
            }
        }
        lcols.push_back(std::move(col));
    }

    const size_t rank = order.size();
    // L restricted to pivot rows, in pivot order: Lp(a, c) = lcols[c][order[a]]
    std::vector<mpf_class> y(rank, mpf_class(0, prec));
    for (size_t a = 0; a < rank; ++a) {
        mpf_class acc = rhs[order[a]];
        for (size_t c = 0; c < a; ++c) acc -= lcols[c][order[a]] * y[c];
        y[a] = acc / lcols[a][order[a]];
    }
    std::vector<mpf_class> xs(rank, mpf_class(0, prec));
    for (size_t a = rank; a-- > 0;) {
        mpf_class acc = y[a];
        for (size_t c = a + 1; c < rank; ++c) acc -= lcols[a][order[c]] * xs[c];
        xs[a] = acc / lcols[a][order[a]];
    }
    std::vector<mpf_class> x(n, mpf_class(0, prec));
    for (size_t a = 0; a < rank; ++a) x[order[a]] = xs[a];

    mpf_class bx(0, prec), xgx(0, prec);
    for (size_t i = 0; i < n; ++i) {
        if (x[i] == 0) continue;
        bx += rhs[i] * x[i];
        mpf_class gi(0, prec);
        for (size_t j = 0; j < n; ++j)
            if (x[j] != 0) gi += g(i, j) * x[j];
        xgx += x[i] * gi;
    }
    mpf_class vv = mk(v_norm_sq);

    ProjectionResult out;
    out.precision_bits = precision_bits;
    out.dimension = n;
    out.effective_rank = rank;
    out.rho_sq = mpf_class(vv - 2 * bx + xgx, prec);
    mpf_class disagreement = bx - xgx;
    double roundoff = std::ldexp(1.0, -precision_bits + 16) * static_cast<double>(n + 1) *
                      (std::fabs(mpf_to_double(vv)) + std::fabs(mpf_to_double(bx)));
    out.solver_residual = std::fabs(mpf_to_double(disagreement)) + roundoff;
    out.condition = rank ? mpf_to_double(first_pivot / last_pivot) : 0.0;
    return out;
}

/// Exact |v|^2 - b^T G^+ b by symmetric elimination on the bordered matrix
/// [[G, b], [b^T, |v|^2]]. Zero pivots of a positive semidefinite G are
/// skipped. Intended for small systems.
inline Rational exact_projection_residual(const SymMatrix<Rational>& gram, const std::vector<Rational>& b,
                                          const Rational& v_norm_sq) {
    const size_t n = gram.n;
    if (b.size() != n) throw std::invalid_argument("Gram matrix and right-hand side differ in size");
    SymMatrix<Rational> m(n + 1, Rational(0));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) m(i, j) = gram(i, j);
        m(i, n) = b[i];
        m(n, i) = b[i];
    }
    m(n, n) = v_norm_sq;
    for (size_t k = 0; k < n; ++k) {
        if (m(k, k) == 0) continue;
        for (size_t i = k + 1; i <= n; ++i) {
            if (m(i, k) == 0) continue;
            Rational f = m(i, k) / m(k, k);
            for (size_t j = k; j <= n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return m(n, n);
}

}  // namespace staircase

#endif
