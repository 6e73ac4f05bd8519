#ifndef STAIRCASE_ANALYTICS_HPP
#define STAIRCASE_ANALYTICS_HPP

#include "staircase/construction.hpp"
#include "staircase/correlation.hpp"
#include "staircase/enclosure.hpp"
#include "staircase/formal.hpp"
#include "staircase/gram.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace staircase {

/// (Q_r f, Q_r f) = r^-2 sum_{i,i'<r} c(i - i').
inline Enclosure q_norm(CorrelationEngine& eng, long r, const Rational& eps) {
    if (r < 1) throw std::invalid_argument("q_norm requires r >= 1");
    Enclosure sum = Rational(r) * eng.correlation(0, eps);
    for (long k = 1; k < r; ++k) sum += Rational(2 * (r - k)) * eng.correlation(k, eps);
    return Rational(1, r * r) * sum;
}

/// (T^{h_j} f, Q_r f) = r^-1 sum_{i<r} c(h_j + i).
inline Enclosure tower_cesaro(CorrelationEngine& eng, int j, long r, const Rational& eps) {
    if (r < 1) throw std::invalid_argument("Cesaro length must be >= 1");
    Enclosure sum = Enclosure::exact(0);
    for (long i = 0; i < r; ++i) sum += eng.correlation_at_tower_height(j, i, eps);
    return Rational(1, r) * sum;
}

struct LemmaReport {
    int j = 0;
    long r = 0;
    BigInt height;
    bool on_plateau = true;  // r_j == r + 1
    Enclosure tower_term;    // (T^{h_j} f, Q_r f)
    Enclosure q_term;        // (Q_r f, Q_r f)
    Enclosure gap;
    Rational bound;          // 2r / h_j + 2 r^-r
    Verdict verdict = Verdict::indeterminate;
};

inline Rational lemma_bound(long r, const BigInt& height) {
    return Rational(2 * r) / Rational(height) + 2 * rational_pow(Rational(r), -r);
}

inline LemmaReport lemma_gap(CorrelationEngine& eng, int j, long r, const Rational& eps) {
    const Construction& c = eng.construction();
    LemmaReport rep;
    rep.j = j;
    rep.r = r;
    rep.height = c.height(j);
    rep.on_plateau = c.rank(j) == r + 1;
    rep.tower_term = tower_cesaro(eng, j, r, eps);
    rep.q_term = q_norm(eng, r, eps);
    rep.gap = abs(rep.tower_term - rep.q_term);
    rep.bound = lemma_bound(r, rep.height);
    rep.verdict = rep.gap.converged ? verdict_at_most(rep.gap, rep.bound) : Verdict::indeterminate;
    return rep;
}

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs >= 2 points");
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0) throw std::invalid_argument("slope fit needs distinct abscissae");
    return sxy / sxx;
}

struct PlateauLemma {
    long r = 0;
    std::vector<LemmaReport> reports;
    std::optional<double> slope;  // d log(gap) / d log(h_j), gap taken at its upper end
};

/// Lemma reports for every j in J_r with h_j <= h_max.
inline PlateauLemma lemma_plateau(CorrelationEngine& eng, const Census& census, const BigInt& h_max,
                                  const Rational& eps) {
    const Construction& c = eng.construction();
    PlateauLemma out;
    out.r = census.r;
    std::vector<double> lx, ly;
    for (int j : census.members) {
        if (j < c.base_stage() || c.height(j) > h_max) continue;
        LemmaReport rep = lemma_gap(eng, j, census.r, eps);
        if (rep.gap.hi > 0) {
            lx.push_back(log10_abs(rep.height));
            ly.push_back(log10_abs(rep.gap.hi));
        }
        out.reports.push_back(std::move(rep));
    }
    if (lx.size() >= 2) out.slope = fit_slope(lx, ly);
    return out;
}

/// Certified evaluation of |Q_r(f⊗f) - P_r(f⊗f)|^2 against 2/|J_r|.
struct Inequality2Report {
    long r = 0;
    std::vector<int> members;
    Enclosure qq;          // <Q, Q> = q_norm^2
    Enclosure qp;          // <Q, P>
    Enclosure pp;          // <P, P>
    Rational pp_diagonal;  // c(0)^2 / |J_r|
    Enclosure lhs;
    Rational rhs;          // 2 / |J_r|
    Verdict verdict = Verdict::indeterminate;
};

inline Inequality2Report inequality2(CorrelationEngine& eng, const Census& census, const Rational& eps) {
    const Construction& c = eng.construction();
    if (census.members.empty()) throw std::invalid_argument("J_r is empty");
    const long r = census.r;
    const auto size = static_cast<long>(census.members.size());
    Inequality2Report rep;
    rep.r = r;
    rep.members = census.members;

    Enclosure q = q_norm(eng, r, eps);
    rep.qq = square(q);

    Enclosure qp = Enclosure::exact(0);
    for (int j : census.members) qp += square(tower_cesaro(eng, j, r, eps));
    rep.qp = Rational(1, size) * qp;

    const Rational c0 = eng.c0();
    Enclosure pp = Enclosure::exact(Rational(size) * c0 * c0);
    for (size_t a = 0; a < census.members.size(); ++a)
        for (size_t b = a + 1; b < census.members.size(); ++b) {
            BigInt lag = c.height(census.members[b]) - c.height(census.members[a]);
            pp += Rational(2) * square(eng.correlation(lag, eps));
        }
    rep.pp = Rational(1, size * size) * pp;
    rep.pp_diagonal = c0 * c0 / size;

    Enclosure lhs = rep.qq - Rational(2) * rep.qp + rep.pp;
    // a squared norm, and at most (|Q| + |P|)^2 <= 4 c(0)^2
    rep.lhs = lhs.clamped(0, 4 * c0 * c0);
    rep.lhs.converged = lhs.converged;
    rep.rhs = ratio(2, size);
    rep.verdict = rep.lhs.converged ? verdict_below(rep.lhs, rep.rhs) : Verdict::indeterminate;
    return rep;
}

/// The j != k Gram deviation |c(h_{j+p} - h_j)^2 - <Q, Q>|.
struct CrossReport {
    int j = 0;
    int p = 0;
    long r = 0;
    bool on_plateau = true;
    Enclosure deviation;
    Rational height_ratio;  // h_j / h_{j+p}
    Rational r_power;       // r^-p
    double constant_fit = 0.0;  // deviation.hi / height_ratio
};

inline CrossReport cross_height_gap(CorrelationEngine& eng, int j, int p, long r, const Rational& eps) {
    if (p < 0) throw std::invalid_argument("p must be >= 0");
    const Construction& c = eng.construction();
    CrossReport rep;
    rep.j = j;
    rep.p = p;
    rep.r = r;
    rep.on_plateau = c.rank(j) == r + 1 && c.rank(j + p) == r + 1;
    BigInt lag = c.height(j + p) - c.height(j);
    rep.deviation = abs(square(eng.correlation(lag, eps)) - square(q_norm(eng, r, eps)));
    rep.height_ratio = Rational(c.height(j)) / Rational(c.height(j + p));
    rep.r_power = rational_pow(Rational(r), -p);
    rep.constant_fit = std::pow(10.0, log10_abs(rep.deviation.hi) - log10_abs(rep.height_ratio));
    return rep;
}

struct DistanceReport {
    long r = 0;
    int N = 0;
    mpf_class rho_sq;
    double rho_sq_value = 0.0;
    double gram_condition = 0.0;
    double solver_residual = 0.0;
    int precision_bits = 0;
    size_t effective_rank = 0;
    size_t dimension = 0;
    int stage_used = 0;
    Rational correlation_width;  // max enclosure width of the lags at stage_used
    std::optional<Rational> exact_rho_sq;
};

/// Gram data of u_k = (T⊗T)^k (f⊗f), k in [-N, N], and v = T^r f⊗f + f⊗T^r f,
/// built from correlations c_J(n) of one common stage J.
struct CyclicGramData {
    SymMatrix<Rational> gram;
    std::vector<Rational> b;
    Rational v_norm_sq;
    int stage = 0;
    Rational correlation_width;
};

inline CyclicGramData cyclic_gram_data(CorrelationEngine& eng, long r, int N, const Rational& eps) {
    if (N < 0) throw std::invalid_argument("N must be >= 0");
    const long max_lag = std::max<long>(2L * N, std::labs(r) + N);
    std::vector<BigInt> lags;
    for (long n = 0; n <= max_lag; ++n) lags.emplace_back(n);
    CyclicGramData d;
    d.stage = eng.common_stage(lags, eps);
    std::vector<Rational> cj(static_cast<size_t>(max_lag) + 1);
    d.correlation_width = 0;
    for (long n = 0; n <= max_lag; ++n) {
        Enclosure e = eng.stage_enclosure(d.stage, n);
        cj[static_cast<size_t>(n)] = e.lo;
        if (e.width() > d.correlation_width) d.correlation_width = e.width();
    }
    auto cval = [&](long n) -> const Rational& { return cj[static_cast<size_t>(std::labs(n))]; };
    const size_t dim = static_cast<size_t>(2 * N + 1);
    d.gram = SymMatrix<Rational>(dim, Rational(0));
    d.b.resize(dim);
    for (size_t a = 0; a < dim; ++a) {
        long k = static_cast<long>(a) - N;
        for (size_t bidx = 0; bidx < dim; ++bidx) {
            long l = static_cast<long>(bidx) - N;
            d.gram(a, bidx) = cval(k - l) * cval(k - l);
        }
        d.b[a] = 2 * cval(k) * cval(r - k);
    }
    d.v_norm_sq = 2 * cval(0) * cval(0) + 2 * cval(r) * cval(r);
    return d;
}

/// rho^2(v, span{u_k : |k| <= N}) with relative spectral cutoff 2^(-precision/4).
/// Correlations are resolved to c(0) 2^(-precision/4) before the solve.
inline DistanceReport cyclic_distance(CorrelationEngine& eng, long r, int N, int precision_bits = 256,
                                      bool exact_check = false) {
    Rational eps = eng.c0();
    eps /= Rational(BigInt(1) << static_cast<unsigned>(precision_bits / 4));
    CyclicGramData d = cyclic_gram_data(eng, r, N, eps);
    ProjectionResult pr =
        project_onto_span(d.gram, d.b, d.v_norm_sq, precision_bits, -static_cast<double>(precision_bits) / 4.0);
    DistanceReport rep;
    rep.r = r;
    rep.N = N;
    rep.rho_sq = pr.rho_sq;
    rep.rho_sq_value = mpf_to_double(pr.rho_sq);
    rep.gram_condition = pr.condition;
    rep.solver_residual = pr.solver_residual;
    rep.precision_bits = precision_bits;
    rep.effective_rank = pr.effective_rank;
    rep.dimension = pr.dimension;
    rep.stage_used = d.stage;
    rep.correlation_width = d.correlation_width;
    if (exact_check) {
        if (N > 16) throw std::invalid_argument("exact cross-check is limited to N <= 16");
        rep.exact_rho_sq = exact_projection_residual(d.gram, d.b, d.v_norm_sq);
    }
    return rep;
}

struct MixingRow {
    BigInt n;
    Enclosure correlation;
    Enclosure target;  // mu(A)^2 / mu(X)
};

inline std::vector<MixingRow> mixing_profile(CorrelationEngine& eng, const std::vector<BigInt>& shifts,
                                             const Rational& eps, int measure_stage = 32) {
    const Construction& c = eng.construction();
    Enclosure mx = total_measure(c, std::max(measure_stage, c.base_stage()));
    Rational a2 = eng.c0() * eng.c0();
    Enclosure target(a2 / mx.hi, a2 / mx.lo);
    std::vector<MixingRow> rows;
    rows.reserve(shifts.size());
    for (const BigInt& n : shifts) rows.push_back({n, eng.correlation(n, eps), target});
    return rows;
}

inline std::vector<MixingRow> mixing_profile(CorrelationEngine& eng, long n_max, const Rational& eps) {
    std::vector<BigInt> shifts;
    for (long n = 0; n <= n_max; ++n) shifts.emplace_back(n);
    return mixing_profile(eng, shifts, eps);
}

/// Fejér-smoothed densities on the circle for the spectral measure of f
/// (moments c(n)) and of f⊗f under T⊗T (moments c(n)^2), sampled at
/// theta_g = 2 pi g / grid_size. Densities are relative to dtheta / 2 pi.
struct SpectralEstimate {
    int N = 0;
    int grid_size = 0;
    std::vector<double> theta;
    std::vector<double> sigma_f;
    std::vector<double> sigma_ff;
    std::vector<Enclosure> moments;     // c(n), n < N
    std::vector<Enclosure> moments_sq;  // c(n)^2
    double width_f = 0.0;   // sum of kernel-weighted moment widths
    double width_ff = 0.0;
};

inline std::vector<double> fejer_density(const std::vector<double>& moments, int grid_size) {
    const int N = static_cast<int>(moments.size());
    std::vector<double> out(static_cast<size_t>(grid_size));
    for (int g = 0; g < grid_size; ++g) {
        double th = 2.0 * std::numbers::pi * g / grid_size;
        double s = moments.empty() ? 0.0 : moments[0];
        for (int n = 1; n < N; ++n) s += 2.0 * (1.0 - static_cast<double>(n) / N) * moments[static_cast<size_t>(n)] * std::cos(n * th);
        out[static_cast<size_t>(g)] = s;
    }
    return out;
}

inline SpectralEstimate spectral_density(CorrelationEngine& eng, int N, int grid_size, const Rational& eps) {
    if (N < 1 || grid_size < 1) throw std::invalid_argument("N and grid_size must be positive");
    SpectralEstimate est;
    est.N = N;
    est.grid_size = grid_size;
    std::vector<double> mf, mff;
    for (int n = 0; n < N; ++n) {
        Enclosure e = eng.correlation(n, eps);
        Enclosure e2 = square(e);
        double k = n == 0 ? 1.0 : 2.0 * (1.0 - static_cast<double>(n) / N);
        est.width_f += k * to_double(e.width());
        est.width_ff += k * to_double(e2.width());
        mf.push_back(to_double(e.midpoint()));
        mff.push_back(to_double(e2.midpoint()));
        est.moments.push_back(std::move(e));
        est.moments_sq.push_back(std::move(e2));
    }
    est.sigma_f = fejer_density(mf, grid_size);
    est.sigma_ff = fejer_density(mff, grid_size);
    est.theta.resize(static_cast<size_t>(grid_size));
    for (int g = 0; g < grid_size; ++g) est.theta[static_cast<size_t>(g)] = 2.0 * std::numbers::pi * g / grid_size;
    return est;
}

/// Periodic trapezoid rule: the plain mean of the samples.
inline double grid_mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace staircase

#endif
