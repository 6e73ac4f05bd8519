// Acceptance criteria 1-9. Usage: acceptance [criterion...]; no argument runs all.
#include "staircase/app.hpp"

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace staircase;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

StaircaseParams sqrt_law() { return StaircaseParams::power_law(0.5); }

// plateaus r >= 1 whose J_r members all lie below h_max, with at least 3 of them
std::vector<Census> plateaus_below(const StaircaseParams& p, const BigInt& h_max) {
    Construction c(p);
    std::vector<Census> out;
    for (int r = 1;; ++r) {
        Census cs = j_r_census(p, r);
        if (cs.members.empty()) continue;
        if (c.height(cs.members.front()) > h_max) break;
        size_t below = 0;
        for (int j : cs.members) below += c.height(j) <= h_max;
        if (below >= 3) out.push_back(cs);
    }
    return out;
}

Outcome identities() {
    auto t0 = Clock::now();
    int nonempty = 0;
    for (long r = 2; r <= 64; ++r) nonempty += !corrected_identity_residual(r).empty();
    PrintedIdentityReport rep = printed_identity_residual(2);
    FormalBitensor expected{{{2, 0}, 1},   {{0, 2}, 1},   {{0, -1}, -1},
                            {{-1, 0}, -1}, {{-1, -1}, -1}, {{1, 1}, 1}};
    double t = seconds_since(t0);
    std::ostringstream os;
    os << "corrected residuals nonempty for " << nonempty << " of 63 r; printed r=2 l1=" << to_fraction(rep.l1_norm)
       << (rep.residual == expected ? " with the expected support" : " with a different support") << "; " << t
       << " s (limit 5 s)";
    return {nonempty == 0 && rep.l1_norm == 6 && rep.residual == expected && t < 5.0, os.str()};
}

Outcome oracle_equivalence() {
    auto t0 = Clock::now();
    size_t compared = 0, mismatches = 0;
    for (const auto& p : {sqrt_law(), StaircaseParams::constant(2), StaircaseParams::constant(3)}) {
        Construction c(p);
        CorrelationEngine eng(c);
        for (const auto& rec : app::oracle_records(eng, p, 12, 200, 20240607, kDefaultLevelCap)) {
            ++compared;
            mismatches += !(rec.pairs_match() && rec.sim_match());
        }
    }
    double t = seconds_since(t0);
    std::ostringstream os;
    os << compared << " comparisons over 3 constructions, stages 0..12, " << mismatches << " mismatches; " << t
       << " s (limit 60 s)";
    return {mismatches == 0 && compared == 3 * 13 * 200 && t < 60.0, os.str()};
}

Outcome enclosure_soundness() {
    auto t0 = Clock::now();
    Construction c(sqrt_law());
    CorrelationEngine eng(c);
    const Rational eps = eng.c0() / 1'000'000'000;
    std::mt19937_64 rng(20240607);
    std::vector<long> shifts{1, 10000};
    while (shifts.size() < 500) shifts.push_back(1 + static_cast<long>(rng() % 10000));
    size_t unconverged = 0, broken = 0;
    for (long n : shifts) {
        Enclosure e = eng.correlation(n, eps);
        if (!e.converged || e.width() > eps) ++unconverged;
        int start = c.first_stage_above(n);
        Enclosure prev = eng.stage_enclosure(start, n);
        for (int j = start + 1; j <= std::max(e.stage, start + 1); ++j) {
            Enclosure cur = eng.stage_enclosure(j, n);
            if (cur.lo < prev.lo || cur.width() > prev.width() || cur.lo < 0 || cur.hi > eng.c0()) ++broken;
            prev = cur;
        }
    }
    double t = seconds_since(t0);
    std::ostringstream os;
    os << shifts.size() << " shifts in [1, 10^4]: " << broken << " nesting violations, " << unconverged
       << " above width 1e-9 c(0) within the budget; " << t << " s (limit 120 s)";
    return {broken == 0 && unconverged == 0 && t < 120.0, os.str()};
}

Outcome census_law() {
    std::vector<double> x, y;
    for (int r = 2; r <= 20; ++r) {
        Census cs = j_r_census(sqrt_law(), r);
        x.push_back(std::log(static_cast<double>(r)));
        y.push_back(std::log(static_cast<double>(cs.size())));
    }
    double slope = fit_slope(x, y);
    std::ostringstream os;
    os << "slope of log|J_r| vs log r over r=2..20 is " << slope << " (target 1.0 +- 0.15)";
    return {std::abs(slope - 1.0) <= 0.15, os.str()};
}

Outcome lemma_decay() {
    Construction c(sqrt_law());
    CorrelationEngine eng(c);
    const Rational eps = eng.c0() / 1'000'000'000;
    const BigInt h_max = pow10(300);
    size_t reports = 0, indeterminate = 0, holds = 0;
    double worst = -INFINITY;
    std::ostringstream slopes;
    bool all_decay = true;
    for (const Census& cs : plateaus_below(c.params(), h_max)) {
        PlateauLemma pl = lemma_plateau(eng, cs, h_max, eps);
        for (const auto& rep : pl.reports) {
            ++reports;
            indeterminate += rep.verdict == Verdict::indeterminate;
            holds += rep.verdict == Verdict::holds;
        }
        double s = pl.slope.value_or(INFINITY);
        worst = std::max(worst, s);
        all_decay = all_decay && s <= -0.9;
        slopes << " r=" << cs.r << ":" << std::setprecision(3) << s;
    }
    std::ostringstream os;
    os << reports << " per-j verdicts (" << holds << " holds, " << indeterminate
       << " indeterminate); worst log-log slope " << worst << " (limit -0.9); slopes" << slopes.str();
    return {all_decay && reports > 0 && indeterminate * 10 < reports, os.str()};
}

Outcome estimate_two() {
    Construction c(sqrt_law());
    CorrelationEngine eng(c);
    const Rational eps = eng.c0() / 1'000'000'000;
    size_t holds = 0, fails = 0, indeterminate = 0, wide = 0;
    std::ostringstream per_r;
    for (const Census& cs : plateaus_below(c.params(), pow10(300))) {
        Inequality2Report rep = inequality2(eng, cs, eps);
        holds += rep.verdict == Verdict::holds;
        fails += rep.verdict == Verdict::fails;
        indeterminate += rep.verdict == Verdict::indeterminate;
        wide += rep.lhs.width() >= Rational(1, 1'000'000);
        per_r << " r=" << cs.r << ":" << to_string(rep.verdict);
    }
    std::ostringstream os;
    os << holds << " holds, " << fails << " fails, " << indeterminate << " indeterminate, " << wide
       << " enclosures wider than 1e-6;" << per_r.str();
    return {indeterminate == 0 && wide == 0 && holds + fails > 0, os.str()};
}

Outcome distance_trend() {
    auto t0 = Clock::now();
    Construction c(sqrt_law());
    CorrelationEngine eng(c);
    bool ok = true;
    std::ostringstream os;
    for (long r : {1L, 2L, 3L}) {
        std::vector<DistanceReport> reps;
        for (int N : {4, 8, 16, 32, 64}) reps.push_back(cyclic_distance(eng, r, N, 256));
        for (size_t i = 0; i < reps.size(); ++i) {
            ok = ok && reps[i].rho_sq_value >= -1e-20;
            if (i > 0)
                ok = ok && reps[i].rho_sq_value <=
                               reps[i - 1].rho_sq_value + reps[i].solver_residual + reps[i - 1].solver_residual;
        }
        ok = ok && reps.back().rho_sq < reps.front().rho_sq;
        os << "r=" << r << " rho^2(4)=" << reps.front().rho_sq_value << " rho^2(64)=" << reps.back().rho_sq_value
           << "; ";
    }
    double t = seconds_since(t0);
    os << t << " s (limit 600 s)";
    return {ok && t < 600.0, os.str()};
}

Outcome spectral_sanity() {
    Construction c(sqrt_law());
    CorrelationEngine eng(c);
    const Rational eps = eng.c0() / 1'000'000'000;
    SpectralEstimate est = spectral_density(eng, 256, 1024, eps);
    double min_f = *std::min_element(est.sigma_f.begin(), est.sigma_f.end());
    double mean = grid_mean(est.sigma_f);
    double c0 = to_double(eng.c0());
    auto oracle = [&](const BigInt& n) { return eng.correlation(n, eps); };
    int mismatched = 0;
    for (int n = 0; n < est.N; ++n) {
        Enclosure bt = bitensor_inner(FormalBitensor{{{n, n}, 1}}, FormalBitensor{{{0, 0}, 1}}, oracle);
        mismatched += bt.midpoint() != est.moments_sq[static_cast<size_t>(n)].midpoint();
    }
    std::ostringstream os;
    os << "min density " << min_f << " (limit -1e-8), grid mean " << mean << " vs c(0)=" << c0 << ", "
       << mismatched << " moment mismatches";
    return {min_f >= -1e-8 && std::abs(mean - c0) <= 0.01 * c0 && mismatched == 0, os.str()};
}

Outcome determinism() {
    fs::path dir = fs::temp_directory_path() / "staircase-acceptance-determinism";
    fs::remove_all(dir);
    std::map<std::string, std::string> flags{{"out", (dir / "out").string()},
                                             {"cache_dir", (dir / "cache").string()},
                                             {"n", "1,2,3,100,12345,1e40"},
                                             {"r", "1,2,3"},
                                             {"N", "4,8"},
                                             {"moments", "64"},
                                             {"grid", "128"},
                                             {"n_max", "50"},
                                             {"oracle_stages", "9"},
                                             {"samples", "50"},
                                             {"threads", "2"}};
    RunConfig cfg = resolve_config({}, flags);
    const std::vector<std::pair<std::string, std::string>> runs{
        {"corr", "corr.csv"},   {"census", "census.csv"},     {"lemma", "lemma.csv"},
        {"ineq2", "ineq2.csv"}, {"cross", "cross.csv"},       {"distance", "distance.csv"},
        {"mix", "mix.csv"},     {"spectrum", "spectrum.csv"}, {"oracle-check", "oracle.csv"}};
    std::ostringstream sink, err;
    int differing = 0, failed = 0;
    for (const auto& [cmd, file] : runs) {
        std::vector<std::string> bodies;
        for (int pass = 0; pass < 3; ++pass) {  // cold, warm, warm
            int rc = app::run_command(cmd, cfg, sink, err);
            if (rc != 0) ++failed;
            bodies.push_back(app::csv_body(cfg.out / file));
        }
        differing += bodies[0] != bodies[1] || bodies[1] != bodies[2];
    }
    fs::remove_all(dir);
    std::ostringstream os;
    os << runs.size() << " commands run cold then twice warm: " << differing << " with differing CSV bodies, "
       << failed << " nonzero exits";
    return {differing == 0 && failed == 0, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"symbolic identity suite", identities},
        {"oracle equivalence", oracle_equivalence},
        {"enclosure soundness", enclosure_soundness},
        {"census law", census_law},
        {"lemma decay", lemma_decay},
        {"Cesaro vs tower-average estimate", estimate_two},
        {"cyclic-distance trend", distance_trend},
        {"spectral sanity", spectral_sanity},
        {"determinism", determinism},
    };
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
    if (which.empty())
        for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) which.push_back(i);
    int failures = 0;
    for (int k : which) {
        if (k < 1 || k > static_cast<int>(criteria.size())) {
            std::cerr << "no criterion " << k << "\n";
            return 2;
        }
        const auto& [name, run] = criteria[static_cast<size_t>(k - 1)];
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << "criterion " << k << " [" << name << "]: " << (o.pass ? "PASS" : "FAIL") << " | " << o.detail
                  << std::endl;
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
