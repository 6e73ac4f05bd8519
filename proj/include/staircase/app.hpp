#ifndef STAIRCASE_APP_HPP
#define STAIRCASE_APP_HPP

#include "staircase/analytics.hpp"
#include "staircase/config.hpp"
#include "staircase/construction.hpp"
#include "staircase/correlation.hpp"
#include "staircase/formal.hpp"
#include "staircase/oracle.hpp"
#include "staircase/parallel.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <algorithm>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace staircase::app {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kError = 1, kIndeterminate = 2 };

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"build", "corr",     "lemma",    "ineq2", "cross",       "distance",
                                                   "census", "identity", "spectrum", "mix",   "oracle-check"};
    return names;
}

/// CSV table: '#' header lines (metadata) followed by a column line and rows.
/// Everything after the header lines is the deterministic body.
class CsvTable {
public:
    CsvTable(std::string command, const RunConfig& cfg, std::vector<std::string> columns)
        : columns_(std::move(columns)) {
        meta_.push_back("staircase " + command);
        meta_.push_back("construction: " + cfg.params.fingerprint());
        meta_.push_back("seed: " + std::to_string(cfg.seed));
        meta_.push_back("eps_rel: " + to_fraction(cfg.eps_rel));
    }

    void meta(const std::string& line) { meta_.push_back(line); }
    void row(std::vector<std::string> cells) { rows_.push_back(std::move(cells)); }
    size_t size() const { return rows_.size(); }

    std::string body() const {
        std::ostringstream os;
        for (size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
        os << "\n";
        for (const auto& r : rows_) {
            for (size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
            os << "\n";
        }
        return os.str();
    }

    void write(const fs::path& file) const {
        std::ofstream out(file);
        if (!out) throw std::runtime_error("cannot write " + file.string());
        for (const auto& m : meta_) out << "# " << m << "\n";
        out << body();
    }

private:
    std::vector<std::string> meta_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

/// Returns the body of a CSV file (all lines after the '#' header block).
inline std::string csv_body(const fs::path& file) {
    std::ifstream in(file);
    std::string line, out;
    bool in_header = true;
    while (std::getline(in, line)) {
        if (in_header && !line.empty() && line[0] == '#') continue;
        in_header = false;
        out += line + "\n";
    }
    return out;
}

inline std::string lo_str(const Enclosure& e) { return format_sci(e.lo, 20, RoundDir::down); }
inline std::string hi_str(const Enclosure& e) { return format_sci(e.hi, 20, RoundDir::up); }
inline std::string num(const Rational& q) { return format_sci(q, 20); }
inline std::string num(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

inline json enclosure_json(const Enclosure& e) {
    return json{{"lo", to_fraction(e.lo)}, {"hi", to_fraction(e.hi)}, {"converged", e.converged}};
}

inline void write_json(const fs::path& file, const json& j) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    out << j.dump(2) << "\n";
}

inline const char* kFormats = R"(Output formats
==============

CSV files start with '#' metadata lines (command, construction fingerprint,
seed, relative epsilon, cache statistics). The remaining lines are the body:
one column line and one row per record. Bodies are deterministic for a fixed
configuration. Decimal bounds are printed with 20 significant digits and
rounded outward (lo down, hi up); exact rationals are in summary_<cmd>.json.

geometry.json       stages[]: stage, rank, height, width, spacers, offsets,
                    tower_measure, level_count; total_measure {lo, hi}
corr.csv            n,lo,hi,width,stage_used[,lo_normalized,hi_normalized]
census.csv          r,plateau_first,j_r,J_size,J_first,J_last,reference
lemma.csv           r,j,log10_h,tower_lo,tower_hi,q_lo,q_hi,gap_lo,gap_hi,bound,verdict
lemma_slopes.csv    r,points,slope
ineq2.csv           r,J_size,qq_lo,qq_hi,qp_lo,qp_hi,pp_lo,pp_hi,lhs_lo,lhs_hi,lhs_width,rhs,verdict
cross.csv           r,j,p,deviation_lo,deviation_hi,height_ratio,r_power,constant_fit
distance.csv        r,N,rho_sq,solver_residual,gram_condition,effective_rank,dimension,precision_bits,stage_used,exact_rho_sq
distance_r<R>.dat   plot data: N rho_sq
identity_r<R>.txt   key: value report; identity_r<R>_<mode>.bitensor lines "a b p/q"
spectrum.csv        theta,sigma_f,sigma_ff
spectrum.dat        plot data: theta sigma_f sigma_ff
spectrum_moments.csv n,c_lo,c_hi,csq_lo,csq_hi,bitensor_lo,bitensor_hi,match
mix.csv             n,lo,hi,target_lo,target_hi[,lo_normalized,hi_normalized]
oracle.csv          stage,shift,engine,brute,pairs_match,sim_value,engine_lower,sim_partial,sim_match
oracle_diff.txt     mismatching records, written only when a mismatch occurs
)";

/// Shared state of one command invocation.
class Session {
public:
    explicit Session(const RunConfig& cfg) : cfg_(cfg), construction_(cfg.params), engine_(construction_) {
        if (cfg.cache) engine_.attach_cache(engine_.cache_path_in(cfg.cache_dir));
        eps_ = cfg.eps_rel * engine_.c0();
    }

    ~Session() {
        try {
            engine_.flush();
        } catch (...) {
        }
    }

    const RunConfig& cfg() const { return cfg_; }
    const Construction& construction() const { return construction_; }
    CorrelationEngine& engine() { return engine_; }
    const Rational& eps() const { return eps_; }

    Census census(long r) const {
        if (cfg_.j_max > 0) return j_r_census(cfg_.params, static_cast<int>(r), cfg_.j_max);
        return j_r_census(cfg_.params, static_cast<int>(r));
    }

    /// r grid; 'auto' means every r >= 1 whose J_r starts below h_max.
    std::vector<long> r_values() const {
        if (!cfg_.r_auto) return cfg_.r_list;
        std::vector<long> out;
        for (long r = 1;; ++r) {
            Census cs = census(r);
            if (cs.members.empty()) continue;
            if (construction_.height(cs.members.front()) > cfg_.h_max) break;
            out.push_back(r);
        }
        return out;
    }

    std::string memo_line() const { return "memo_entries: " + std::to_string(engine_.table_sizes().total()); }

private:
    RunConfig cfg_;
    Construction construction_;
    CorrelationEngine engine_;
    Rational eps_;
};

inline int cmd_build(Session& s, std::ostream& out) {
    const auto& c = s.construction();
    json stages = json::array();
    out << "stage rank height width\n";
    for (int j = 0; j <= s.cfg().stages; ++j) {
        const StageGeometry& g = c.stage(j);
        json offs = json::array();
        for (const BigInt& o : g.offsets) offs.push_back(to_decimal(o));
        json st{{"stage", g.stage},
                {"rank", g.rank},
                {"height", to_decimal(g.height)},
                {"width", to_fraction(g.width)},
                {"spacers", g.spacers},
                {"offsets", offs},
                {"tower_measure", to_fraction(g.tower_measure)}};
        if (j >= c.base_stage()) st["level_count"] = to_decimal(c.level_count(j));
        stages.push_back(st);
        out << j << " " << g.rank << " " << to_decimal(g.height) << " " << to_fraction(g.width) << "\n";
    }
    Enclosure mu = total_measure(c, s.cfg().stages);
    json doc{{"construction", s.cfg().params.fingerprint()},
             {"stages", stages},
             {"total_measure", enclosure_json(mu)}};
    write_json(s.cfg().out / "geometry.json", doc);
    out << "total_measure " << mu << "\n";
    return kOk;
}

inline std::vector<BigInt> read_queries(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read query file " + file.string());
    std::vector<BigInt> out;
    std::string line;
    while (std::getline(in, line)) {
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        out.push_back(parse_bigint(line));
    }
    return out;
}

inline int cmd_corr(Session& s, std::ostream& out) {
    std::vector<BigInt> shifts = s.cfg().queries ? read_queries(*s.cfg().queries) : s.cfg().n_list;
    auto results = parallel_map(
        shifts, [&](const BigInt& n) { return s.engine().correlation(n, s.eps(), s.cfg().budget); }, s.cfg().threads);
    std::vector<std::string> cols{"n", "lo", "hi", "width", "stage_used"};
    std::optional<Enclosure> mu;
    if (s.cfg().normalize) {
        cols.insert(cols.end(), {"lo_normalized", "hi_normalized"});
        mu = total_measure(s.construction(), std::max(32, s.construction().base_stage()));
    }
    CsvTable t("corr", s.cfg(), cols);
    json rows = json::array();
    int status = kOk;
    for (size_t i = 0; i < shifts.size(); ++i) {
        const Enclosure& e = results[i];
        std::vector<std::string> row{to_decimal(shifts[i]), lo_str(e), hi_str(e), num(e.width()),
                                     std::to_string(e.stage)};
        if (mu) {
            row.push_back(format_sci(e.lo / mu->hi, 20, RoundDir::down));
            row.push_back(format_sci(e.hi / mu->lo, 20, RoundDir::up));
        }
        t.row(row);
        json jr = enclosure_json(e);
        jr["n"] = to_decimal(shifts[i]);
        jr["stage"] = e.stage;
        rows.push_back(jr);
        if (!e.converged) status = kIndeterminate;
        out << "c(" << to_decimal(shifts[i]) << ") in " << e << " stage " << e.stage
            << (e.converged ? "" : " (not converged)") << "\n";
    }
    t.meta(s.memo_line());
    t.write(s.cfg().out / "corr.csv");
    write_json(s.cfg().out / "summary_corr.json", json{{"correlations", rows}});
    return status;
}

inline int cmd_census(Session& s, std::ostream& out) {
    CsvTable t("census", s.cfg(), {"r", "plateau_first", "j_r", "J_size", "J_first", "J_last", "reference"});
    json rows = json::array();
    for (long r : s.r_values()) {
        Census cs = s.census(r);
        std::string first = cs.members.empty() ? "" : std::to_string(cs.members.front());
        std::string last = cs.members.empty() ? "" : std::to_string(cs.members.back());
        t.row({std::to_string(r), std::to_string(cs.plateau_first), std::to_string(cs.j_r),
               std::to_string(cs.size()), first, last, num(cs.reference)});
        rows.push_back(json{{"r", r}, {"j_r", cs.j_r}, {"J_r", cs.members}, {"reference", cs.reference}});
        out << "r=" << r << " j_r=" << cs.j_r << " |J_" << r << "|=" << cs.size() << " reference r^((1-d)/d)="
            << cs.reference << "\n";
    }
    t.write(s.cfg().out / "census.csv");
    write_json(s.cfg().out / "summary_census.json", json{{"census", rows}});
    return kOk;
}

inline int cmd_lemma(Session& s, std::ostream& out) {
    CsvTable t("lemma", s.cfg(),
               {"r", "j", "log10_h", "tower_lo", "tower_hi", "q_lo", "q_hi", "gap_lo", "gap_hi", "bound", "verdict"});
    CsvTable slopes("lemma", s.cfg(), {"r", "points", "slope"});
    std::vector<long> rs = s.r_values();
    std::vector<Census> censuses;
    for (long r : rs) censuses.push_back(s.census(r));
    auto plateaus = parallel_map(
        censuses, [&](const Census& cs) { return lemma_plateau(s.engine(), cs, s.cfg().h_max, s.eps()); },
        s.cfg().threads);
    int status = kOk;
    json rows = json::array();
    for (const PlateauLemma& pl : plateaus) {
        for (const LemmaReport& rep : pl.reports) {
            t.row({std::to_string(rep.r), std::to_string(rep.j), num(log10_abs(rep.height)), lo_str(rep.tower_term),
                   hi_str(rep.tower_term), lo_str(rep.q_term), hi_str(rep.q_term), lo_str(rep.gap), hi_str(rep.gap),
                   num(rep.bound), to_string(rep.verdict)});
            rows.push_back(json{{"r", rep.r},
                                {"j", rep.j},
                                {"height", to_decimal(rep.height)},
                                {"gap", enclosure_json(rep.gap)},
                                {"bound", to_fraction(rep.bound)},
                                {"verdict", to_string(rep.verdict)},
                                {"on_plateau", rep.on_plateau}});
            if (rep.verdict == Verdict::indeterminate) status = kIndeterminate;
            out << "r=" << rep.r << " j=" << rep.j << " gap " << rep.gap << " bound " << format_sci(rep.bound, 6)
                << " " << to_string(rep.verdict) << "\n";
        }
        slopes.row({std::to_string(pl.r), std::to_string(pl.reports.size()), pl.slope ? num(*pl.slope) : "nan"});
        if (pl.slope) out << "r=" << pl.r << " log-log slope " << *pl.slope << "\n";
    }
    t.meta(s.memo_line());
    t.write(s.cfg().out / "lemma.csv");
    slopes.write(s.cfg().out / "lemma_slopes.csv");
    write_json(s.cfg().out / "summary_lemma.json", json{{"reports", rows}});
    return status;
}

inline int cmd_ineq2(Session& s, std::ostream& out) {
    CsvTable t("ineq2", s.cfg(),
               {"r", "J_size", "qq_lo", "qq_hi", "qp_lo", "qp_hi", "pp_lo", "pp_hi", "lhs_lo", "lhs_hi", "lhs_width",
                "rhs", "verdict"});
    std::vector<Census> censuses;
    for (long r : s.r_values()) {
        Census cs = s.census(r);
        if (cs.members.empty()) {
            out << "r=" << r << ": J_r is empty, skipped\n";
            continue;
        }
        censuses.push_back(cs);
    }
    auto reps = parallel_map(
        censuses, [&](const Census& cs) { return inequality2(s.engine(), cs, s.eps()); }, s.cfg().threads);
    int status = kOk;
    json rows = json::array();
    for (const auto& rep : reps) {
        t.row({std::to_string(rep.r), std::to_string(rep.members.size()), lo_str(rep.qq), hi_str(rep.qq),
               lo_str(rep.qp), hi_str(rep.qp), lo_str(rep.pp), hi_str(rep.pp), lo_str(rep.lhs), hi_str(rep.lhs),
               num(rep.lhs.width()), num(rep.rhs), to_string(rep.verdict)});
        rows.push_back(json{{"r", rep.r},
                            {"J_r", rep.members},
                            {"qq", enclosure_json(rep.qq)},
                            {"qp", enclosure_json(rep.qp)},
                            {"pp", enclosure_json(rep.pp)},
                            {"lhs", enclosure_json(rep.lhs)},
                            {"rhs", to_fraction(rep.rhs)},
                            {"verdict", to_string(rep.verdict)}});
        if (rep.verdict == Verdict::indeterminate) status = kIndeterminate;
        out << "r=" << rep.r << " |J_r|=" << rep.members.size() << " lhs " << rep.lhs << " rhs "
            << format_sci(rep.rhs, 6) << " " << to_string(rep.verdict) << "\n";
    }
    t.meta(s.memo_line());
    t.write(s.cfg().out / "ineq2.csv");
    write_json(s.cfg().out / "summary_ineq2.json", json{{"reports", rows}});
    return status;
}

inline int cmd_cross(Session& s, std::ostream& out) {
    CsvTable t("cross", s.cfg(),
               {"r", "j", "p", "deviation_lo", "deviation_hi", "height_ratio", "r_power", "constant_fit"});
    struct Item {
        int j, p;
        long r;
    };
    std::vector<Item> items;
    for (long r : s.r_values()) {
        Census cs = s.census(r);
        for (int p : s.cfg().p_list)
            for (int j : cs.members) {
                bool partner = std::find(cs.members.begin(), cs.members.end(), j + p) != cs.members.end();
                if (partner && j >= s.construction().base_stage() && s.construction().height(j + p) <= s.cfg().h_max)
                    items.push_back({j, p, r});
            }
    }
    auto reps = parallel_map(
        items, [&](const Item& it) { return cross_height_gap(s.engine(), it.j, it.p, it.r, s.eps()); },
        s.cfg().threads);
    json rows = json::array();
    int status = kOk;
    for (const auto& rep : reps) {
        t.row({std::to_string(rep.r), std::to_string(rep.j), std::to_string(rep.p), lo_str(rep.deviation),
               hi_str(rep.deviation), num(rep.height_ratio), num(rep.r_power), num(rep.constant_fit)});
        rows.push_back(json{{"r", rep.r},
                            {"j", rep.j},
                            {"p", rep.p},
                            {"deviation", enclosure_json(rep.deviation)},
                            {"height_ratio", to_fraction(rep.height_ratio)},
                            {"r_power", to_fraction(rep.r_power)},
                            {"constant_fit", rep.constant_fit}});
        if (!rep.deviation.converged) status = kIndeterminate;
        out << "r=" << rep.r << " j=" << rep.j << " p=" << rep.p << " deviation " << rep.deviation << " C~"
            << rep.constant_fit << "\n";
    }
    t.meta(s.memo_line());
    t.write(s.cfg().out / "cross.csv");
    write_json(s.cfg().out / "summary_cross.json", json{{"reports", rows}});
    return status;
}

inline int cmd_distance(Session& s, std::ostream& out) {
    struct Item {
        long r;
        int N;
    };
    std::vector<Item> items;
    for (long r : s.r_values())
        for (int N : s.cfg().N_list) items.push_back({r, N});
    bool exact = s.cfg().exact;
    auto reps = parallel_map(
        items,
        [&](const Item& it) {
            return cyclic_distance(s.engine(), it.r, it.N, s.cfg().precision, exact && it.N <= 16);
        },
        s.cfg().threads);
    CsvTable t("distance", s.cfg(),
               {"r", "N", "rho_sq", "solver_residual", "gram_condition", "effective_rank", "dimension",
                "precision_bits", "stage_used", "exact_rho_sq"});
    json rows = json::array();
    std::map<long, std::ostringstream> plots;
    for (const auto& rep : reps) {
        std::string exact_s = rep.exact_rho_sq ? num(*rep.exact_rho_sq) : "";
        t.row({std::to_string(rep.r), std::to_string(rep.N), num(rep.rho_sq_value), num(rep.solver_residual),
               num(rep.gram_condition), std::to_string(rep.effective_rank), std::to_string(rep.dimension),
               std::to_string(rep.precision_bits), std::to_string(rep.stage_used), exact_s});
        json jr{{"r", rep.r},
                {"N", rep.N},
                {"rho_sq", num(rep.rho_sq_value)},
                {"solver_residual", rep.solver_residual},
                {"gram_condition", rep.gram_condition},
                {"effective_rank", rep.effective_rank},
                {"stage_used", rep.stage_used},
                {"correlation_width", to_fraction(rep.correlation_width)}};
        if (rep.exact_rho_sq) jr["exact_rho_sq"] = to_fraction(*rep.exact_rho_sq);
        rows.push_back(jr);
        plots[rep.r] << rep.N << " " << num(rep.rho_sq_value) << "\n";
        out << "r=" << rep.r << " N=" << rep.N << " rho_sq=" << num(rep.rho_sq_value)
            << " solver_residual=" << rep.solver_residual << " rank=" << rep.effective_rank << "/" << rep.dimension
            << "\n";
    }
    t.meta(s.memo_line());
    t.write(s.cfg().out / "distance.csv");
    for (auto& [r, os] : plots) {
        std::ofstream f(s.cfg().out / ("distance_r" + std::to_string(r) + ".dat"));
        f << "# N rho_sq\n" << os.str();
    }
    write_json(s.cfg().out / "summary_distance.json", json{{"reports", rows}});
    return kOk;
}

inline int cmd_identity(Session& s, std::ostream& out) {
    const std::string mode = s.cfg().mode;
    json rows = json::array();
    for (long r : s.r_values()) {
        if (r < 2) throw ConfigError("identity requires r >= 2");
        std::ofstream rep(s.cfg().out / ("identity_r" + std::to_string(r) + ".txt"));
        rep << "r: " << r << "\n";
        json jr{{"r", r}};
        if (mode == "printed" || mode == "both") {
            PrintedIdentityReport p = printed_identity_residual(r);
            rep << "printed.residual_terms: " << p.residual.size() << "\n"
                << "printed.l1_norm: " << to_fraction(p.l1_norm) << "\n"
                << "printed.best_common_shift: " << to_decimal(p.best_common_shift) << "\n"
                << "printed.best_common_shift_l1_norm: " << to_fraction(p.best_shift_l1_norm) << "\n";
            std::ofstream dump(s.cfg().out / ("identity_r" + std::to_string(r) + "_printed.bitensor"));
            p.residual.dump(dump);
            jr["printed"] = json{{"l1_norm", to_fraction(p.l1_norm)},
                                 {"terms", p.residual.size()},
                                 {"best_common_shift", to_decimal(p.best_common_shift)},
                                 {"best_common_shift_l1_norm", to_fraction(p.best_shift_l1_norm)}};
            out << "identity r=" << r << " mode=printed l1_norm=" << to_fraction(p.l1_norm)
                << " terms=" << p.residual.size() << " best_common_shift=" << to_decimal(p.best_common_shift)
                << " best_common_shift_l1_norm=" << to_fraction(p.best_shift_l1_norm) << "\n";
        }
        if (mode == "corrected" || mode == "both") {
            FormalBitensor res = corrected_identity_residual(r);
            rep << "corrected.residual_terms: " << res.size() << "\n"
                << "corrected.l1_norm: " << to_fraction(res.l1_norm()) << "\n";
            std::ofstream dump(s.cfg().out / ("identity_r" + std::to_string(r) + "_corrected.bitensor"));
            res.dump(dump);
            jr["corrected"] = json{{"l1_norm", to_fraction(res.l1_norm())}, {"terms", res.size()}};
            out << "identity r=" << r << " mode=corrected l1_norm=" << to_fraction(res.l1_norm())
                << " terms=" << res.size() << "\n";
        }
        rows.push_back(jr);
    }
    write_json(s.cfg().out / "summary_identity.json", json{{"identities", rows}});
    return kOk;
}

/// (T⊗T)^n (f⊗f).
inline FormalBitensor diagonal_power(const BigInt& n) {
    FormalBitensor b;
    b.add(n, n, 1);
    return b;
}

inline int cmd_spectrum(Session& s, std::ostream& out) {
    SpectralEstimate est = spectral_density(s.engine(), s.cfg().moments, s.cfg().grid, s.eps());
    CsvTable t("spectrum", s.cfg(), {"theta", "sigma_f", "sigma_ff"});
    std::ostringstream plot;
    plot << "# theta sigma_f sigma_ff\n";
    double min_f = INFINITY, min_ff = INFINITY;
    for (size_t g = 0; g < est.theta.size(); ++g) {
        t.row({num(est.theta[g]), num(est.sigma_f[g]), num(est.sigma_ff[g])});
        plot << num(est.theta[g]) << " " << num(est.sigma_f[g]) << " " << num(est.sigma_ff[g]) << "\n";
        min_f = std::min(min_f, est.sigma_f[g]);
        min_ff = std::min(min_ff, est.sigma_ff[g]);
    }
    t.meta("kernel_weighted_width_f: " + num(est.width_f));
    t.meta("kernel_weighted_width_ff: " + num(est.width_ff));
    t.write(s.cfg().out / "spectrum.csv");
    std::ofstream(s.cfg().out / "spectrum.dat") << plot.str();

    CsvTable m("spectrum", s.cfg(), {"n", "c_lo", "c_hi", "csq_lo", "csq_hi", "bitensor_lo", "bitensor_hi", "match"});
    auto oracle = [&](const BigInt& n) { return s.engine().correlation(n, s.eps()); };
    bool all_match = true;
    for (int n = 0; n < est.N; ++n) {
        Enclosure bt = bitensor_inner(diagonal_power(n), diagonal_power(0), oracle);
        const Enclosure& sq = est.moments_sq[static_cast<size_t>(n)];
        bool match = bt.midpoint() == sq.midpoint();
        all_match = all_match && match;
        m.row({std::to_string(n), lo_str(est.moments[static_cast<size_t>(n)]),
               hi_str(est.moments[static_cast<size_t>(n)]), lo_str(sq), hi_str(sq), lo_str(bt), hi_str(bt),
               match ? "true" : "false"});
    }
    m.write(s.cfg().out / "spectrum_moments.csv");
    double mean = grid_mean(est.sigma_f);
    write_json(s.cfg().out / "summary_spectrum.json",
               json{{"N", est.N},
                    {"grid", est.grid_size},
                    {"c0", to_fraction(s.engine().c0())},
                    {"grid_mean_sigma_f", mean},
                    {"min_sigma_f", min_f},
                    {"min_sigma_ff", min_ff},
                    {"width_f", est.width_f},
                    {"moments_match_bitensor", all_match}});
    out << "sigma_f: min " << min_f << " grid mean " << mean << " (c(0) = " << to_fraction(s.engine().c0())
        << ")\nsigma_ff: min " << min_ff << "\nmoments match bitensor inner products: "
        << (all_match ? "yes" : "no") << "\n";
    return all_match ? kOk : kError;
}

inline int cmd_mix(Session& s, std::ostream& out) {
    std::vector<MixingRow> rows = mixing_profile(s.engine(), s.cfg().n_max, s.eps());
    std::vector<std::string> cols{"n", "lo", "hi", "target_lo", "target_hi"};
    std::optional<Enclosure> mu;
    if (s.cfg().normalize) {
        cols.insert(cols.end(), {"lo_normalized", "hi_normalized"});
        mu = total_measure(s.construction(), std::max(32, s.construction().base_stage()));
    }
    CsvTable t("mix", s.cfg(), cols);
    int status = kOk;
    for (const MixingRow& r : rows) {
        std::vector<std::string> row{to_decimal(r.n), lo_str(r.correlation), hi_str(r.correlation), lo_str(r.target),
                                     hi_str(r.target)};
        if (mu) {
            row.push_back(format_sci(r.correlation.lo / mu->hi, 20, RoundDir::down));
            row.push_back(format_sci(r.correlation.hi / mu->lo, 20, RoundDir::up));
        }
        t.row(row);
        if (!r.correlation.converged) status = kIndeterminate;
    }
    t.write(s.cfg().out / "mix.csv");
    if (!rows.empty())
        out << "mixing target mu(A)^2/mu(X) in " << rows.front().target << "; c(" << to_decimal(rows.back().n)
            << ") in " << rows.back().correlation << "\n";
    return status;
}

/// Shifts sampled for oracle comparisons at one stage: a few fixed edge
/// cases, then uniform draws from [0, h_j + 2).
inline std::vector<std::int64_t> sample_shifts(std::uint64_t seed, int stage, std::int64_t height, int samples) {
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(stage + 1)));
    std::vector<std::int64_t> out{0, 1, height - 1, height};
    while (static_cast<int>(out.size()) < samples)
        out.push_back(static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(height + 2)));
    out.resize(static_cast<size_t>(samples));
    return out;
}

struct OracleRecord {
    int stage;
    std::int64_t shift;
    BigInt engine;
    std::uint64_t brute;
    Rational sim;
    Rational lower;
    bool partial;
    bool pairs_match() const { return engine == BigInt(static_cast<unsigned long>(brute)); }
    bool sim_match() const { return sim == lower; }
};

/// Engine vs brute force at stages base_stage..max_stage.
inline std::vector<OracleRecord> oracle_records(CorrelationEngine& eng, const StaircaseParams& params, int max_stage,
                                                int samples, std::uint64_t seed, size_t cap) {
    std::vector<OracleRecord> recs;
    const Construction& c = eng.construction();
    for (int j = params.base_stage; j <= max_stage; ++j) {
        std::vector<std::int64_t> level = oracle::enumerate_level_set(params, j, cap);
        oracle::IntervalMapStage map = oracle::build_interval_map(params, j);
        for (std::int64_t m : sample_shifts(seed, j, map.height, samples)) {
            OracleRecord rec{j, m, eng.pair_count(j, m), oracle::brute_pair_count(level, m), 0, 0, false};
            oracle::SimulationResult sim = oracle::simulate_measure(map, m);
            rec.sim = sim.value;
            rec.partial = sim.partial;
            rec.lower = c.width(j) * Rational(rec.engine);
            recs.push_back(std::move(rec));
        }
    }
    return recs;
}

inline int cmd_oracle_check(Session& s, std::ostream& out) {
    std::vector<OracleRecord> recs = oracle_records(s.engine(), s.cfg().params, s.cfg().oracle_stages,
                                                    s.cfg().samples, s.cfg().seed, s.cfg().cap);
    CsvTable t("oracle-check", s.cfg(),
               {"stage", "shift", "engine", "brute", "pairs_match", "sim_value", "engine_lower", "sim_partial",
                "sim_match"});
    std::ostringstream diff;
    size_t mismatches = 0;
    for (const auto& r : recs) {
        t.row({std::to_string(r.stage), std::to_string(r.shift), to_decimal(r.engine), std::to_string(r.brute),
               r.pairs_match() ? "true" : "false", to_fraction(r.sim), to_fraction(r.lower),
               r.partial ? "true" : "false", r.sim_match() ? "true" : "false"});
        if (!r.pairs_match() || !r.sim_match()) {
            ++mismatches;
            diff << "stage " << r.stage << " shift " << r.shift << ": engine " << to_decimal(r.engine) << " brute "
                 << r.brute << "; simulated " << to_fraction(r.sim) << " engine lower " << to_fraction(r.lower)
                 << "\n";
        }
    }
    t.write(s.cfg().out / "oracle.csv");
    if (mismatches) std::ofstream(s.cfg().out / "oracle_diff.txt") << diff.str();
    out << "oracle-check: " << recs.size() << " comparisons, " << mismatches << " mismatches\n";
    return mismatches ? kError : kOk;
}

/// Runs one subcommand; returns 0 on success, 2 on indeterminate verdicts,
/// 1 on errors.
inline int run_command(const std::string& name, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    try {
        cfg.validate();
        fs::create_directories(cfg.out);
        if (cfg.cache) fs::create_directories(cfg.cache_dir);
        std::ofstream(cfg.out / "FORMATS") << kFormats;
        for (const auto& w : cfg.params.warnings()) err << "warning: " << w << "\n";
        Session s(cfg);
        if (name == "build") return cmd_build(s, out);
        if (name == "corr") return cmd_corr(s, out);
        if (name == "census") return cmd_census(s, out);
        if (name == "lemma") return cmd_lemma(s, out);
        if (name == "ineq2") return cmd_ineq2(s, out);
        if (name == "cross") return cmd_cross(s, out);
        if (name == "distance") return cmd_distance(s, out);
        if (name == "identity") return cmd_identity(s, out);
        if (name == "spectrum") return cmd_spectrum(s, out);
        if (name == "mix") return cmd_mix(s, out);
        if (name == "oracle-check") return cmd_oracle_check(s, out);
        err << "unknown command '" << name << "'\n";
        return kError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kError;
    }
}

}  // namespace staircase::app

#endif
