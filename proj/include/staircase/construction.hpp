#ifndef STAIRCASE_CONSTRUCTION_HPP
#define STAIRCASE_CONSTRUCTION_HPP

#include "staircase/enclosure.hpp"
#include "staircase/numeric.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace staircase {

/// Raised when an explicit level set would exceed the materialization cap.
class CapExceeded : public std::runtime_error {
public:
    CapExceeded(const std::string& what, BigInt requested)
        : std::runtime_error(what), requested_(std::move(requested)) {}
    const BigInt& requested() const { return requested_; }

private:
    BigInt requested_;
};

/// Raised when a rank plateau is not closed below the scan limit.
class CensusIncomplete : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Rounding { floor, round };

inline const char* to_string(Rounding r) { return r == Rounding::floor ? "floor" : "round"; }

inline Rounding parse_rounding(const std::string& s) {
    if (s == "floor") return Rounding::floor;
    if (s == "round") return Rounding::round;
    throw std::invalid_argument("rounding must be 'floor' or 'round', got '" + s + "'");
}

inline constexpr std::size_t kDefaultLevelCap = 10'000'000;

/// Parameter law of a staircase construction.
///
/// Ranks follow r_j = max(r_min, rounding(j^d)) unless `override_ranks` is
/// set, in which case entry j is used verbatim. With `repeat_last` the final
/// override entry is repeated forever (constant-rank test constructions).
/// The observable f is the indicator of level `base_level` of tower
/// `base_stage`.
struct StaircaseParams {
    double d = 0.5;
    int r_min = 2;
    Rounding rounding = Rounding::round;
    int base_stage = 0;
    BigInt base_level = 0;
    std::optional<std::vector<int>> override_ranks;
    bool repeat_last = false;

    static StaircaseParams constant(int r) {
        StaircaseParams p;
        p.override_ranks = std::vector<int>{r};
        p.repeat_last = true;
        return p;
    }

    static StaircaseParams power_law(double d, Rounding rounding = Rounding::round, int r_min = 2) {
        StaircaseParams p;
        p.d = d;
        p.rounding = rounding;
        p.r_min = r_min;
        return p;
    }

    bool uses_law() const { return !override_ranks.has_value(); }

    /// Non-fatal remarks, e.g. an exponent outside the 0 < d < 0.2 regime.
    std::vector<std::string> warnings() const {
        std::vector<std::string> out;
        if (uses_law() && d >= 0.2)
            out.push_back("exponent d=" + std::to_string(d) +
                          " is outside 0<d<0.2; results illustrate the mechanism only");
        return out;
    }

    void validate() const {
        if (r_min < 2) throw std::invalid_argument("r_min must be >= 2");
        if (base_stage < 0) throw std::invalid_argument("base_stage must be >= 0");
        if (base_level < 0) throw std::invalid_argument("base_level must be >= 0");
        if (uses_law()) {
            if (!(d > 0.0 && d <= 1.0)) throw std::invalid_argument("exponent d must satisfy 0 < d <= 1");
        } else {
            const auto& ranks = *override_ranks;
            if (ranks.empty()) throw std::invalid_argument("override_ranks must not be empty");
            for (size_t i = 0; i < ranks.size(); ++i) {
                if (ranks[i] < 2) throw std::invalid_argument("override ranks must be >= 2");
                if (i > 0 && ranks[i] < ranks[i - 1])
                    throw std::invalid_argument("override ranks must be nondecreasing");
            }
        }
    }

    /// Canonical one-line description; identifies persistent caches.
    std::string fingerprint() const {
        std::ostringstream os;
        os.precision(17);
        if (uses_law()) {
            os << "law d=" << d << " rounding=" << to_string(rounding) << " r_min=" << r_min;
        } else {
            os << "ranks=";
            for (size_t i = 0; i < override_ranks->size(); ++i) os << (i ? "," : "") << (*override_ranks)[i];
            os << " repeat_last=" << (repeat_last ? "true" : "false");
        }
        os << " base_stage=" << base_stage << " base_level=" << to_decimal(base_level);
        return os.str();
    }
};

/// r_j for stage j.
inline int rank_sequence(const StaircaseParams& params, std::int64_t j) {
    if (j < 0) throw std::invalid_argument("stage index must be >= 0");
    if (!params.uses_law()) {
        const auto& ranks = *params.override_ranks;
        if (static_cast<std::uint64_t>(j) < ranks.size()) return ranks[static_cast<size_t>(j)];
        if (params.repeat_last) return ranks.back();
        throw std::out_of_range("override rank sequence exhausted at stage " + std::to_string(j) +
                                " (length " + std::to_string(ranks.size()) + ")");
    }
    double x = std::pow(static_cast<double>(j), params.d);
    double v = params.rounding == Rounding::floor ? std::floor(x * (1.0 + 1e-12)) : std::floor(x + 0.5);
    if (v > 1e9) throw std::overflow_error("rank exceeds supported range");
    return std::max(params.r_min, static_cast<int>(v));
}

/// Exact data of tower j and the way it is cut into tower j+1.
struct StageGeometry {
    int stage = 0;
    int rank = 0;                 // r_j
    BigInt height;                // h_j
    Rational width;               // w_j, measure of the base E_j
    std::vector<int> spacers;     // s_j(1..r_j) = (1, 2, ..., r_j - 1, 0)
    std::vector<BigInt> offsets;  // o_1..o_{r_j}, start of copy i inside tower j+1
    Rational tower_measure;       // h_j * w_j

    BigInt next_height() const {
        BigInt r = rank;
        return r * height + r * (r - 1) / 2;
    }
};

inline StageGeometry make_stage(int stage, int rank, BigInt height, Rational width) {
    StageGeometry g;
    g.stage = stage;
    g.rank = rank;
    g.height = std::move(height);
    g.width = std::move(width);
    g.spacers.resize(static_cast<size_t>(rank));
    for (int i = 1; i <= rank; ++i) g.spacers[static_cast<size_t>(i - 1)] = (i < rank) ? i : 0;
    g.offsets.resize(static_cast<size_t>(rank));
    BigInt o = 0;
    for (int i = 0; i < rank; ++i) {
        g.offsets[static_cast<size_t>(i)] = o;
        o += g.height + g.spacers[static_cast<size_t>(i)];
    }
    g.tower_measure = Rational(g.height) * g.width;
    return g;
}

/// Staircase tower geometry, computed incrementally and cached.
///
/// Stage records are immutable once appended; lookups take a shared lock and
/// extension takes an exclusive one, so a Construction may be queried from
/// several threads.
class Construction {
public:
    explicit Construction(StaircaseParams params) : params_(std::move(params)) {
        params_.validate();
        const BigInt& h0 = stage(params_.base_stage).height;
        if (params_.base_level >= h0)
            throw std::invalid_argument("base_level " + to_decimal(params_.base_level) +
                                        " is not below h_{base_stage} = " + to_decimal(h0));
    }

    Construction(const Construction&) = delete;
    Construction& operator=(const Construction&) = delete;

    const StaircaseParams& params() const { return params_; }
    int rank(int j) const { return rank_sequence(params_, j); }
    int base_stage() const { return params_.base_stage; }
    const BigInt& base_level() const { return params_.base_level; }

    const StageGeometry& stage(int j) const {
        if (j < 0) throw std::invalid_argument("stage index must be >= 0");
        {
            std::shared_lock lock(mutex_);
            if (static_cast<size_t>(j) < stages_.size()) return stages_[static_cast<size_t>(j)];
        }
        std::unique_lock lock(mutex_);
        if (stages_.empty()) stages_.push_back(make_stage(0, rank(0), BigInt(1), Rational(1)));
        while (stages_.size() <= static_cast<size_t>(j)) {
            const StageGeometry& prev = stages_.back();
            int next = prev.stage + 1;
            stages_.push_back(make_stage(next, rank(next), prev.next_height(), prev.width / prev.rank));
        }
        return stages_[static_cast<size_t>(j)];
    }

    const BigInt& height(int j) const { return stage(j).height; }
    const Rational& width(int j) const { return stage(j).width; }

    /// mu(A), the measure of the level carrying f.
    const Rational& level_measure() const { return width(params_.base_stage); }

    /// |L_j| = prod_{base_stage <= k < j} r_k.
    BigInt level_count(int j) const {
        if (j < params_.base_stage) throw std::invalid_argument("stage precedes the base stage");
        BigInt n = 1;
        for (int k = params_.base_stage; k < j; ++k) n *= rank(k);
        return n;
    }

    /// Smallest j >= base_stage with h_j > n.
    int first_stage_above(const BigInt& n) const {
        int j = params_.base_stage;
        while (height(j) <= n) ++j;
        return j;
    }

    size_t cached_stages() const {
        std::shared_lock lock(mutex_);
        return stages_.size();
    }

private:
    StaircaseParams params_;
    mutable std::shared_mutex mutex_;
    mutable std::deque<StageGeometry> stages_;
};

/// Positions of the level set A inside tower `stage`.
///
/// Always carries the implicit description (base stage and level plus the
/// lift rule); `positions` is filled only while the set stays under the cap.
struct LevelSet {
    int stage = 0;
    int base_stage = 0;
    BigInt base_level = 0;
    BigInt size = 1;
    std::optional<std::vector<BigInt>> positions;

    bool is_explicit() const { return positions.has_value(); }

    const std::vector<BigInt>& explicit_positions() const {
        if (!positions)
            throw CapExceeded("level set at stage " + std::to_string(stage) + " has " + to_decimal(size) +
                                  " positions; explicit form not materialized",
                              size);
        return *positions;
    }
};

inline LevelSet base_level_set(const Construction& c) {
    LevelSet ls;
    ls.stage = c.base_stage();
    ls.base_stage = c.base_stage();
    ls.base_level = c.base_level();
    ls.size = 1;
    ls.positions = std::vector<BigInt>{c.base_level()};
    return ls;
}

/// L_{j+1} = union over copies i of (o_i + L_j).
inline LevelSet lift_level_set(const LevelSet& ls, const StageGeometry& g, size_t cap = kDefaultLevelCap) {
    if (ls.stage != g.stage)
        throw std::invalid_argument("level set stage " + std::to_string(ls.stage) + " does not match geometry stage " +
                                    std::to_string(g.stage));
    if (g.rank < 2) throw std::invalid_argument("lift requires r_j >= 2, got " + std::to_string(g.rank));
    LevelSet out;
    out.stage = ls.stage + 1;
    out.base_stage = ls.base_stage;
    out.base_level = ls.base_level;
    out.size = ls.size * g.rank;
    if (ls.positions && out.size <= cap) {
        std::vector<BigInt> pos;
        pos.reserve(out.size.get_ui());
        for (const BigInt& o : g.offsets)
            for (const BigInt& p : *ls.positions) pos.push_back(o + p);
        out.positions = std::move(pos);  // copies occupy increasing disjoint blocks, so already sorted
    }
    return out;
}

/// Level set at stage j obtained by lifting the base level.
inline LevelSet level_set_at(const Construction& c, int j, size_t cap = kDefaultLevelCap) {
    if (j < c.base_stage()) throw std::invalid_argument("stage precedes the base stage");
    LevelSet ls = base_level_set(c);
    while (ls.stage < j) ls = lift_level_set(ls, c.stage(ls.stage), cap);
    return ls;
}

/// Certified enclosure of mu(X) = lim h_j w_j.
///
/// Stage k adds (r_k - 1) w_k / 2 of spacer mass. Terms are summed exactly
/// for 64 stages past j_limit; the remainder uses rank increments <= 1 and
/// w_{k+1} <= w_k / 2, which bound it by w_K r_K.
inline Enclosure total_measure(const Construction& c, int j_limit) {
    if (j_limit < 0) throw std::invalid_argument("j_limit must be >= 0");
    const StageGeometry& g = c.stage(j_limit);
    Rational lower = g.tower_measure;
    Rational upper = lower;
    constexpr int kExplicitTerms = 64;
    int last = j_limit + kExplicitTerms;
    for (int k = j_limit; k < last; ++k) {
        const StageGeometry& s = c.stage(k);
        upper += Rational(s.rank - 1) * s.width / 2;
    }
    const StageGeometry& tail = c.stage(last);
    if (!c.params().uses_law()) {
        const auto& ranks = *c.params().override_ranks;
        for (size_t k = static_cast<size_t>(last) + 1; k < ranks.size(); ++k)
            if (ranks[k] > ranks[k - 1] + 1)
                throw std::domain_error("tail bound requires rank increments of at most 1");
        if (!c.params().repeat_last) c.rank(static_cast<int>(ranks.size()));  // throws: tail unknown
    }
    upper += tail.width * tail.rank;
    return {lower, upper, true, j_limit};
}

/// Stages on the plateau r_j = r + 1, minus the last r of them.
struct Census {
    int r = 0;
    int plateau_first = -1;
    int j_r = -1;                 // last stage with r_j = r + 1
    std::vector<int> members;     // J_r
    double reference = 0.0;       // r^((1-d)/d)

    size_t size() const { return members.size(); }
};

inline Census j_r_census(const StaircaseParams& params, int r, int j_max) {
    if (r < 1) throw std::invalid_argument("census requires r >= 1");
    if (j_max < 0) throw std::invalid_argument("j_max must be >= 0");
    if (rank_sequence(params, j_max) <= r + 1)
        throw CensusIncomplete("census incomplete: r_" + std::to_string(j_max) + " = " +
                               std::to_string(rank_sequence(params, j_max)) + " does not exceed " +
                               std::to_string(r + 1));
    Census cs;
    cs.r = r;
    for (int j = 0; j <= j_max; ++j) {
        if (rank_sequence(params, j) == r + 1) {
            if (cs.plateau_first < 0) cs.plateau_first = j;
            cs.j_r = j;
        }
    }
    if (cs.j_r < 0)
        throw CensusIncomplete("no stage with r_j = " + std::to_string(r + 1) + " below j_max");
    for (int j = cs.plateau_first; j <= cs.j_r; ++j)
        if (rank_sequence(params, j) == r + 1 && j < cs.j_r - r) cs.members.push_back(j);
    cs.reference = params.uses_law() ? std::pow(static_cast<double>(r), (1.0 - params.d) / params.d) : 0.0;
    return cs;
}

/// Scans ranks forward until the plateau r_j = r + 1 has closed.
inline Census j_r_census(const StaircaseParams& params, int r) {
    int j = 0;
    constexpr int kScanLimit = 50'000'000;
    while (rank_sequence(params, j) <= r + 1) {
        if (!params.uses_law() && params.repeat_last &&
            static_cast<size_t>(j) >= params.override_ranks->size())
            throw CensusIncomplete("census incomplete: constant rank tail never exceeds " + std::to_string(r + 1));
        if (++j > kScanLimit) throw CensusIncomplete("census incomplete: scan limit reached");
    }
    return j_r_census(params, r, j);
}

}  // namespace staircase

#endif
