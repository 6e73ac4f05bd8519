#ifndef STAIRCASE_ORACLE_HPP
#define STAIRCASE_ORACLE_HPP

// Brute-force ground truth for small stages. Nothing here uses the
// correlation recursion or the cached tower geometry: heights, offsets and
// the interval layout are rebuilt from the rank sequence with machine
// integers, and every count is done by direct enumeration.

#include "staircase/construction.hpp"
#include "staircase/numeric.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace staircase::oracle {

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t out;
    if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("oracle coordinate overflow");
    return out;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t out;
    if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("oracle coordinate overflow");
    return out;
}

inline std::int64_t base_level_int(const StaircaseParams& p) {
    if (!p.base_level.fits_slong_p()) throw std::overflow_error("base level too large for the oracle");
    return p.base_level.get_si();
}

/// Sorted positions of A inside tower j, built by iterating the cut-and-stack
/// step: copy i starts after i-1 full towers and spacers s(1), ..., s(i-1).
inline std::vector<std::int64_t> enumerate_level_set(const StaircaseParams& p, int j,
                                                     size_t cap = kDefaultLevelCap) {
    if (j < p.base_stage) throw std::invalid_argument("stage precedes the base stage");
    std::int64_t h = 1;
    for (int k = 0; k < p.base_stage; ++k) {
        int r = rank_sequence(p, k);
        std::int64_t next = 0;
        for (int i = 1; i <= r; ++i) next = checked_add(next, checked_add(h, i < r ? i : 0));
        h = next;
    }
    std::vector<std::int64_t> pos{base_level_int(p)};
    for (int k = p.base_stage; k < j; ++k) {
        int r = rank_sequence(p, k);
        if (pos.size() * static_cast<size_t>(r) > cap)
            throw CapExceeded("oracle level set at stage " + std::to_string(k + 1) + " would hold " +
                                  std::to_string(pos.size() * static_cast<size_t>(r)) + " positions",
                              BigInt(static_cast<unsigned long>(pos.size())) * r);
        std::vector<std::int64_t> next;
        next.reserve(pos.size() * static_cast<size_t>(r));
        std::int64_t start = 0;
        for (int i = 1; i <= r; ++i) {
            for (std::int64_t x : pos) next.push_back(checked_add(start, x));
            start = checked_add(start, checked_add(h, i < r ? i : 0));
        }
        h = start;
        std::sort(next.begin(), next.end());
        pos = std::move(next);
    }
    return pos;
}

/// #{x in set : x + m in set} by a two-pointer sweep over sorted positions.
inline std::uint64_t brute_pair_count(const std::vector<std::int64_t>& sorted, std::int64_t m) {
    if (m < 0) m = -m;
    std::uint64_t count = 0;
    size_t hi = 0;
    for (size_t lo = 0; lo < sorted.size(); ++lo) {
        std::int64_t want = sorted[lo] + m;
        while (hi < sorted.size() && sorted[hi] < want) ++hi;
        if (hi == sorted.size()) break;
        if (sorted[hi] == want) ++count;
    }
    return count;
}

/// Translation of one source interval [left, left + length).
struct IntervalPiece {
    std::int64_t left = 0;
    std::int64_t length = 0;
    std::int64_t translation = 0;
};

/// T on tower j as a piecewise translation of real intervals.
///
/// Coordinates are integers in units of w_j. Stage 0 is [0, 1); each step
/// cuts every level into r_j equal pieces and appends the spacer intervals
/// to the right of the space built so far, so X_j = [0, space_end).
struct IntervalMapStage {
    int stage = 0;
    Rational unit;                       // w_j
    std::int64_t height = 0;             // h_j
    std::int64_t space_end = 0;          // mu(X_j) / w_j
    std::vector<std::int64_t> level_left;  // left endpoint of level t, t < h_j
    std::vector<IntervalPiece> pieces;   // levels 0..h_j - 2 and their translations
    std::int64_t a_left = 0, a_right = 0;  // support of f
    std::vector<std::pair<std::int64_t, size_t>> by_left;  // piece lookup by source interval
    std::vector<std::int64_t> displacement;  // displacement[i] = translation sum of pieces < i
};

inline IntervalMapStage build_interval_map(const StaircaseParams& p, int j) {
    if (j < p.base_stage) throw std::invalid_argument("stage precedes the base stage");
    IntervalMapStage m;
    std::vector<std::int64_t> levels{0};
    std::int64_t space_end = 1;
    Rational unit = 1;
    std::int64_t a_left = 0, a_right = 0;
    for (int k = 0;; ++k) {
        if (k == p.base_stage) {
            std::int64_t lvl = base_level_int(p);
            if (lvl >= static_cast<std::int64_t>(levels.size())) throw std::invalid_argument("base level above tower");
            a_left = levels[static_cast<size_t>(lvl)];
            a_right = a_left + 1;
        }
        if (k == j) break;
        int r = rank_sequence(p, k);
        std::vector<std::int64_t> next;
        next.reserve(levels.size() * static_cast<size_t>(r) + static_cast<size_t>(r) * static_cast<size_t>(r) / 2);
        std::int64_t spacer_at = checked_mul(space_end, r);
        for (int i = 1; i <= r; ++i) {
            for (std::int64_t left : levels) next.push_back(checked_add(checked_mul(left, r), i - 1));
            int spacers = i < r ? i : 0;
            for (int s = 0; s < spacers; ++s) next.push_back(spacer_at++);
        }
        space_end = spacer_at;
        if (k >= p.base_stage) {
            a_left = checked_mul(a_left, r);
            a_right = checked_mul(a_right, r);
        }
        unit /= r;
        levels = std::move(next);
    }
    m.stage = j;
    m.unit = unit;
    m.height = static_cast<std::int64_t>(levels.size());
    m.space_end = space_end;
    m.a_left = a_left;
    m.a_right = a_right;
    for (size_t t = 0; t + 1 < levels.size(); ++t) m.pieces.push_back({levels[t], 1, levels[t + 1] - levels[t]});
    m.level_left = std::move(levels);
    m.by_left.reserve(m.pieces.size());
    for (size_t i = 0; i < m.pieces.size(); ++i) m.by_left.emplace_back(m.pieces[i].left, i);
    std::sort(m.by_left.begin(), m.by_left.end());
    m.displacement.assign(m.pieces.size() + 1, 0);
    for (size_t i = 0; i < m.pieces.size(); ++i)
        m.displacement[i + 1] = checked_add(m.displacement[i], m.pieces[i].translation);
    return m;
}

struct SimulationResult {
    Rational value;        // measure of the resolved part of T^n A ∩ A
    bool partial = false;  // some of A left the tower within n steps
};

/// Pushes every level of A through n applications of the interval map and
/// measures the overlap of the image with A.
inline SimulationResult simulate_measure(const IntervalMapStage& m, std::int64_t n) {
    if (n < 0) throw std::invalid_argument("simulation needs n >= 0");
    const auto& by_left = m.by_left;
    const auto& prefix = m.displacement;
    SimulationResult res;
    std::int64_t hits = 0;
    for (std::int64_t x = m.a_left; x < m.a_right; ++x) {
        size_t piece;
        auto it = std::lower_bound(by_left.begin(), by_left.end(), std::make_pair(x, size_t{0}));
        if (it != by_left.end() && it->first == x) {
            piece = it->second;
        } else {
            // x lies in the top level, which has no outgoing piece
            if (n > 0) res.partial = true;
            else ++hits;
            continue;
        }
        if (piece + static_cast<size_t>(n) > m.pieces.size()) {
            res.partial = true;
            continue;
        }
        std::int64_t y = x + prefix[piece + static_cast<size_t>(n)] - prefix[piece];
        if (y >= m.a_left && y < m.a_right) ++hits;
    }
    res.value = m.unit * hits;
    return res;
}

inline SimulationResult simulate_measure(const StaircaseParams& p, std::int64_t n, int j) {
    return simulate_measure(build_interval_map(p, j), n);
}

}  // namespace staircase::oracle

#endif
