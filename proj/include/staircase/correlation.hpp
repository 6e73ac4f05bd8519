#ifndef STAIRCASE_CORRELATION_HPP
#define STAIRCASE_CORRELATION_HPP

#include "staircase/construction.hpp"
#include "staircase/enclosure.hpp"

#include <algorithm>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace staircase {

inline constexpr int kDefaultStageBudget = 64;

/// Correlations c(n) = mu(T^n A ∩ A) of the staircase level indicator.
///
/// Pair counts N_j(m) = #{k in L_j : k + m in L_j} follow
///     N_{j+1}(m) = sum_{i,i'} N_j(m + o_i - o_i'),
/// where only offset pairs with |m + o_i - o_i'| < h_j contribute; the
/// offsets are sorted, so those pairs are found by binary search. Suffix
/// counts #(L_j ∩ [h_j - n, h_j)) follow the analogous recursion over the
/// gaps between each copy and the top of the next tower. Both tables are
/// memoized on (stage, |shift|) and may be persisted to an append-only file.
class CorrelationEngine {
public:
    explicit CorrelationEngine(const Construction& construction) : c_(construction) {}

    CorrelationEngine(const CorrelationEngine&) = delete;
    CorrelationEngine& operator=(const CorrelationEngine&) = delete;

    ~CorrelationEngine() {
        try {
            flush();
        } catch (...) {
        }
    }

    const Construction& construction() const { return c_; }

    /// c(0) = mu(A), exact.
    const Rational& c0() const { return c_.level_measure(); }

    Rational default_epsilon() const { return c0() / 1'000'000'000; }

    BigInt pair_count(int j, const BigInt& shift) {
        check_stage(j);
        BigInt m = shift < 0 ? BigInt(-shift) : shift;
        const StageGeometry& g = c_.stage(j);
        if (m >= g.height) return 0;
        if (j == c_.base_stage()) return m == 0 ? 1 : 0;
        if (auto hit = lookup(pairs_, j, m)) return *hit;

        const StageGeometry& prev = c_.stage(j - 1);
        std::map<BigInt, unsigned long> children;
        const auto& o = prev.offsets;
        for (const BigInt& oi : o) {
            BigInt centre = m + oi;
            BigInt lower = centre - prev.height;
            BigInt upper = centre + prev.height;
            auto it = std::upper_bound(o.begin(), o.end(), lower);
            for (; it != o.end() && *it < upper; ++it) {
                BigInt child = centre - *it;
                if (child < 0) child = -child;
                ++children[child];
            }
        }
        BigInt total = 0;
        for (const auto& [child, mult] : children) total += pair_count(j - 1, child) * mult;
        store(pairs_, j, m, total, 'P');
        return total;
    }

    BigInt tail_count(int j, const BigInt& n) {
        check_stage(j);
        if (n <= 0) return 0;
        const StageGeometry& g = c_.stage(j);
        if (n >= g.height) return c_.level_count(j);
        if (j == c_.base_stage()) return c_.base_level() >= g.height - n ? 1 : 0;
        if (auto hit = lookup(tails_, j, n)) return *hit;

        const StageGeometry& prev = c_.stage(j - 1);
        BigInt total = 0;
        for (const BigInt& oi : prev.offsets) {
            BigInt above = g.height - oi - prev.height;  // levels between copy top and tower top
            BigInt window = n - above;
            if (window > 0) total += tail_count(j - 1, window);
        }
        store(tails_, j, n, total, 'T');
        return total;
    }

    /// [w_j N_j(n), w_j (N_j(n) + tail_j(|n|))] clamped to [0, c(0)].
    Enclosure stage_enclosure(int j, const BigInt& n) {
        check_stage(j);
        BigInt m = n < 0 ? BigInt(-n) : n;
        const Rational& w = c_.width(j);
        Rational lo = w * Rational(pair_count(j, m));
        Rational hi = lo + w * Rational(tail_count(j, m));
        Enclosure e(lo, hi, true, j);
        e = e.clamped(0, c0());
        e.stage = j;
        return e;
    }

    /// Lower endpoint at stage j. For a fixed j this is the autocorrelation of
    /// a finite set, hence a positive-definite sequence in n.
    Rational stage_lower(int j, const BigInt& n) { return c_.width(j) * Rational(pair_count(j, n)); }

    /// Tightest-needed enclosure of c(n): the first stage whose width is <= eps,
    /// searching at most `budget` stages past the first stage with h_j > |n|.
    Enclosure correlation(const BigInt& n, const Rational& eps, int budget = kDefaultStageBudget) {
        if (eps <= 0) throw std::invalid_argument("epsilon must be positive");
        BigInt m = n < 0 ? BigInt(-n) : n;
        int start = c_.first_stage_above(m);
        Enclosure e = stage_enclosure(start, m);
        for (int j = start; j <= start + budget; ++j) {
            e = stage_enclosure(j, m);
            if (e.width() <= eps) return e;
        }
        e.converged = false;
        return e;
    }

    Enclosure correlation(const BigInt& n) { return correlation(n, default_epsilon()); }

    /// c(h_j + i).
    Enclosure correlation_at_tower_height(int j, const BigInt& i, const Rational& eps,
                                          int budget = kDefaultStageBudget) {
        if (i < 0) throw std::invalid_argument("tower-height offset must be >= 0");
        return correlation(c_.height(j) + i, eps, budget);
    }

    /// Stage from which every listed lag has an enclosure of width <= eps.
    int common_stage(const std::vector<BigInt>& lags, const Rational& eps, int budget = kDefaultStageBudget) {
        int stage = c_.base_stage();
        for (const BigInt& n : lags) stage = std::max(stage, correlation(n, eps, budget).stage);
        return stage;
    }

    struct TableSizes {
        std::vector<size_t> pair_entries;  // indexed by stage
        std::vector<size_t> tail_entries;
        size_t total() const {
            size_t t = 0;
            for (size_t v : pair_entries) t += v;
            for (size_t v : tail_entries) t += v;
            return t;
        }
    };

    TableSizes table_sizes() const {
        std::shared_lock lock(mutex_);
        TableSizes out;
        for (const auto& m : pairs_) out.pair_entries.push_back(m.size());
        for (const auto& m : tails_) out.tail_entries.push_back(m.size());
        return out;
    }

    /// Binds a persistent cache file: existing records are loaded, and new
    /// records are appended on flush(). The header must match this
    /// construction's fingerprint.
    void attach_cache(const std::filesystem::path& file) {
        std::unique_lock lock(mutex_);
        cache_file_ = file;
        std::ifstream in(file);
        if (!in) return;
        std::string line;
        std::string expected = header_line();
        bool header_seen = false;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            if (line[0] == '#') {
                if (!header_seen) {
                    if (line != expected)
                        throw std::runtime_error("cache file " + file.string() +
                                                 " belongs to a different construction: " + line);
                    header_seen = true;
                }
                continue;
            }
            std::istringstream ls(line);
            std::string kind, stage, key, value;
            if (!(ls >> kind >> stage >> key >> value) || (kind != "pair" && kind != "tail"))
                throw std::runtime_error("malformed cache record at " + file.string() + ":" + std::to_string(lineno));
            int j = std::stoi(stage);
            auto& table = kind == "pair" ? pairs_ : tails_;
            grow(table, j);
            table[static_cast<size_t>(j)].emplace(parse_bigint(key), parse_bigint(value));
        }
        if (lineno > 0 && !header_seen) throw std::runtime_error("cache file " + file.string() + " has no header");
        header_written_ = lineno > 0;
    }

    void flush() {
        std::unique_lock lock(mutex_);
        if (!cache_file_ || pending_.empty()) return;
        std::filesystem::create_directories(cache_file_->parent_path().empty() ? std::filesystem::path(".")
                                                                                 : cache_file_->parent_path());
        std::ofstream out(*cache_file_, std::ios::app);
        if (!out) throw std::runtime_error("cannot append to cache file " + cache_file_->string());
        if (!header_written_) {
            out << header_line() << "\n";
            header_written_ = true;
        }
        for (const std::string& rec : pending_) out << rec << "\n";
        pending_.clear();
    }

    /// Name of the cache file for this construction inside `dir`.
    std::filesystem::path cache_path_in(const std::filesystem::path& dir) const {
        std::uint64_t h = 1469598103934665603ull;  // FNV-1a, stable across builds
        for (unsigned char ch : c_.params().fingerprint()) {
            h ^= ch;
            h *= 1099511628211ull;
        }
        std::ostringstream os;
        os << "corr-" << std::hex << h << ".cache";
        return dir / os.str();
    }

private:
    using Table = std::deque<std::map<BigInt, BigInt>>;

    void check_stage(int j) const {
        if (j < c_.base_stage())
            throw std::invalid_argument("stage " + std::to_string(j) + " precedes the base stage " +
                                        std::to_string(c_.base_stage()));
    }

    std::string header_line() const { return "# staircase-corr-cache v1 " + c_.params().fingerprint(); }

    static void grow(Table& t, int j) {
        while (t.size() <= static_cast<size_t>(j)) t.emplace_back();
    }

    std::optional<BigInt> lookup(const Table& t, int j, const BigInt& key) const {
        std::shared_lock lock(mutex_);
        if (static_cast<size_t>(j) >= t.size()) return std::nullopt;
        const auto& m = t[static_cast<size_t>(j)];
        auto it = m.find(key);
        if (it == m.end()) return std::nullopt;
        return it->second;
    }

    void store(Table& t, int j, const BigInt& key, const BigInt& value, char kind) {
        std::unique_lock lock(mutex_);
        grow(t, j);
        auto [it, inserted] = t[static_cast<size_t>(j)].emplace(key, value);
        if (inserted && cache_file_)
            pending_.push_back(std::string(kind == 'P' ? "pair " : "tail ") + std::to_string(j) + " " +
                               to_decimal(key) + " " + to_decimal(value));
    }

    const Construction& c_;
    mutable std::shared_mutex mutex_;
    Table pairs_;
    Table tails_;
    std::optional<std::filesystem::path> cache_file_;
    std::vector<std::string> pending_;
    bool header_written_ = false;
};

}  // namespace staircase

#endif
