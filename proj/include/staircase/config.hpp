#ifndef STAIRCASE_CONFIG_HPP
#define STAIRCASE_CONFIG_HPP

#include "staircase/construction.hpp"
#include "staircase/numeric.hpp"

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace staircase {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kCacheDirEnv = "STAIRCASE_CACHE_DIR";

/// Everything a run needs. Config files and command-line flags use the same
/// key names (see config_keys()).
struct RunConfig {
    StaircaseParams params;
    Rational eps_rel{1, 1'000'000'000};  // enclosure width target relative to c(0)
    int budget = kDefaultStageBudget;
    int precision = 256;
    std::filesystem::path out = "staircase-out";
    std::filesystem::path cache_dir = ".staircase-cache";
    bool cache = true;
    bool normalize = false;
    std::uint64_t seed = 20240607;
    unsigned threads = 1;
    size_t cap = kDefaultLevelCap;

    // experiment grids
    int stages = 12;
    int j_max = 0;  // 0: scan until the plateau closes
    bool r_auto = false;
    std::vector<long> r_list{1, 2, 3};
    std::vector<int> N_list{4, 8, 16, 32, 64};
    std::vector<BigInt> n_list{0, 1, 2, 3};
    std::optional<std::filesystem::path> queries;
    std::vector<int> p_list{0, 1, 2};
    BigInt h_max = pow10(300);
    std::string mode = "both";
    int moments = 256;
    int grid = 1024;
    long n_max = 200;
    int samples = 200;
    int oracle_stages = 12;
    bool exact = false;

    void validate() const {
        params.validate();
        if (eps_rel <= 0) throw ConfigError("eps must be positive");
        if (budget < 1) throw ConfigError("budget must be >= 1");
        if (precision < 64) throw ConfigError("precision must be >= 64 bits");
        if (!r_auto && r_list.empty()) throw ConfigError("r grid is empty");
        if (N_list.empty()) throw ConfigError("N grid is empty");
        if (n_list.empty() && !queries) throw ConfigError("n grid is empty");
        if (p_list.empty()) throw ConfigError("p grid is empty");
        if (mode != "printed" && mode != "corrected" && mode != "both")
            throw ConfigError("mode must be printed, corrected or both");
        if (moments < 1 || grid < 1) throw ConfigError("moments and grid must be positive");
        if (samples < 1 || oracle_stages < 0) throw ConfigError("samples must be positive");
        for (int N : N_list)
            if (N < 0) throw ConfigError("N values must be >= 0");
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const char* ws = " \t\r\n";
    s.erase(0, s.find_first_not_of(ws));
    auto last = s.find_last_not_of(ws);
    s.erase(last == std::string::npos ? 0 : last + 1);
    return s;
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline bool parse_bool(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw ConfigError("expected true or false, got '" + s + "'");
}

inline long parse_long(const std::string& s) {
    BigInt v = parse_bigint(s);
    if (!v.fits_slong_p()) throw ConfigError("integer out of range: " + s);
    return v.get_si();
}

inline int parse_int(const std::string& s) {
    long v = parse_long(s);
    if (v < INT32_MIN || v > INT32_MAX) throw ConfigError("integer out of range: " + s);
    return static_cast<int>(v);
}

// integers given as "1e300" are accepted when exact
inline BigInt parse_big_or_sci(const std::string& s) {
    Rational q = parse_rational(s);
    if (q.get_den() != 1) throw ConfigError("expected an integer, got " + s);
    return q.get_num();
}

}  // namespace detail

struct ConfigKey {
    std::string name;
    std::string help;
    std::function<void(RunConfig&, const std::string&)> apply;
};

inline const std::vector<ConfigKey>& config_keys() {
    using namespace detail;
    static const std::vector<ConfigKey> keys = {
        {"d", "rank-law exponent, r_j = max(r_min, rounding(j^d))",
         [](RunConfig& c, const std::string& v) {
             try {
                 c.params.d = std::stod(v);
             } catch (const std::exception&) {
                 throw ConfigError("d: not a number: " + v);
             }
         }},
        {"rounding", "floor | round",
         [](RunConfig& c, const std::string& v) { c.params.rounding = parse_rounding(v); }},
        {"r_min", "lower clamp of the rank law", [](RunConfig& c, const std::string& v) { c.params.r_min = parse_int(v); }},
        {"base_stage", "stage whose level carries f",
         [](RunConfig& c, const std::string& v) { c.params.base_stage = parse_int(v); }},
        {"base_level", "level index of f inside the base tower",
         [](RunConfig& c, const std::string& v) { c.params.base_level = parse_bigint(v); }},
        {"ranks", "explicit rank sequence replacing the law, comma separated; 'none' restores the law",
         [](RunConfig& c, const std::string& v) {
             if (v == "none" || v.empty()) {
                 c.params.override_ranks.reset();
                 return;
             }
             std::vector<int> ranks;
             for (const auto& s : split_list(v)) ranks.push_back(parse_int(s));
             c.params.override_ranks = ranks;
         }},
        {"repeat_last", "repeat the last explicit rank forever",
         [](RunConfig& c, const std::string& v) { c.params.repeat_last = parse_bool(v); }},
        {"eps", "enclosure width target relative to c(0), e.g. 1/1000000000 or 1e-9",
         [](RunConfig& c, const std::string& v) { c.eps_rel = parse_rational(v); }},
        {"budget", "stages searched past the first stage with h_j > n",
         [](RunConfig& c, const std::string& v) { c.budget = parse_int(v); }},
        {"precision", "working precision in bits for Gram solves",
         [](RunConfig& c, const std::string& v) { c.precision = parse_int(v); }},
        {"out", "output directory", [](RunConfig& c, const std::string& v) { c.out = v; }},
        {"cache_dir", "correlation cache directory (env STAIRCASE_CACHE_DIR overrides config files)",
         [](RunConfig& c, const std::string& v) { c.cache_dir = v; }},
        {"cache", "use the persistent correlation cache", [](RunConfig& c, const std::string& v) { c.cache = parse_bool(v); }},
        {"normalize", "add columns divided by the mu(X) enclosure",
         [](RunConfig& c, const std::string& v) { c.normalize = parse_bool(v); }},
        {"seed", "seed for sampled shifts", [](RunConfig& c, const std::string& v) {
             BigInt s = parse_bigint(v);
             if (s < 0 || !s.fits_ulong_p()) throw ConfigError("seed out of range");
             c.seed = s.get_ui();
         }},
        {"threads", "worker threads for grid commands", [](RunConfig& c, const std::string& v) {
             int t = parse_int(v);
             if (t < 1) throw ConfigError("threads must be >= 1");
             c.threads = static_cast<unsigned>(t);
         }},
        {"cap", "maximum explicit level-set size", [](RunConfig& c, const std::string& v) {
             BigInt s = parse_big_or_sci(v);
             if (s < 1 || !s.fits_ulong_p()) throw ConfigError("cap out of range");
             c.cap = s.get_ui();
         }},
        {"stages", "stages dumped by build", [](RunConfig& c, const std::string& v) { c.stages = parse_int(v); }},
        {"j_max", "census scan limit (0 scans until the plateau closes)",
         [](RunConfig& c, const std::string& v) { c.j_max = parse_int(v); }},
        {"r", "r grid, comma separated, or 'auto' (every plateau with a stage below h_max)",
         [](RunConfig& c, const std::string& v) {
             if (v == "auto") {
                 c.r_auto = true;
                 return;
             }
             c.r_auto = false;
             c.r_list.clear();
             for (const auto& s : split_list(v)) c.r_list.push_back(parse_long(s));
         }},
        {"N", "cyclic-basis half-widths for distance", [](RunConfig& c, const std::string& v) {
             c.N_list.clear();
             for (const auto& s : split_list(v)) c.N_list.push_back(parse_int(s));
         }},
        {"n", "shifts for corr", [](RunConfig& c, const std::string& v) {
             c.n_list.clear();
             for (const auto& s : split_list(v)) c.n_list.push_back(parse_big_or_sci(s));
         }},
        {"queries", "batch file for corr, one decimal shift per line",
         [](RunConfig& c, const std::string& v) { c.queries = std::filesystem::path(v); }},
        {"p", "stage distances for cross", [](RunConfig& c, const std::string& v) {
             c.p_list.clear();
             for (const auto& s : split_list(v)) c.p_list.push_back(parse_int(s));
         }},
        {"h_max", "largest tower height used by lemma, e.g. 1e300",
         [](RunConfig& c, const std::string& v) { c.h_max = parse_big_or_sci(v); }},
        {"mode", "identity mode: printed | corrected | both", [](RunConfig& c, const std::string& v) { c.mode = v; }},
        {"moments", "number of moments for spectrum", [](RunConfig& c, const std::string& v) { c.moments = parse_int(v); }},
        {"grid", "circle grid size for spectrum", [](RunConfig& c, const std::string& v) { c.grid = parse_int(v); }},
        {"n_max", "largest shift for mix", [](RunConfig& c, const std::string& v) { c.n_max = parse_long(v); }},
        {"samples", "sampled shifts per stage for oracle-check",
         [](RunConfig& c, const std::string& v) { c.samples = parse_int(v); }},
        {"oracle_stages", "largest stage checked by oracle-check",
         [](RunConfig& c, const std::string& v) { c.oracle_stages = parse_int(v); }},
        {"exact", "add the exact rational solve to distance (N <= 16)",
         [](RunConfig& c, const std::string& v) { c.exact = parse_bool(v); }},
    };
    return keys;
}

inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const ConfigKey& k : config_keys()) {
        if (k.name == key) {
            try {
                k.apply(cfg, value);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                throw ConfigError(key + ": " + e.what());
            }
            return;
        }
    }
    throw ConfigError("unknown configuration key '" + key + "'");
}

/// Flat key=value text; '#' starts a comment line. Unknown keys are errors.
inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream is(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        bool known = false;
        for (const ConfigKey& k : config_keys()) known = known || k.name == key;
        if (!known) throw ConfigError("line " + std::to_string(lineno) + ": unknown configuration key '" + key + "'");
        out[key] = value;
    }
    return out;
}

inline std::map<std::string, std::string> read_config_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// defaults < config file < STAIRCASE_CACHE_DIR < flags.
inline RunConfig resolve_config(const std::map<std::string, std::string>& file_settings,
                                const std::map<std::string, std::string>& flag_settings) {
    RunConfig cfg;
    for (const auto& [k, v] : file_settings) apply_setting(cfg, k, v);
    if (const char* env = std::getenv(kCacheDirEnv); env && *env) cfg.cache_dir = env;
    for (const auto& [k, v] : flag_settings) apply_setting(cfg, k, v);
    cfg.validate();
    return cfg;
}

}  // namespace staircase

#endif
