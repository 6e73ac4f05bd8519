#ifndef STAIRCASE_TEST_SUPPORT_HPP
#define STAIRCASE_TEST_SUPPORT_HPP

#include "staircase/numeric.hpp"

#include <cstdint>
#include <random>

namespace staircase::testing {

// small seeded generator for property tests
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}
    std::int64_t range(std::int64_t lo, std::int64_t hi) {  // inclusive
        return lo + static_cast<std::int64_t>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    Rational rational(std::int64_t max_num, std::int64_t max_den) {
        return ratio(range(-max_num, max_num), range(1, max_den));
    }

private:
    std::mt19937_64 rng_;
};

inline Rational frac(long p, long q) { return ratio(p, q); }

}  // namespace staircase::testing

#endif
