#ifndef STAIRCASE_PARALLEL_HPP
#define STAIRCASE_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace staircase {

/// Applies fn to every item on up to `threads` workers. Results come back in
/// input order, so merged output does not depend on scheduling.
template <class In, class Fn>
auto parallel_map(const std::vector<In>& items, Fn fn, unsigned threads)
    -> std::vector<std::invoke_result_t<Fn&, const In&>> {
    using Out = std::invoke_result_t<Fn&, const In&>;
    std::vector<std::optional<Out>> slots(items.size());
    std::vector<std::exception_ptr> errors(items.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (size_t i = next++; i < items.size(); i = next++) {
            try {
                slots[i].emplace(fn(items[i]));
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(items.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    std::vector<Out> out;
    out.reserve(items.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace staircase

#endif
