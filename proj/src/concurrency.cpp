#include "hopfstab/concurrency.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace hopfstab {

int thread_budget() {
    const char* env = std::getenv("HOPFSTAB_THREADS");
    if (!env) return 1;
    try {
        int v = std::stoi(env);
        int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        return std::clamp(v, 1, hw);
    } catch (...) {
        return 1;
    }
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(thread_budget(), count);
    std::vector<std::exception_ptr> errors(count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t)
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace hopfstab
