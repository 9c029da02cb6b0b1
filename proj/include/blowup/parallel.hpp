#ifndef BLOWUP_PARALLEL_HPP
#define BLOWUP_PARALLEL_HPP

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace blowup {

// Deterministic parallel loop: f(i) must write only into slot i of its output.
// jobs <= 0 uses the hardware concurrency.
template <class F>
void parallel_for(int count, int jobs, F&& f) {
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min(jobs, count));
    if (jobs <= 1) {
        for (int i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
        pool.emplace_back([&]() {
            int i;
            while ((i = next.fetch_add(1)) < count && !failed.load()) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace blowup

#endif
