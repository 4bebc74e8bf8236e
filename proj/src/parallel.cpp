#include "fdot/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace fdot {

namespace {
int g_default_threads = 0;
}

int default_threads() {
    if (g_default_threads > 0) return g_default_threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

void set_default_threads(int n) { g_default_threads = n; }

void parallel_for(size_t n, const std::function<void(size_t)>& fn, int threads) {
    if (threads <= 0) threads = default_threads();
    if (threads == 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const size_t chunk = 64;
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            const size_t end = std::min(begin + chunk, n);
            for (size_t i = begin; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int nw = static_cast<int>(std::min<size_t>(threads, (n + chunk - 1) / chunk));
    pool.reserve(nw > 1 ? nw - 1 : 0);
    for (int t = 1; t < nw; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace fdot
