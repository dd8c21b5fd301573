#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace dualact {

// Worker count: DUALACT_THREADS if set and positive, otherwise hardware concurrency.
inline int thread_limit()
{
    if (const char* env = std::getenv("DUALACT_THREADS")) {
        try {
            int v = std::stoi(env);
            if (v > 0)
                return v;
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, n). Each index must write only to its own outputs,
// so the result does not depend on the worker count.
template <class Body>
void parallel_for(long n, Body&& body, long min_parallel = 256)
{
    long workers = std::min<long>(thread_limit(), n);
    if (workers <= 1 || n < min_parallel) {
        for (long i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    long chunk = (n + workers - 1) / workers;
    for (long w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                long end = std::min(n, (w + 1) * chunk);
                for (long i = w * chunk; i < end; ++i)
                    body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

} // namespace dualact
