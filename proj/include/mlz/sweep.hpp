#pragma once

#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mlz {

inline int default_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// Serial sweep: reference path, also the comparison baseline in benchmarks.
template <typename R, typename F>
std::vector<R> sweep_map_serial(int count, F&& f) {
    std::vector<R> out(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) out[i] = f(i);
    return out;
}

/// OpenMP sweep over independent points. Results land at their input index,
/// so the output is identical to the serial path regardless of scheduling.
/// Exceptions are captured per point and rethrown after the region.
template <typename R, typename F>
std::vector<R> sweep_map(int count, F&& f, int threads = 0) {
    std::vector<R> out(static_cast<size_t>(count));
    std::vector<std::exception_ptr> errs(static_cast<size_t>(count));
    const int nt = threads > 0 ? threads : default_threads();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
#endif
    for (int i = 0; i < count; ++i) {
        try {
            out[i] = f(i);
        } catch (...) {
            errs[i] = std::current_exception();
        }
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return out;
}

} // namespace mlz
