#include "numcolor/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace numcolor::parallel {

namespace {
std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::openmp
#else
    Backend::serial
#endif
};
}  // namespace

Backend default_backend() noexcept { return g_backend.load(); }
void set_default_backend(Backend b) noexcept { g_backend.store(b); }

bool openmp_available() noexcept {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_max_threads(int n) noexcept {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

int configure_from_env() {
    if (const char* env = std::getenv("NUMCOLOR_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) set_max_threads(n);
        } catch (const std::exception&) {
            // unparsable values leave the OpenMP default in place
        }
    }
    return max_threads();
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn, Backend backend) {
    if (backend == Backend::serial || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < count; ++i) {
        try {
            fn(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace numcolor::parallel
