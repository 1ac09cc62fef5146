#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace numcolor::parallel {

/// How a data-parallel kernel runs. `serial` is the reference path kept for
/// testing; `openmp` splits the index range across OpenMP threads. Both
/// produce bit-identical results because every index writes its own output
/// and reductions happen afterwards in index order.
enum class Backend { serial, openmp };

[[nodiscard]] Backend default_backend() noexcept;
void set_default_backend(Backend b) noexcept;

[[nodiscard]] bool openmp_available() noexcept;
[[nodiscard]] int max_threads() noexcept;
void set_max_threads(int n) noexcept;

/// Applies NUMCOLOR_THREADS (a positive integer) as the worker cap when set.
/// Returns the resulting thread count.
int configure_from_env();

/// Runs `fn(i)` for i in [0, n). The first exception thrown by any index is
/// rethrown on the calling thread after the loop finishes.
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn,
                    Backend backend = default_backend());

}  // namespace numcolor::parallel
