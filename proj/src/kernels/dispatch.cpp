#include <atomic>
#include <cstdlib>
#include <string>

#include "nlar/errors.hpp"
#include "nlar/kernels/kernels.hpp"

namespace nlar::kernels {

std::string_view to_string(Backend backend) {
    switch (backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    }
    return "unknown";
}

bool backend_available(Backend backend) {
    switch (backend) {
    case Backend::Scalar: return true;
    case Backend::Avx2:
#if defined(NLAR_HAVE_AVX2_KERNELS)
        return __builtin_cpu_supports("avx2");
#else
        return false;
#endif
    }
    return false;
}

const KernelTable& table(Backend backend) {
    if (!backend_available(backend))
        throw DomainError("kernel backend '" + std::string(to_string(backend)) + "' is not available");
#if defined(NLAR_HAVE_AVX2_KERNELS)
    if (backend == Backend::Avx2) return detail::avx2_table();
#endif
    return detail::scalar_table();
}

namespace {

Backend initial_backend() {
    if (const char* env = std::getenv("NLAR_KERNEL")) {
        const std::string v(env);
        if (v == "scalar") return Backend::Scalar;
        if (v == "avx2" && backend_available(Backend::Avx2)) return Backend::Avx2;
    }
    return backend_available(Backend::Avx2) ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<const KernelTable*>& active_table() {
    static std::atomic<const KernelTable*> t{&table(initial_backend())};
    return t;
}

std::atomic<Backend>& active_id() {
    static std::atomic<Backend> id{initial_backend()};
    return id;
}

}  // namespace

Backend active_backend() { return active_id().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
    const KernelTable* t = &table(backend);
    active_table().store(t);
    active_id().store(backend);
}

LagColumns series_lags(const TimeSeries& series) {
    LagColumns lags;
    lags.order = series.order();
    lags.size = series.T();
    for (int j = 1; j <= series.order(); ++j) lags.cols[j - 1] = series.lag(j).data();
    return lags;
}

void mean_batch(const MeanFunction& f, std::span<const double> theta, const LagColumns& lags, std::span<double> out) {
    active_table().load(std::memory_order_relaxed)->mean_batch(f, theta.data(), lags, out.data());
}

void scale_batch(const VarianceFunction& v, std::span<const double> theta, const LagColumns& lags,
                 std::span<double> out) {
    active_table().load(std::memory_order_relaxed)->scale_batch(v, theta.data(), lags, out.data());
}

double sum_squared_error(const MeanFunction& f, std::span<const double> theta, const LagColumns& lags,
                         const double* target) {
    return active_table().load(std::memory_order_relaxed)->sum_squared_error(f, theta.data(), lags, target);
}

double sum_squared_scaled(const VarianceFunction& v, std::span<const double> theta, const LagColumns& lags,
                          const double* resid) {
    return active_table().load(std::memory_order_relaxed)->sum_squared_scaled(v, theta.data(), lags, resid);
}

}  // namespace nlar::kernels
