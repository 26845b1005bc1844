#pragma once

// Batch evaluation kernels for the hot loops: least-squares losses over a
// series and one-step propagation of simulated ensembles. Each backend
// implements the same KernelTable; the active one is picked at startup from
// CPU features (override with NLAR_KERNEL=scalar|avx2 or set_backend()).
//
// Reductions use four interleaved partial sums, element i feeding lane i % 4,
// combined as (l0 + l1) + (l2 + l3). Backends are required to be bitwise
// equivalent to the scalar reference.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

#include "nlar/model.hpp"

namespace nlar::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend backend);

/// Lag j (0-based) of row i lives at cols[j][i].
struct LagColumns {
    std::array<const double*, kMaxOrder> cols{};
    int order = 0;
    std::size_t size = 0;

    LagColumns slice(std::size_t begin, std::size_t count) const {
        LagColumns out = *this;
        for (int j = 0; j < order; ++j) out.cols[j] = cols[j] + begin;
        out.size = count;
        return out;
    }
};

/// Lag columns of the regression pairs (X_t; X_{t-1..t-p}), t = 1..T.
LagColumns series_lags(const TimeSeries& series);

struct KernelTable {
    void (*mean_batch)(const MeanFunction&, const double* theta, const LagColumns&, double* out);
    void (*scale_batch)(const VarianceFunction&, const double* theta, const LagColumns&, double* out);
    /// Σ (target_i − φ_i)².
    double (*sum_squared_error)(const MeanFunction&, const double* theta, const LagColumns&, const double* target);
    /// Σ (resid_i / σ_i)².
    double (*sum_squared_scaled)(const VarianceFunction&, const double* theta, const LagColumns&, const double* resid);
    void (*exp_batch)(const double* in, std::size_t n, double* out);
    void (*log_batch)(const double* in, std::size_t n, double* out);
};

bool backend_available(Backend backend);
/// Throws DomainError when the backend was not compiled in or the CPU lacks it.
const KernelTable& table(Backend backend);
Backend active_backend();
void set_backend(Backend backend);

void mean_batch(const MeanFunction& f, std::span<const double> theta, const LagColumns& lags, std::span<double> out);
void scale_batch(const VarianceFunction& v, std::span<const double> theta, const LagColumns& lags,
                 std::span<double> out);
double sum_squared_error(const MeanFunction& f, std::span<const double> theta, const LagColumns& lags,
                         const double* target);
double sum_squared_scaled(const VarianceFunction& v, std::span<const double> theta, const LagColumns& lags,
                          const double* resid);

namespace detail {
const KernelTable& scalar_table();
const KernelTable& avx2_table();
}  // namespace detail

}  // namespace nlar::kernels
