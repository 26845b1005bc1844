#include "nlar/kernels/kernels.hpp"
#include "nlar/kernels/reference.hpp"

namespace nlar::kernels {

namespace {

inline void gather(const LagColumns& lags, std::size_t i, double* row) {
    for (int j = 0; j < lags.order; ++j) row[j] = lags.cols[j][i];
}

void mean_batch_scalar(const MeanFunction& f, const double* theta, const LagColumns& lags, double* out) {
    double row[kMaxOrder];
    for (std::size_t i = 0; i < lags.size; ++i) {
        gather(lags, i, row);
        out[i] = reference::mean_point(f, theta, row);
    }
}

void scale_batch_scalar(const VarianceFunction& v, const double* theta, const LagColumns& lags, double* out) {
    double row[kMaxOrder];
    for (std::size_t i = 0; i < lags.size; ++i) {
        gather(lags, i, row);
        out[i] = reference::scale_point(v, theta, row);
    }
}

inline double combine(const double (&lane)[4]) { return (lane[0] + lane[1]) + (lane[2] + lane[3]); }

double sse_scalar(const MeanFunction& f, const double* theta, const LagColumns& lags, const double* target) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    double row[kMaxOrder];
    for (std::size_t i = 0; i < lags.size; ++i) {
        gather(lags, i, row);
        const double d = target[i] - reference::mean_point(f, theta, row);
        lane[i % 4] = lane[i % 4] + d * d;
    }
    return combine(lane);
}

double scaled_scalar(const VarianceFunction& v, const double* theta, const LagColumns& lags, const double* resid) {
    double lane[4] = {0.0, 0.0, 0.0, 0.0};
    double row[kMaxOrder];
    for (std::size_t i = 0; i < lags.size; ++i) {
        gather(lags, i, row);
        const double q = resid[i] / reference::scale_point(v, theta, row);
        lane[i % 4] = lane[i % 4] + q * q;
    }
    return combine(lane);
}

void exp_scalar(const double* in, std::size_t n, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fastmath::exp(in[i]);
}

void log_scalar(const double* in, std::size_t n, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fastmath::log(in[i]);
}

}  // namespace

namespace detail {
const KernelTable& scalar_table() {
    static const KernelTable t{mean_batch_scalar, scale_batch_scalar, sse_scalar, scaled_scalar, exp_scalar,
                               log_scalar};
    return t;
}
}  // namespace detail

}  // namespace nlar::kernels
