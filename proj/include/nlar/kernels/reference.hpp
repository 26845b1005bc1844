#pragma once

// Scalar reference evaluation of the mean and volatility families at a single
// lag vector. `lags[j]` is X_{t-1-j} (most recent first). The batch kernels of
// every backend must agree with these bit for bit.

#include "nlar/kernels/fastmath.hpp"
#include "nlar/model.hpp"

namespace nlar::kernels::reference {

inline double mean_point(const MeanFunction& f, const double* theta, const double* lags) {
    switch (f.family) {
    case MeanFamily::ThresholdLinear: {
        double first = 0.0;
        for (int j = 0; j < f.first_regime_lags; ++j) first = first + theta[j] * lags[j];
        const double* second_theta = theta + f.first_regime_lags;
        double second = 0.0;
        for (int j = 0; j < f.second_regime_lags; ++j) second = second + second_theta[j] * lags[j];
        return lags[0] <= 0.0 ? first : second;
    }
    case MeanFamily::LogAbs:
        return theta[0] + fastmath::log(theta[1] + std::fabs(lags[0]));
    case MeanFamily::LogSquare:
        return theta[0] * fastmath::log(lags[0] * lags[0]);
    case MeanFamily::LogExpSum: {
        const int offset = f.intercept ? 1 : 0;
        const double beta = theta[offset + f.order];
        double s = f.intercept ? theta[0] : 0.0;
        for (int j = 0; j < f.order; ++j) s = s + theta[offset + j] * fastmath::exp(beta * lags[j]);
        return fastmath::log(s);
    }
    case MeanFamily::Linear: {
        const int offset = f.intercept ? 1 : 0;
        double s = f.intercept ? theta[0] : 0.0;
        for (int j = 0; j < f.order; ++j) s = s + theta[offset + j] * lags[j];
        return s;
    }
    case MeanFamily::Polynomial: {
        double r = theta[f.degree];
        for (int k = f.degree - 1; k >= 0; --k) r = r * lags[0] + theta[k];
        return r;
    }
    }
    return 0.0;
}

inline double scale_point(const VarianceFunction& v, const double* theta, const double* lags) {
    switch (v.family) {
    case VarianceFamily::Constant:
        return theta[0];
    case VarianceFamily::ExpDecay:
        return theta[0] * fastmath::exp(-(lags[0] * lags[0]));
    }
    return 1.0;
}

}  // namespace nlar::kernels::reference
