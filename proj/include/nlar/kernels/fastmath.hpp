#pragma once

// Portable exp/log shared by every kernel backend. The SIMD backends
// replicate these operation sequences lane-wise, so all backends round
// identically and results never depend on which backend ran.

#include <bit>
#include <cfloat>
#include <cmath>
#include <cstdint>

namespace nlar::fastmath {

namespace exp_coef {
inline constexpr double P0 = 1.26177193074810590878e-4;
inline constexpr double P1 = 3.02994407707441961300e-2;
inline constexpr double P2 = 9.99999999999999999910e-1;
inline constexpr double Q0 = 3.00198505138664455042e-6;
inline constexpr double Q1 = 2.52448340349684104192e-3;
inline constexpr double Q2 = 2.27265548208155028766e-1;
inline constexpr double Q3 = 2.00000000000000000009e0;
inline constexpr double C1 = 6.93145751953125e-1;
inline constexpr double C2 = 1.42860682030941723212e-6;
inline constexpr double Log2e = 1.4426950408889634073599;
inline constexpr double Lo = -708.0;
inline constexpr double Hi = 709.0;
}  // namespace exp_coef

namespace log_coef {
inline constexpr double P0 = 1.01875663804580931796e-4;
inline constexpr double P1 = 4.97494994976747001425e-1;
inline constexpr double P2 = 4.70579119878881725854e0;
inline constexpr double P3 = 1.44989225341610930846e1;
inline constexpr double P4 = 1.79368678507819816313e1;
inline constexpr double P5 = 7.70838733755885391666e0;
inline constexpr double Q0 = 1.12873587189167450590e1;
inline constexpr double Q1 = 4.52279145837532221105e1;
inline constexpr double Q2 = 8.29875266912776603211e1;
inline constexpr double Q3 = 7.11544750618563894466e1;
inline constexpr double Q4 = 2.31251620126765340583e1;
inline constexpr double Sqrth = 0.70710678118654752440;
inline constexpr double Ln2Hi = 0.693359375;
inline constexpr double Ln2Lo = -2.121944400546905827679e-4;
}  // namespace log_coef

/// exp(x); inputs outside [-708, 709] (and NaN) defer to std::exp.
inline double exp(double x) {
    using namespace exp_coef;
    if (!(x >= Lo && x <= Hi)) return std::exp(x);
    const double n = std::floor(x * Log2e + 0.5);
    double r = x - n * C1;
    r = r - n * C2;
    const double rr = r * r;
    const double px = r * ((P0 * rr + P1) * rr + P2);
    const double qx = ((Q0 * rr + Q1) * rr + Q2) * rr + Q3;
    double y = px / (qx - px);
    y = 1.0 + (y + y);
    const auto bits = static_cast<std::uint64_t>(static_cast<std::int64_t>(n) + 1023) << 52;
    return y * std::bit_cast<double>(bits);
}

/// Natural log; zero, negative, subnormal, infinite and NaN inputs defer to std::log.
inline double log(double x) {
    using namespace log_coef;
    if (!(x >= DBL_MIN && x <= DBL_MAX)) return std::log(x);
    const auto bits = std::bit_cast<std::uint64_t>(x);
    double e = static_cast<double>(static_cast<std::int64_t>(bits >> 52)) - 1022.0;
    const double m = std::bit_cast<double>((bits & 0x000fffffffffffffULL) | 0x3fe0000000000000ULL);
    double t;
    if (m < Sqrth) {
        e = e - 1.0;
        t = (m + m) - 1.0;
    } else {
        t = m - 1.0;
    }
    const double z = t * t;
    const double num = ((((P0 * t + P1) * t + P2) * t + P3) * t + P4) * t + P5;
    const double den = ((((t + Q0) * t + Q1) * t + Q2) * t + Q3) * t + Q4;
    double y = t * (z * num / den);
    y = y + e * Ln2Lo;
    y = y - 0.5 * z;
    double r = t + y;
    r = r + e * Ln2Hi;
    return r;
}

}  // namespace nlar::fastmath
