// AVX2 variants of the batch kernels. Every vector expression mirrors the
// scalar reference in kernels/reference.hpp and kernels/fastmath.hpp
// operation for operation (no FMA), so lanes round exactly like the scalar path.

#include <immintrin.h>

#include "nlar/kernels/kernels.hpp"
#include "nlar/kernels/reference.hpp"

namespace nlar::kernels {

namespace {

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

inline __m256d v_exp(__m256d x) {
    using namespace fastmath::exp_coef;
    const __m256d in_range = _mm256_and_pd(_mm256_cmp_pd(x, set1(Lo), _CMP_GE_OQ), _mm256_cmp_pd(x, set1(Hi), _CMP_LE_OQ));
    const int ok = _mm256_movemask_pd(in_range);
    const __m256d xs = _mm256_blendv_pd(set1(0.0), x, in_range);

    const __m256d n = _mm256_floor_pd(_mm256_add_pd(_mm256_mul_pd(xs, set1(Log2e)), set1(0.5)));
    __m256d r = _mm256_sub_pd(xs, _mm256_mul_pd(n, set1(C1)));
    r = _mm256_sub_pd(r, _mm256_mul_pd(n, set1(C2)));
    const __m256d rr = _mm256_mul_pd(r, r);
    __m256d px = _mm256_add_pd(_mm256_mul_pd(set1(P0), rr), set1(P1));
    px = _mm256_add_pd(_mm256_mul_pd(px, rr), set1(P2));
    px = _mm256_mul_pd(r, px);
    __m256d qx = _mm256_add_pd(_mm256_mul_pd(set1(Q0), rr), set1(Q1));
    qx = _mm256_add_pd(_mm256_mul_pd(qx, rr), set1(Q2));
    qx = _mm256_add_pd(_mm256_mul_pd(qx, rr), set1(Q3));
    __m256d y = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    y = _mm256_add_pd(set1(1.0), _mm256_add_pd(y, y));

    // 2^n from the biased exponent n + 1023, an integer in [2, 2046].
    const __m256d biased = _mm256_add_pd(_mm256_add_pd(n, set1(1023.0)), set1(4503599627370496.0));
    const __m256i pow_bits = _mm256_slli_epi64(_mm256_castpd_si256(biased), 52);
    __m256d result = _mm256_mul_pd(y, _mm256_castsi256_pd(pow_bits));

    if (ok != 0xF) {
        alignas(32) double xv[4];
        alignas(32) double rv[4];
        _mm256_store_pd(xv, x);
        _mm256_store_pd(rv, result);
        for (int l = 0; l < 4; ++l)
            if (!(ok & (1 << l))) rv[l] = fastmath::exp(xv[l]);
        result = _mm256_load_pd(rv);
    }
    return result;
}

inline __m256d v_log(__m256d x) {
    using namespace fastmath::log_coef;
    const __m256d in_range =
        _mm256_and_pd(_mm256_cmp_pd(x, set1(DBL_MIN), _CMP_GE_OQ), _mm256_cmp_pd(x, set1(DBL_MAX), _CMP_LE_OQ));
    const int ok = _mm256_movemask_pd(in_range);
    const __m256d xs = _mm256_blendv_pd(set1(1.0), x, in_range);

    const __m256i bits = _mm256_castpd_si256(xs);
    const __m256i expo = _mm256_srli_epi64(bits, 52);
    const __m256d two52 = set1(4503599627370496.0);
    const __m256d expo_d =
        _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(expo, _mm256_castpd_si256(two52))), two52);
    __m256d e = _mm256_sub_pd(expo_d, set1(1022.0));
    const __m256i mant = _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000fffffffffffffLL)),
                                         _mm256_set1_epi64x(0x3fe0000000000000LL));
    const __m256d m = _mm256_castsi256_pd(mant);

    const __m256d small = _mm256_cmp_pd(m, set1(Sqrth), _CMP_LT_OQ);
    e = _mm256_blendv_pd(e, _mm256_sub_pd(e, set1(1.0)), small);
    const __m256d t =
        _mm256_blendv_pd(_mm256_sub_pd(m, set1(1.0)), _mm256_sub_pd(_mm256_add_pd(m, m), set1(1.0)), small);

    const __m256d z = _mm256_mul_pd(t, t);
    __m256d num = _mm256_add_pd(_mm256_mul_pd(set1(P0), t), set1(P1));
    num = _mm256_add_pd(_mm256_mul_pd(num, t), set1(P2));
    num = _mm256_add_pd(_mm256_mul_pd(num, t), set1(P3));
    num = _mm256_add_pd(_mm256_mul_pd(num, t), set1(P4));
    num = _mm256_add_pd(_mm256_mul_pd(num, t), set1(P5));
    __m256d den = _mm256_add_pd(t, set1(Q0));
    den = _mm256_add_pd(_mm256_mul_pd(den, t), set1(Q1));
    den = _mm256_add_pd(_mm256_mul_pd(den, t), set1(Q2));
    den = _mm256_add_pd(_mm256_mul_pd(den, t), set1(Q3));
    den = _mm256_add_pd(_mm256_mul_pd(den, t), set1(Q4));
    __m256d y = _mm256_mul_pd(t, _mm256_div_pd(_mm256_mul_pd(z, num), den));
    y = _mm256_add_pd(y, _mm256_mul_pd(e, set1(Ln2Lo)));
    y = _mm256_sub_pd(y, _mm256_mul_pd(set1(0.5), z));
    __m256d r = _mm256_add_pd(t, y);
    r = _mm256_add_pd(r, _mm256_mul_pd(e, set1(Ln2Hi)));

    if (ok != 0xF) {
        alignas(32) double xv[4];
        alignas(32) double rv[4];
        _mm256_store_pd(xv, x);
        _mm256_store_pd(rv, r);
        for (int l = 0; l < 4; ++l)
            if (!(ok & (1 << l))) rv[l] = fastmath::log(xv[l]);
        r = _mm256_load_pd(rv);
    }
    return r;
}

inline __m256d v_abs(__m256d x) { return _mm256_andnot_pd(set1(-0.0), x); }
inline __m256d v_neg(__m256d x) { return _mm256_xor_pd(set1(-0.0), x); }

inline __m256d mean_vec(const MeanFunction& f, const double* theta, const __m256d* x) {
    switch (f.family) {
    case MeanFamily::ThresholdLinear: {
        __m256d first = set1(0.0);
        for (int j = 0; j < f.first_regime_lags; ++j) first = _mm256_add_pd(first, _mm256_mul_pd(set1(theta[j]), x[j]));
        const double* second_theta = theta + f.first_regime_lags;
        __m256d second = set1(0.0);
        for (int j = 0; j < f.second_regime_lags; ++j)
            second = _mm256_add_pd(second, _mm256_mul_pd(set1(second_theta[j]), x[j]));
        const __m256d first_regime = _mm256_cmp_pd(x[0], set1(0.0), _CMP_LE_OQ);
        return _mm256_blendv_pd(second, first, first_regime);
    }
    case MeanFamily::LogAbs:
        return _mm256_add_pd(set1(theta[0]), v_log(_mm256_add_pd(set1(theta[1]), v_abs(x[0]))));
    case MeanFamily::LogSquare:
        return _mm256_mul_pd(set1(theta[0]), v_log(_mm256_mul_pd(x[0], x[0])));
    case MeanFamily::LogExpSum: {
        const int offset = f.intercept ? 1 : 0;
        const __m256d beta = set1(theta[offset + f.order]);
        __m256d s = set1(f.intercept ? theta[0] : 0.0);
        for (int j = 0; j < f.order; ++j)
            s = _mm256_add_pd(s, _mm256_mul_pd(set1(theta[offset + j]), v_exp(_mm256_mul_pd(beta, x[j]))));
        return v_log(s);
    }
    case MeanFamily::Linear: {
        const int offset = f.intercept ? 1 : 0;
        __m256d s = set1(f.intercept ? theta[0] : 0.0);
        for (int j = 0; j < f.order; ++j) s = _mm256_add_pd(s, _mm256_mul_pd(set1(theta[offset + j]), x[j]));
        return s;
    }
    case MeanFamily::Polynomial: {
        __m256d r = set1(theta[f.degree]);
        for (int k = f.degree - 1; k >= 0; --k) r = _mm256_add_pd(_mm256_mul_pd(r, x[0]), set1(theta[k]));
        return r;
    }
    }
    return set1(0.0);
}

inline __m256d scale_vec(const VarianceFunction& v, const double* theta, const __m256d* x) {
    switch (v.family) {
    case VarianceFamily::Constant:
        return set1(theta[0]);
    case VarianceFamily::ExpDecay:
        return _mm256_mul_pd(set1(theta[0]), v_exp(v_neg(_mm256_mul_pd(x[0], x[0]))));
    }
    return set1(1.0);
}

inline void load_lags(const LagColumns& lags, std::size_t i, __m256d* x) {
    for (int j = 0; j < lags.order; ++j) x[j] = _mm256_loadu_pd(lags.cols[j] + i);
}

inline void gather(const LagColumns& lags, std::size_t i, double* row) {
    for (int j = 0; j < lags.order; ++j) row[j] = lags.cols[j][i];
}

void mean_batch_avx2(const MeanFunction& f, const double* theta, const LagColumns& lags, double* out) {
    __m256d x[kMaxOrder];
    std::size_t i = 0;
    for (; i + 4 <= lags.size; i += 4) {
        load_lags(lags, i, x);
        _mm256_storeu_pd(out + i, mean_vec(f, theta, x));
    }
    double row[kMaxOrder];
    for (; i < lags.size; ++i) {
        gather(lags, i, row);
        out[i] = reference::mean_point(f, theta, row);
    }
}

void scale_batch_avx2(const VarianceFunction& v, const double* theta, const LagColumns& lags, double* out) {
    __m256d x[kMaxOrder];
    std::size_t i = 0;
    for (; i + 4 <= lags.size; i += 4) {
        load_lags(lags, i, x);
        _mm256_storeu_pd(out + i, scale_vec(v, theta, x));
    }
    double row[kMaxOrder];
    for (; i < lags.size; ++i) {
        gather(lags, i, row);
        out[i] = reference::scale_point(v, theta, row);
    }
}

double sse_avx2(const MeanFunction& f, const double* theta, const LagColumns& lags, const double* target) {
    __m256d x[kMaxOrder];
    __m256d acc = set1(0.0);
    std::size_t i = 0;
    for (; i + 4 <= lags.size; i += 4) {
        load_lags(lags, i, x);
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(target + i), mean_vec(f, theta, x));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    double row[kMaxOrder];
    for (; i < lags.size; ++i) {
        gather(lags, i, row);
        const double d = target[i] - reference::mean_point(f, theta, row);
        lane[i % 4] = lane[i % 4] + d * d;
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double scaled_avx2(const VarianceFunction& v, const double* theta, const LagColumns& lags, const double* resid) {
    __m256d x[kMaxOrder];
    __m256d acc = set1(0.0);
    std::size_t i = 0;
    for (; i + 4 <= lags.size; i += 4) {
        load_lags(lags, i, x);
        const __m256d q = _mm256_div_pd(_mm256_loadu_pd(resid + i), scale_vec(v, theta, x));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(q, q));
    }
    alignas(32) double lane[4];
    _mm256_store_pd(lane, acc);
    double row[kMaxOrder];
    for (; i < lags.size; ++i) {
        gather(lags, i, row);
        const double q = resid[i] / reference::scale_point(v, theta, row);
        lane[i % 4] = lane[i % 4] + q * q;
    }
    return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

void exp_avx2(const double* in, std::size_t n, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, v_exp(_mm256_loadu_pd(in + i)));
    for (; i < n; ++i) out[i] = fastmath::exp(in[i]);
}

void log_avx2(const double* in, std::size_t n, double* out) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, v_log(_mm256_loadu_pd(in + i)));
    for (; i < n; ++i) out[i] = fastmath::log(in[i]);
}

}  // namespace

namespace detail {
const KernelTable& avx2_table() {
    static const KernelTable t{mean_batch_avx2, scale_batch_avx2, sse_avx2, scaled_avx2, exp_avx2, log_avx2};
    return t;
}
}  // namespace detail

}  // namespace nlar::kernels
