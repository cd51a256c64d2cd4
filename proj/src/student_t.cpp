#include "zest/student_t.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "zest/errors.hpp"

namespace zest {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

// Peter Acklam's rational approximation to the normal quantile.
double normal_quantile_approx(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
               (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

}  // namespace

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("normal_quantile: p must be in (0, 1)");
    double z = normal_quantile_approx(p);
    // One Halley refinement against the erfc-based CDF.
    const double e = normal_cdf(z) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * z * z);
    z -= u / (1.0 + 0.5 * z * u);
    return z;
}

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("incomplete_beta: a, b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_pdf(double t, double dof) {
    if (!(dof > 0.0)) throw ValidationError("student_t_pdf: dof must be positive");
    const double ln_coeff = std::lgamma(0.5 * (dof + 1.0)) - std::lgamma(0.5 * dof) -
                            0.5 * std::log(dof * std::numbers::pi);
    return std::exp(ln_coeff - 0.5 * (dof + 1.0) * std::log1p(t * t / dof));
}

double student_t_cdf(double t, double dof) {
    if (!(dof > 0.0)) throw ValidationError("student_t_cdf: dof must be positive");
    if (t == 0.0) return 0.5;
    const double x = dof / (dof + t * t);
    const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double dof, double p) {
    if (!(dof > 0.0)) throw ValidationError("student_t_quantile: dof must be positive");
    if (!(p > 0.0 && p < 1.0)) throw ValidationError("student_t_quantile: p must be in (0, 1)");
    if (p == 0.5) return 0.0;
    if (p > 0.5) return -student_t_quantile(dof, 1.0 - p);

    if (dof == 1.0) return std::tan(std::numbers::pi * (p - 0.5));
    if (dof == 2.0) return (2.0 * p - 1.0) * std::sqrt(2.0 / (4.0 * p * (1.0 - p)));

    // Initial guess from the normal quantile with a 1/dof tail correction.
    const double z = normal_quantile(p);
    double t = z + (z * z * z + z) / (4.0 * dof);
    if (dof > 2.0) {
        const double scaled = z * std::sqrt(dof / (dof - 2.0));
        if (std::fabs(scaled) > std::fabs(t)) t = 0.5 * (t + scaled);
    }

    // Bracket below the median, then safeguarded Newton.
    double lo = t, hi = t;
    double flo = student_t_cdf(lo, dof) - p;
    while (flo > 0.0) {
        lo = 2.0 * lo - 1.0;
        flo = student_t_cdf(lo, dof) - p;
    }
    double fhi = student_t_cdf(hi, dof) - p;
    while (fhi < 0.0) {
        hi = 0.5 * hi;
        if (hi > -1e-14) hi = 0.0;
        fhi = student_t_cdf(hi, dof) - p;
        if (hi == 0.0) break;
    }

    for (int it = 0; it < 100; ++it) {
        const double f = student_t_cdf(t, dof) - p;
        if (f > 0.0) {
            hi = t;
        } else if (f < 0.0) {
            lo = t;
        } else {
            break;
        }
        const double deriv = student_t_pdf(t, dof);
        double step = deriv > 0.0 ? f / deriv : 0.0;
        double next = t - step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double delta = std::fabs(next - t);
        t = next;
        if (delta < 1e-14 * (1.0 + std::fabs(t))) break;
    }
    return t;
}

}  // namespace zest
