#include <cmath>
#include <numbers>

#include <doctest.h>

#include "zest/errors.hpp"
#include "zest/student_t.hpp"

using namespace zest;

namespace {
bool near(double x, double expected, double tol) { return std::fabs(x - expected) <= tol; }
}  // namespace

TEST_CASE("normal pdf and cdf basics") {
    CHECK(near(normal_pdf(0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15));
    CHECK(near(normal_cdf(0.0), 0.5, 1e-15));
    CHECK(near(normal_cdf(1.0) + normal_cdf(-1.0), 1.0, 1e-14));
    CHECK(normal_cdf(-8.0) > 0.0);
    CHECK(normal_cdf(-8.0) < 1e-14);
}

TEST_CASE("normal quantile inverts the cdf") {
    // Reference value from an independent high-precision evaluation.
    CHECK(near(normal_quantile(0.05), -1.644853626951, 1e-9));
    CHECK(near(normal_quantile(0.5), 0.0, 1e-12));
    for (double p : {1e-6, 1e-3, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999, 1.0 - 1e-6}) {
        CHECK(near(normal_cdf(normal_quantile(p)), p, 1e-12));
    }
    CHECK_THROWS_AS(normal_quantile(0.0), ValidationError);
    CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
}

TEST_CASE("incomplete beta against closed forms") {
    CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
    CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
    // I_x(1, b) = 1 - (1-x)^b
    for (double x : {0.1, 0.4, 0.8}) {
        CHECK(near(incomplete_beta(1.0, 3.0, x), 1.0 - std::pow(1.0 - x, 3.0), 1e-13));
    }
    // I_x(1/2, 1/2) = (2/pi) asin(sqrt(x))
    for (double x : {0.05, 0.25, 0.5, 0.9}) {
        CHECK(near(incomplete_beta(0.5, 0.5, x),
                   2.0 / std::numbers::pi * std::asin(std::sqrt(x)), 1e-12));
    }
    // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
    for (double x : {0.2, 0.6}) {
        CHECK(near(incomplete_beta(3.5, 1.25, x), 1.0 - incomplete_beta(1.25, 3.5, 1.0 - x),
                   1e-13));
    }
    CHECK_THROWS_AS(incomplete_beta(-1.0, 2.0, 0.5), ValidationError);
}

TEST_CASE("student t pdf integrates against cdf differences") {
    // Trapezoid integral of the pdf over [-8, 8] approximates cdf(8)-cdf(-8).
    const double dof = 4.0;
    double acc = 0.0;
    const int steps = 4000;
    const double lo = -8.0, hi = 8.0;
    const double h = (hi - lo) / steps;
    for (int i = 0; i <= steps; ++i) {
        const double w = (i == 0 || i == steps) ? 0.5 : 1.0;
        acc += w * student_t_pdf(lo + i * h, dof);
    }
    acc *= h;
    CHECK(near(acc, student_t_cdf(hi, dof) - student_t_cdf(lo, dof), 1e-8));
}

TEST_CASE("student t cdf special values") {
    CHECK(student_t_cdf(0.0, 7.0) == 0.5);
    // dof=1 is Cauchy: F(t) = 1/2 + atan(t)/pi
    for (double t : {-3.0, -0.5, 0.7, 2.0}) {
        CHECK(near(student_t_cdf(t, 1.0), 0.5 + std::atan(t) / std::numbers::pi, 1e-13));
    }
    // dof=2 closed form: F(t) = 1/2 + t / (2 sqrt(2 + t^2))
    for (double t : {-2.5, -1.0, 0.3, 4.0}) {
        CHECK(near(student_t_cdf(t, 2.0), 0.5 + t / (2.0 * std::sqrt(2.0 + t * t)), 1e-13));
    }
}

TEST_CASE("student t quantile closed forms and frozen references") {
    CHECK(near(student_t_quantile(1.0, 0.25), -1.0, 1e-12));
    CHECK(student_t_quantile(3.7, 0.5) == 0.0);
    CHECK(near(student_t_quantile(2.0, 0.1), -1.8856180831641267, 1e-11));
    // Frozen references from a 40-digit independent evaluation:
    CHECK(near(student_t_quantile(5.0, 0.1), -1.4758840488244811, 1e-11));
    CHECK(near(student_t_quantile(3.0, 0.05), -2.3533634348018239, 1e-11));
    CHECK(near(student_t_quantile(7.5, 0.1), -1.4052118464159529, 1e-11));
    CHECK(near(student_t_quantile(2.5, 0.01), -5.3531111730308743, 1e-11));
    CHECK(near(student_t_quantile(40.0, 0.01), -2.4232567793348582, 1e-11));
}

TEST_CASE("student t quantile inverts the cdf across the range") {
    for (double dof : {1.0, 1.5, 2.0, 2.5, 3.0, 5.0, 12.0, 25.0, 40.0, 80.0}) {
        for (double p : {0.001, 0.01, 0.05, 0.1, 0.2, 0.5, 0.8, 0.95, 0.999}) {
            const double q = student_t_quantile(dof, p);
            CHECK(near(student_t_cdf(q, dof), p, 1e-11));
            // Symmetry
            CHECK(near(student_t_quantile(dof, 1.0 - p), -q, 1e-10));
        }
    }
    CHECK_THROWS_AS(student_t_quantile(0.0, 0.1), ValidationError);
    CHECK_THROWS_AS(student_t_quantile(3.0, 1.0), ValidationError);
}
