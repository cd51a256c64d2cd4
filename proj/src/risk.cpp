#include "zest/risk.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "zest/errors.hpp"
#include "zest/student_t.hpp"

namespace zest {

namespace {

void check_level(double c) {
    if (!(c > 0.0 && c < 1.0)) throw ValidationError("risk: level must be in (0, 1)");
}

// Expected-shortfall magnitude of the standard t: -E[X | X < q_c] with the
// closed-form lower partial moment; valid for any c in (0,1) when dof > 1.
double t_shortfall(double dof, double q, double c) {
    const double t = std::fabs(q);
    return (dof + t * t) / (dof - 1.0) * student_t_pdf(t, dof) / c;
}

double matched_sigma(const TMarginal& m) {
    return m.scale * std::sqrt(m.dof / (m.dof - 2.0));
}

}  // namespace

TMarginal marginal(const NigState& nig) {
    const double a = nig.a();
    const double b = nig.b();
    const double kappa = nig.kappa();
    if (!(a > 0.0 && b > 0.0 && kappa > 0.0)) {
        throw ValidationError("marginal: a, b, kappa must be positive");
    }
    return TMarginal{2.0 * a, nig.gamma(), std::sqrt(b * (kappa + 1.0) / (a * kappa))};
}

double t_quantile_exact(double dof, double c) {
    check_level(c);
    return student_t_quantile(dof, c);
}

double normal_var(double loc, double scale, double c) {
    check_level(c);
    return loc + scale * normal_quantile(c);
}

double normal_cvar(double loc, double scale, double c) {
    check_level(c);
    return loc - scale * normal_pdf(normal_quantile(c)) / c;
}

QuantileTable::QuantileTable(std::vector<double> levels, double dof_min, double dof_max,
                             int knot_count)
    : levels_(std::move(levels)), dof_min_(dof_min), dof_max_(dof_max) {
    if (levels_.empty()) throw ValidationError("QuantileTable: need at least one level");
    for (double c : levels_) check_level(c);
    if (!(dof_min_ > 1.0 && dof_max_ > dof_min_)) {
        throw ValidationError("QuantileTable: need 1 < dof_min < dof_max");
    }
    if (knot_count < 4) throw ValidationError("QuantileTable: need at least 4 knots");

    const int n = knot_count;
    const double u_lo = 1.0 / dof_max_;
    const double u_hi = 1.0 / dof_min_;
    u_.resize(n);
    for (int i = 0; i < n; ++i) {
        u_[i] = u_lo + (u_hi - u_lo) * static_cast<double>(i) / (n - 1);
    }

    splines_.resize(levels_.size());
    std::vector<double> scratch(n);
    for (std::size_t li = 0; li < levels_.size(); ++li) {
        Spline& sp = splines_[li];
        sp.y.resize(n);
        sp.y2.assign(n, 0.0);
        for (int i = 0; i < n; ++i) sp.y[i] = student_t_quantile(1.0 / u_[i], levels_[li]);

        // Natural spline: tridiagonal solve for second derivatives.
        for (int i = 1; i < n - 1; ++i) {
            const double sig = (u_[i] - u_[i - 1]) / (u_[i + 1] - u_[i - 1]);
            const double p = sig * sp.y2[i - 1] + 2.0;
            sp.y2[i] = (sig - 1.0) / p;
            scratch[i] = (sp.y[i + 1] - sp.y[i]) / (u_[i + 1] - u_[i]) -
                         (sp.y[i] - sp.y[i - 1]) / (u_[i] - u_[i - 1]);
            scratch[i] = (6.0 * scratch[i] / (u_[i + 1] - u_[i - 1]) - sig * scratch[i - 1]) / p;
        }
        sp.y2[n - 1] = 0.0;
        for (int i = n - 2; i >= 0; --i) sp.y2[i] = sp.y2[i] * sp.y2[i + 1] + scratch[i];
        sp.y2[0] = 0.0;

        for (int i = 0; i < n; ++i) {
            if (std::fabs(eval(static_cast<int>(li), u_[i]) - sp.y[i]) > 1e-9) {
                std::ostringstream msg;
                msg << "QuantileTable: knot check failed at dof " << 1.0 / u_[i] << " level "
                    << levels_[li];
                throw ValidationError(msg.str());
            }
        }
    }
}

int QuantileTable::level_index(double c) const {
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (std::fabs(levels_[i] - c) <= 1e-12) return static_cast<int>(i);
    }
    return -1;
}

bool QuantileTable::has_level(double c) const { return level_index(c) >= 0; }

double QuantileTable::eval(int level, double u) const {
    u = std::clamp(u, u_.front(), u_.back());
    const int n = static_cast<int>(u_.size());
    const double h = (u_.back() - u_.front()) / (n - 1);
    int i = static_cast<int>((u - u_.front()) / h);
    i = std::clamp(i, 0, n - 2);

    const double hu = u_[i + 1] - u_[i];
    const double A = (u_[i + 1] - u) / hu;
    const double B = (u - u_[i]) / hu;
    const Spline& sp = splines_[level];
    return A * sp.y[i] + B * sp.y[i + 1] +
           ((A * A * A - A) * sp.y2[i] + (B * B * B - B) * sp.y2[i + 1]) * hu * hu / 6.0;
}

double QuantileTable::lookup(double dof, double c) const {
    const int li = level_index(c);
    if (li < 0) throw ValidationError("QuantileTable: level not configured");
    if (dof < dof_min_ * (1.0 - 1e-12)) {
        throw ValidationError("QuantileTable: dof below table range");
    }
    if (dof > dof_max_ * (1.0 + 1e-12)) {
        throw ValidationError("QuantileTable: dof above table range");
    }
    return eval(li, 1.0 / dof);
}

double t_quantile_fast(const QuantileTable& table, double dof, double c) {
    return table.lookup(dof, c);
}

RiskEvaluator::RiskEvaluator(std::vector<double> levels, double dof_min, double gaussian_dof)
    : table_(std::move(levels), dof_min, gaussian_dof), gaussian_dof_(gaussian_dof) {}

double RiskEvaluator::quantile(double dof, double c) const {
    check_level(c);
    if (dof > gaussian_dof_) return normal_quantile(c);
    if (dof >= table_.dof_min() && table_.has_level(c)) return table_.lookup(dof, c);
    return student_t_quantile(dof, c);
}

double RiskEvaluator::var(const TMarginal& m, double c) const {
    if (m.dof > gaussian_dof_) return normal_var(m.loc, matched_sigma(m), c);
    return m.loc + m.scale * quantile(m.dof, c);
}

double RiskEvaluator::cvar(const TMarginal& m, double c) const {
    if (m.dof > gaussian_dof_) return normal_cvar(m.loc, matched_sigma(m), c);
    if (!(m.dof > 1.0)) throw ValidationError("cvar: dof must exceed 1");
    const double q = quantile(m.dof, c);
    return m.loc - m.scale * t_shortfall(m.dof, q, c);
}

double RiskEvaluator::cvar_for_cell(const NigState& nig, double c) const {
    return cvar(marginal(nig), c);
}

}  // namespace zest
