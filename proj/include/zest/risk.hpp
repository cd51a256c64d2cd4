#pragma once

#include <vector>

#include "zest/nig.hpp"

namespace zest {

struct TMarginal {
    double dof;
    double loc;
    double scale;
};

// Marginal Student-t of the latent mean under a NIG belief:
// dof = 2a, loc = gamma, scale = sqrt(b(kappa+1)/(a kappa)).
TMarginal marginal(const NigState& nig);

// High-precision reference quantile (inverse regularized incomplete beta +
// safeguarded Newton). Absolute error < 1e-10.
double t_quantile_exact(double dof, double c);

double normal_var(double loc, double scale, double c);
double normal_cvar(double loc, double scale, double c);

// Precomputed t-quantiles for a fixed set of tail levels, interpolated with
// natural cubic splines in u = 1/dof. Knots uniform in u cover
// dof in [dof_min, dof_max]; above dof_max callers take the Gaussian branch.
class QuantileTable {
  public:
    explicit QuantileTable(std::vector<double> levels = default_levels(), double dof_min = 2.5,
                           double dof_max = 40.0, int knot_count = 76);

    double lookup(double dof, double c) const;
    bool has_level(double c) const;

    const std::vector<double>& levels() const { return levels_; }
    double dof_min() const { return dof_min_; }
    double dof_max() const { return dof_max_; }
    int knot_count() const { return static_cast<int>(u_.size()); }

    static std::vector<double> default_levels() { return {0.01, 0.05, 0.1, 0.2, 0.5}; }

  private:
    struct Spline {
        std::vector<double> y;
        std::vector<double> y2;
    };

    int level_index(double c) const;
    double eval(int level, double u) const;

    std::vector<double> levels_;
    std::vector<double> u_;
    std::vector<Spline> splines_;
    double dof_min_;
    double dof_max_;
};

double t_quantile_fast(const QuantileTable& table, double dof, double c);

// Risk front end: dispatches between spline table, exact evaluator, and the
// Gaussian branch (moment-matched scale) above the dof threshold.
class RiskEvaluator {
  public:
    explicit RiskEvaluator(std::vector<double> levels = QuantileTable::default_levels(),
                           double dof_min = 2.5, double gaussian_dof = 40.0);

    double quantile(double dof, double c) const;
    double var(const TMarginal& m, double c) const;
    double cvar(const TMarginal& m, double c) const;
    double cvar_for_cell(const NigState& nig, double c) const;

    const QuantileTable& table() const { return table_; }
    double gaussian_dof() const { return gaussian_dof_; }

  private:
    QuantileTable table_;
    double gaussian_dof_;
};

}  // namespace zest
