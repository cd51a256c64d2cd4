#pragma once

#include <cstdint>
#include <vector>

namespace zest {

struct NigPrior {
    double gamma0 = 0.5;
    double kappa0 = 1.0;
    double a0 = 1.0;
    double b0 = 1.0;
    double alpha0 = 1.0;
    double beta0 = 1.0;
};

// Normal-Inverse-Gamma belief over a cell's traversability. Carries the prior
// plus running sufficient statistics so incremental and batch updates agree to
// the last bit; the posterior hyperparameters are derived on demand.
class NigState {
  public:
    NigState() = default;
    explicit NigState(const NigPrior& prior);
    static NigState restore(const NigPrior& prior, std::uint64_t n, double mean, double m2);

    double gamma() const;
    double kappa() const { return kappa0_ + static_cast<double>(n_); }
    double a() const { return a0_ + 0.5 * static_cast<double>(n_); }
    double b() const;
    std::uint64_t n() const { return n_; }

    double sample_mean() const { return mean_; }
    double sample_m2() const { return m2_; }
    double gamma0() const { return gamma0_; }
    double kappa0() const { return kappa0_; }
    double a0() const { return a0_; }
    double b0() const { return b0_; }

    void fold(double x);

  private:
    double gamma0_ = 0.5;
    double kappa0_ = 1.0;
    double a0_ = 1.0;
    double b0_ = 1.0;
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

NigState nig_update_one(const NigState& prior, double x);
NigState nig_update_batch(const NigState& prior, const std::vector<double>& samples);

struct CellState {
    NigState nig;
    double alpha = 1.0;
    double beta = 1.0;

    double occupancy_mean() const { return alpha / (alpha + beta); }
};

CellState beta_update(const CellState& cell, bool hit);

}  // namespace zest
