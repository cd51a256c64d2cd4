#include "zest/nig.hpp"

#include <cmath>

#include "zest/errors.hpp"

namespace zest {

NigState::NigState(const NigPrior& prior)
    : gamma0_(prior.gamma0), kappa0_(prior.kappa0), a0_(prior.a0), b0_(prior.b0) {
    if (!(kappa0_ > 0.0 && a0_ > 0.0 && b0_ > 0.0)) {
        throw ValidationError("NigState: prior kappa0, a0, b0 must be positive");
    }
}

NigState NigState::restore(const NigPrior& prior, std::uint64_t n, double mean, double m2) {
    NigState s(prior);
    s.n_ = n;
    s.mean_ = mean;
    s.m2_ = m2;
    return s;
}

double NigState::gamma() const {
    if (n_ == 0) return gamma0_;
    return (gamma0_ * kappa0_ + static_cast<double>(n_) * mean_) / kappa();
}

double NigState::b() const {
    if (n_ == 0) return b0_;
    const double nd = static_cast<double>(n_);
    const double d = mean_ - gamma0_;
    return b0_ + 0.5 * m2_ + kappa0_ * nd * d * d / (2.0 * (kappa0_ + nd));
}

void NigState::fold(double x) {
    if (!std::isfinite(x)) throw ValidationError("NigState: sample must be finite");
    n_ += 1;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
}

NigState nig_update_one(const NigState& prior, double x) {
    NigState out = prior;
    out.fold(x);
    return out;
}

NigState nig_update_batch(const NigState& prior, const std::vector<double>& samples) {
    NigState out = prior;
    for (double x : samples) out.fold(x);
    return out;
}

CellState beta_update(const CellState& cell, bool hit) {
    CellState out = cell;
    if (hit) {
        out.alpha += 1.0;
    } else {
        out.beta += 1.0;
    }
    return out;
}

}  // namespace zest
