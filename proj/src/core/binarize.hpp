#pragma once

#include "core/bitmatrix.hpp"
#include "core/dense.hpp"
#include "core/rng.hpp"

namespace bgn {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Deterministic sign binarization: +1 where h >= 0, -1 otherwise.
BitMatrix binarize_det(const DenseMatrix& h);

/// Stochastic binarization: +1 with probability sigmoid(h), one independent
/// draw per entry.
BitMatrix binarize_stoch(const DenseMatrix& h, RngStream& rng);

/// Sign with exact zero preserved as 0; used for attention coefficients.
TernaryMatrix binarize_ternary(const DenseMatrix& s);

/// Subtracts each row's mean so +1/-1 come out roughly balanced after
/// binarization.
DenseMatrix balance(const DenseMatrix& h);

/// Straight-through estimate of the binarization derivative: passes g_out
/// unchanged; with clip > 0 zeroes entries where |h| > clip (saturating STE).
DenseMatrix ste_backward(const DenseMatrix& g_out, const DenseMatrix& h,
                         double clip = 0.0);

/// Variance-reducing baseline for the score-function estimator: tracks
/// running estimates of E[(B(h)-sigmoid(h))^2 * L] and E[(B(h)-sigmoid(h))^2]
/// so c = num/den.
struct ReinforceState {
  double num_ema = 0.0;
  double den_ema = 0.0;
  double decay = 0.99;
  bool initialized = false;

  double baseline() const { return initialized ? num_ema / den_ema : 0.0; }
};

/// Score-function gradient estimate (B(h) - sigmoid(h)) * (loss - c), where
/// b must be the stochastic binarization drawn for this h. The estimate is
/// computed with the baseline from prior steps (c = 0 on the first call);
/// the state EMAs are then advanced with this step's statistics.
DenseMatrix reinforce_update_and_estimate(const DenseMatrix& h,
                                          const BitMatrix& b, double loss,
                                          ReinforceState& state);

}  // namespace bgn
