#include "core/binarize.hpp"

#include <cmath>

namespace bgn {

BitMatrix binarize_det(const DenseMatrix& h) {
  h.ensure_finite("binarize_det");
  BitMatrix out(h.rows(), h.cols());
  for (std::size_t i = 0; i < h.rows(); ++i) {
    const double* r = h.row(i);
    std::uint64_t* w = out.row_words(i);
    for (std::size_t j = 0; j < h.cols(); ++j) {
      if (r[j] >= 0.0) w[j >> 6] |= std::uint64_t(1) << (j & 63);
    }
  }
  return out;
}

BitMatrix binarize_stoch(const DenseMatrix& h, RngStream& rng) {
  h.ensure_finite("binarize_stoch");
  BitMatrix out(h.rows(), h.cols());
  for (std::size_t i = 0; i < h.rows(); ++i) {
    const double* r = h.row(i);
    std::uint64_t* w = out.row_words(i);
    for (std::size_t j = 0; j < h.cols(); ++j) {
      if (rng.next_double() < sigmoid(r[j]))
        w[j >> 6] |= std::uint64_t(1) << (j & 63);
    }
  }
  return out;
}

TernaryMatrix binarize_ternary(const DenseMatrix& s) {
  s.ensure_finite("binarize_ternary");
  TernaryMatrix out(s.rows(), s.cols());
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const double* r = s.row(i);
    for (std::size_t j = 0; j < s.cols(); ++j) {
      if (r[j] > 0.0)
        out.plus_mask().set(i, j, true);
      else if (r[j] < 0.0)
        out.minus_mask().set(i, j, true);
    }
  }
  return out;
}

DenseMatrix balance(const DenseMatrix& h) {
  h.ensure_finite("balance");
  require(h.cols() >= 1, Errc::bad_param, "balance: need at least one column");
  DenseMatrix out(h.rows(), h.cols());
  for (std::size_t i = 0; i < h.rows(); ++i) {
    const double* r = h.row(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < h.cols(); ++j) mean += r[j];
    mean /= static_cast<double>(h.cols());
    double* o = out.row(i);
    for (std::size_t j = 0; j < h.cols(); ++j) o[j] = r[j] - mean;
  }
  return out;
}

DenseMatrix ste_backward(const DenseMatrix& g_out, const DenseMatrix& h,
                         double clip) {
  require(g_out.rows() == h.rows() && g_out.cols() == h.cols(),
          Errc::dim_mismatch, "ste_backward: shapes disagree");
  DenseMatrix out = g_out;
  if (clip > 0.0) {
    for (std::size_t i = 0; i < h.rows(); ++i) {
      const double* hr = h.row(i);
      double* o = out.row(i);
      for (std::size_t j = 0; j < h.cols(); ++j) {
        if (std::abs(hr[j]) > clip) o[j] = 0.0;
      }
    }
  }
  return out;
}

DenseMatrix reinforce_update_and_estimate(const DenseMatrix& h,
                                          const BitMatrix& b, double loss,
                                          ReinforceState& state) {
  require(h.rows() == b.rows() && h.cols() == b.cols(), Errc::dim_mismatch,
          "reinforce: shapes disagree");
  require(std::isfinite(loss), Errc::non_finite, "reinforce: loss non-finite");
  h.ensure_finite("reinforce");
  double c = state.baseline();
  DenseMatrix grad(h.rows(), h.cols());
  double s2_sum = 0.0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    const double* hr = h.row(i);
    double* g = grad.row(i);
    for (std::size_t j = 0; j < h.cols(); ++j) {
      double score = (b.get(i, j) ? 1.0 : -1.0) - sigmoid(hr[j]);
      g[j] = score * (loss - c);
      s2_sum += score * score;
    }
  }
  double s2 = s2_sum / static_cast<double>(h.size());
  if (!state.initialized) {
    state.num_ema = s2 * loss;
    state.den_ema = s2;
    state.initialized = true;
  } else {
    state.num_ema = state.decay * state.num_ema + (1.0 - state.decay) * s2 * loss;
    state.den_ema = state.decay * state.den_ema + (1.0 - state.decay) * s2;
  }
  return grad;
}

}  // namespace bgn
