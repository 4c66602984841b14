#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "qrw/policy.hpp"

namespace qrwtest {

// Independent gradient oracle: central differences of a scalar function of
// theta. Kept free of the implementation paths it checks.
inline qrw::FeatureVec central_differences(
    const std::function<double(const qrw::FeatureVec&)>& f, const qrw::FeatureVec& theta,
    double h = 1e-5) {
  qrw::FeatureVec grad{};
  for (int k = 0; k < qrw::kFeatureDim; ++k) {
    qrw::FeatureVec up = theta;
    qrw::FeatureVec down = theta;
    up[k] += h;
    down[k] -= h;
    grad[k] = (f(up) - f(down)) / (2.0 * h);
  }
  return grad;
}

// ||a - b||_inf / max(1, ||a||_inf): scale-aware relative error.
inline double grad_rel_error(const qrw::FeatureVec& analytic, const qrw::FeatureVec& fd) {
  double diff = 0.0;
  double scale = 1.0;
  for (int k = 0; k < qrw::kFeatureDim; ++k) {
    diff = std::max(diff, std::abs(analytic[k] - fd[k]));
    scale = std::max(scale, std::abs(analytic[k]));
  }
  return diff / scale;
}

}  // namespace qrwtest
