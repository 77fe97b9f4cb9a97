#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bearing/configuration.hpp"
#include "bearing/error.hpp"
#include "bearing/formation.hpp"
#include "bearing/laplacian.hpp"
#include "bearing/rigidity.hpp"

namespace bearing {

/// Noise-free bearings between neighbors of the true network.
inline BearingVector measure_bearings(const Framework& truth, const NumericOptions& opts = {}) {
  return bearing_function(truth, opts);
}

/// Exploratory measurement model: each exact bearing is perturbed by
/// isotropic Gaussian noise of standard deviation `sigma` and renormalized.
/// The convergence guarantees of the estimator do not cover this model.
inline BearingVector measure_bearings_noisy(const Framework& truth, double sigma, std::uint64_t seed,
                                            const NumericOptions& opts = {}) {
  BearingVector bv = bearing_function(truth, opts);
  if (sigma <= 0.0) return bv;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (Index k = 0; k < bv.m(); ++k) {
    auto gk = bv.g.segment(k * bv.dim, bv.dim);
    for (Index c = 0; c < bv.dim; ++c) gk(c) += noise(rng);
    gk.normalize();
  }
  return bv;
}

/// Anchor-follower estimator. Anchors hold their estimates; followers
/// integrate -sum_j P_{g_ij} (x_i - x_j) using measured bearings.
inline Eigen::VectorXd estimator_field(const BearingConstraintSet& measurements, const Eigen::VectorXd& estimates,
                                       const std::vector<Index>& anchors) {
  return detail::projected_consensus(measurements, estimates, detail::role_mask(measurements.graph().n(), anchors));
}

/// p_f = -L_ff^{-1} L_fa p_a.
inline Eigen::VectorXd localize_closed_form(const RolePartition& part, const Eigen::VectorXd& anchor_positions) {
  if (part.n_special() < 2) {
    throw Error(ErrorCode::TooFewAnchors, "closed-form localization needs at least 2 anchors, got " +
                                              std::to_string(part.n_special()));
  }
  if (anchor_positions.size() != part.n_special() * part.dim) {
    throw Error(ErrorCode::SizeMismatch, "anchor positions have wrong length");
  }
  if (part.followers.empty()) return Eigen::VectorXd(0);
  return -factor_follower_block(part).solve(part.fs * anchor_positions);
}

struct LocalizationErrors {
  std::vector<double> per_agent;
  double max = 0.0;
};

inline LocalizationErrors localization_errors(const Eigen::VectorXd& estimates, const Eigen::VectorXd& truth, int d) {
  if (estimates.size() != truth.size() || truth.size() % d != 0) {
    throw Error(ErrorCode::SizeMismatch, "estimate and ground truth differ in length");
  }
  LocalizationErrors out;
  const Index n = truth.size() / d;
  out.per_agent.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double e = (estimates.segment(i * d, d) - truth.segment(i * d, d)).norm();
    out.per_agent[static_cast<std::size_t>(i)] = e;
    out.max = std::max(out.max, e);
  }
  return out;
}

/// Localization task. The ground truth is used to synthesize measurements
/// and to score estimates; the estimator itself only sees `measurements`,
/// the anchor positions and the current estimates.
struct LocalizationProblem {
  Framework truth;
  std::vector<Index> anchors;
  BearingConstraintSet measurements;
  Eigen::VectorXd initial_estimate;  // full dn; anchor entries are overwritten

  static LocalizationProblem make(Framework truth, std::vector<Index> anchors, Eigen::VectorXd initial_estimate,
                                  double noise_sigma = 0.0, std::uint64_t noise_seed = 0) {
    if (anchors.empty()) {
      throw Error(ErrorCode::ValidationError, "localization without anchors is not supported");
    }
    const BearingVector bv = noise_sigma > 0.0 ? measure_bearings_noisy(truth, noise_sigma, noise_seed)
                                               : measure_bearings(truth);
    LocalizationProblem out{truth, std::move(anchors), BearingConstraintSet::from_bearings(truth.graph, bv),
                            std::move(initial_estimate)};
    std::sort(out.anchors.begin(), out.anchors.end());
    detail::check_state(out.measurements, out.initial_estimate);
    detail::role_mask(truth.n(), out.anchors);
    return out;
  }

  int dim() const { return truth.dim(); }

  Eigen::VectorXd anchor_positions() const {
    Eigen::VectorXd pa(static_cast<Index>(anchors.size()) * dim());
    for (std::size_t a = 0; a < anchors.size(); ++a) {
      pa.segment(static_cast<Index>(a) * dim(), dim()) = truth.config.point(anchors[a]);
    }
    return pa;
  }

  Eigen::VectorXd initial_state() const {
    Eigen::VectorXd x = initial_estimate;
    for (Index v : anchors) x.segment(v * dim(), dim()) = truth.config.point(v);
    return x;
  }
};

}  // namespace bearing
