#pragma once

#include <Eigen/Core>

#include <limits>
#include <vector>

#include "w1bench/errors.hpp"

namespace w1bench {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;  // rows are samples / funnel centers

// Numerical guard widths. Geometry is float64 throughout; the guards make
// the non-differentiable set (funnel ties, centers) explicit instead of
// letting it surface as noise near centers.
struct FunnelTolerances {
  static constexpr double tie = 1e-9;     // scaled by (1 + |u(x)|)
  static constexpr double center = 1e-12;
  static constexpr double ray = 1e-9;
  static constexpr double nondegeneracy = 1e-9;  // relative
};

// A maximal segment of unit-rate descent of u through a query point.
// The segment is [lower, query + upper_offset * direction]; upper_offset
// may be +infinity when no other funnel is ever reached along v.
struct TransportRay {
  int funnel_index = -1;   // active funnel m at the query
  Vec lower;               // lower endpoint a_m
  Vec direction;           // unit vector v = (x - a_m) / ||x - a_m||
  double upper_offset = 0; // distance from query to the upper endpoint along v
  Vec query;

  bool is_infinite() const { return !std::isfinite(upper_offset); }
  Vec upper() const { return query + upper_offset * direction; }
};

// u(x) = min_n { ||x - a_n||_2 + b_n }, a 1-Lipschitz function whose value,
// gradient and transport rays all have closed forms. Centers must be
// pairwise distinct and satisfy ||a_i - a_j|| != |b_i - b_j| for i != j
// (otherwise ray endpoints are ill-defined and construction is rejected).
class MinFunnel {
 public:
  MinFunnel(Mat centers, Vec offsets);

  int dim() const { return static_cast<int>(centers_.cols()); }
  int size() const { return static_cast<int>(centers_.rows()); }
  const Mat& centers() const { return centers_; }
  const Vec& offsets() const { return offsets_; }

  double eval(const Vec& x) const;

  // Index of the unique active funnel at x. Throws TieError when the two
  // smallest funnel values are within tie * (1 + |u(x)|): the point is
  // non-differentiable and callers should resample or fall back to identity.
  int active_funnel(const Vec& x) const;

  // Unit gradient (x - a_m) / ||x - a_m||. Throws AtCenterError within
  // `center` of the active center; propagates TieError.
  Vec grad(const Vec& x) const;

  TransportRay transport_ray(const Vec& x) const;

  // Count of r_n candidates dropped because the closed-form numerator was
  // numerically zero (excluded by the non-degeneracy invariant; kept as a
  // diagnostic rather than an error).
  static long zero_numerator_warnings();

 private:
  Mat centers_;
  Vec offsets_;
  Vec center_sq_norms_;  // cached ||a_n||^2 for batched evaluation
};

// Truncate `ray` to the box [-B, B]^D. Returns (x0, x1) with x0 the
// lower-u endpoint; both endpoints lie in the box and the query point lies
// on [x0, x1]. Throws OutOfBoxError if the query is outside the box and
// DegenerateRayError if the clipped segment collapses below `ray` length.
std::pair<Vec, Vec> truncate_ray(const TransportRay& ray, double box_halfwidth);

// Constructive cover approximation: u with a_n = points, b_n = values.
// If the values come from a 1-Lipschitz f sampled on an eps/2-cover of a
// compact set, then f <= u everywhere and sup |u - f| <= eps on the set.
// Throws LipschitzViolationError when |v_i - v_j| > ||p_i - p_j||, and
// NonDegeneracyError when the resulting funnel is degenerate (callers may
// perturb the offsets and retry).
MinFunnel build_from_cover(const Mat& points, const Vec& values);

}  // namespace w1bench
