#include "w1bench/minfunnel.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace w1bench {

namespace {

std::atomic<long> g_zero_numerator_warnings{0};

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

MinFunnel::MinFunnel(Mat centers, Vec offsets)
    : centers_(std::move(centers)), offsets_(std::move(offsets)) {
  const int n = static_cast<int>(centers_.rows());
  if (n < 1) throw ConstructionError("MinFunnel needs at least one funnel");
  if (offsets_.size() != n)
    throw ConstructionError("centers/offsets count mismatch");
  if (centers_.cols() < 1) throw ConstructionError("MinFunnel dimension must be >= 1");

  // Non-degeneracy: ||a_i - a_j|| != |b_i - b_j|, checked relatively.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dist = (centers_.row(i) - centers_.row(j)).norm();
      const double doff = std::abs(offsets_[i] - offsets_[j]);
      const double scale = 1.0 + dist + doff;
      if (dist <= FunnelTolerances::nondegeneracy * scale) {
        std::ostringstream msg;
        msg << "funnel centers " << i << " and " << j << " coincide";
        throw NonDegeneracyError(msg.str());
      }
      if (std::abs(dist - doff) <= FunnelTolerances::nondegeneracy * scale) {
        std::ostringstream msg;
        msg << "degenerate funnel pair (" << i << "," << j << "): ||a_i-a_j|| = |b_i-b_j| = "
            << dist;
        throw NonDegeneracyError(msg.str());
      }
    }
  }
  center_sq_norms_ = centers_.rowwise().squaredNorm();
}

double MinFunnel::eval(const Vec& x) const {
  double best = kInf;
  for (int i = 0; i < size(); ++i) {
    const double v = (x.transpose() - centers_.row(i)).norm() + offsets_[i];
    if (v < best) best = v;
  }
  return best;
}

int MinFunnel::active_funnel(const Vec& x) const {
  double best = kInf, second = kInf;
  int arg = -1;
  for (int i = 0; i < size(); ++i) {
    const double v = (x.transpose() - centers_.row(i)).norm() + offsets_[i];
    if (v < best) {
      second = best;
      best = v;
      arg = i;
    } else if (v < second) {
      second = v;
    }
  }
  if (size() > 1 && second - best <= FunnelTolerances::tie * (1.0 + std::abs(best))) {
    std::ostringstream msg;
    msg << "funnel tie at u(x) = " << best << " (gap " << second - best << ")";
    throw TieError(msg.str());
  }
  return arg;
}

Vec MinFunnel::grad(const Vec& x) const {
  const int m = active_funnel(x);
  Vec d = x - centers_.row(m).transpose();
  const double norm = d.norm();
  if (norm < FunnelTolerances::center)
    throw AtCenterError("query coincides with the active funnel center");
  return d / norm;
}

TransportRay MinFunnel::transport_ray(const Vec& x) const {
  const int m = active_funnel(x);
  Vec d = x - centers_.row(m).transpose();
  const double dist_m = d.norm();
  if (dist_m < FunnelTolerances::center)
    throw AtCenterError("query coincides with the active funnel center");
  const Vec v = d / dist_m;
  const double ux = dist_m + offsets_[m];

  // First intersection of the active funnel with any other funnel along v:
  // r_n solves u_m(x) + r = ||x + r v - a_n|| + b_n, which is linear in r.
  // A candidate is admissible only if r_n > 0 and r_n >= b_n - u(x);
  // a zero denominator means the funnels never meet along v (r_n = +inf).
  double r = kInf;
  for (int n = 0; n < size(); ++n) {
    if (n == m) continue;
    const Vec dn = x - centers_.row(n).transpose();
    const double diff = ux - offsets_[n];
    const double num = 0.5 * (dn.squaredNorm() - diff * diff);
    const double den = diff - v.dot(dn);
    const double scale = 1.0 + dn.squaredNorm() + diff * diff;
    if (std::abs(num) <= 1e-12 * scale) {
      // Excluded by non-degeneracy; treat as no intersection.
      if (g_zero_numerator_warnings.fetch_add(1, std::memory_order_relaxed) == 0)
        std::fprintf(stderr,
                     "w1bench: zero ray-intersection numerator for funnel %d "
                     "(treated as no intersection; further cases counted silently)\n",
                     n);
      continue;
    }
    if (den == 0.0) continue;
    const double rn = num / den;
    if (rn > FunnelTolerances::ray && rn >= offsets_[n] - ux && rn < r) r = rn;
  }

  TransportRay ray;
  ray.funnel_index = m;
  ray.lower = centers_.row(m).transpose();
  ray.direction = v;
  ray.upper_offset = r;
  ray.query = x;
  return ray;
}

long MinFunnel::zero_numerator_warnings() {
  return g_zero_numerator_warnings.load(std::memory_order_relaxed);
}

std::pair<Vec, Vec> truncate_ray(const TransportRay& ray, double box_halfwidth) {
  const Vec& x = ray.query;
  const Vec& v = ray.direction;
  const double B = box_halfwidth;
  if ((x.array().abs() > B + 1e-12).any())
    throw OutOfBoxError("ray query point outside the box");

  // Distance from x to the box boundary along direction w (x inside).
  auto exit_distance = [&](const Vec& w) {
    double t = kInf;
    for (int i = 0; i < w.size(); ++i) {
      if (w[i] > 0.0)
        t = std::min(t, (B - x[i]) / w[i]);
      else if (w[i] < 0.0)
        t = std::min(t, (-B - x[i]) / w[i]);
    }
    return t;
  };

  const double down = std::min((x - ray.lower).norm(), exit_distance(-v));
  const double up = std::min(ray.upper_offset, exit_distance(v));
  Vec x0 = x - down * v;
  Vec x1 = x + up * v;
  if ((x1 - x0).norm() < FunnelTolerances::ray)
    throw DegenerateRayError("truncated transport ray collapses to a point");
  return {std::move(x0), std::move(x1)};
}

MinFunnel build_from_cover(const Mat& points, const Vec& values) {
  const int n = static_cast<int>(points.rows());
  if (n < 1) throw ConstructionError("cover needs at least one point");
  if (values.size() != n) throw ConstructionError("points/values count mismatch");
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dist = (points.row(i) - points.row(j)).norm();
      const double dval = std::abs(values[i] - values[j]);
      if (dval > dist * (1.0 + 1e-12) + 1e-12) {
        std::ostringstream msg;
        msg << "values at points " << i << " and " << j
            << " violate 1-Lipschitz consistency: |dv| = " << dval << " > " << dist;
        throw LipschitzViolationError(msg.str());
      }
    }
  }
  return MinFunnel(points, values);
}

}  // namespace w1bench
