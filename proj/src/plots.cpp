#include "w1bench/plots.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

#include "w1bench/svg.hpp"

namespace w1bench {

namespace {

constexpr double kCanvas = 560.0;
constexpr double kMargin = 20.0;

// box coordinate -> canvas pixel (y flipped)
double px(double v, double B) { return kMargin + (v + B) / (2 * B) * (kCanvas - 2 * kMargin); }
double py(double v, double B) { return kCanvas - px(v, B); }

}  // namespace

Mat surface_grid(const std::function<double(const Vec&)>& f, double B, int grid) {
  Mat vals(grid, grid);
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      Vec x(2);
      x[0] = -B + (j + 0.5) * 2 * B / grid;
      x[1] = -B + (i + 0.5) * 2 * B / grid;
      vals(i, j) = f(x);
    }
  }
  return vals;
}

std::string plot_surface(const std::function<double(const Vec&)>& f, double B, int grid) {
  const Mat vals = surface_grid(f, B, grid);
  const double lo = vals.minCoeff(), hi = vals.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;

  svg::Document doc(kCanvas, kCanvas);
  const double cell = (kCanvas - 2 * kMargin) / grid;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const double x = kMargin + j * cell;
      const double y = kCanvas - kMargin - (i + 1) * cell;
      doc.rect(x, y, cell + 0.5, cell + 0.5, svg::heat_color((vals(i, j) - lo) / span));
    }
  }
  doc.text(kMargin, 14, "potential surface");
  return doc.str();
}

std::string plot_rays(const BenchmarkPair& pair, int n_rays, RngStream& rng) {
  if (pair.dim() != 2) throw DimensionError("ray plots require D = 2");
  const double B = pair.box_halfwidth();
  svg::Document doc(kCanvas, kCanvas);
  doc.rect(kMargin, kMargin, kCanvas - 2 * kMargin, kCanvas - 2 * kMargin, "#f8f8f8");

  int drawn = 0;
  long guard = 0;
  while (drawn < n_rays && guard++ < 100L * n_rays + 1000) {
    const Vec x = pair.sample_base(rng);
    try {
      const auto [x0, x1] = truncate_ray(pair.funnel().transport_ray(x), B);
      doc.line(px(x0[0], B), py(x0[1], B), px(x1[0], B), py(x1[1], B), "#4477cc", 1.0);
      doc.circle(px(x1[0], B), py(x1[1], B), 1.6, "#4477cc");
      ++drawn;
    } catch (const TieError&) {
    } catch (const AtCenterError&) {
    } catch (const DegenerateRayError&) {
    }
  }
  for (int i = 0; i < pair.funnel().size(); ++i) {
    const auto a = pair.funnel().centers().row(i);
    doc.circle(px(a[0], B), py(a[1], B), 4.0, "#cc3333");
  }
  doc.text(kMargin, 14, "truncated transport rays");
  return doc.str();
}

std::string plot_pca(const Mat& X, const Mat& Y) {
  if (X.cols() < 2) throw DimensionError("PCA plots require D >= 2");
  const Eigen::RowVectorXd mean = Y.colwise().mean();
  const Mat centered = Y.rowwise() - mean;
  const Mat cov = centered.transpose() * centered / std::max<int>(1, Y.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
  const int D = static_cast<int>(X.cols());
  Mat pcs(D, 2);
  pcs.col(0) = eig.eigenvectors().col(D - 1);  // eigenvalues ascending
  pcs.col(1) = eig.eigenvectors().col(D - 2);

  const Mat Xp = (X.rowwise() - mean) * pcs;
  const Mat Yp = centered * pcs;
  const double lim = std::max(Xp.array().abs().maxCoeff(), Yp.array().abs().maxCoeff());

  svg::Document doc(kCanvas, kCanvas);
  doc.rect(kMargin, kMargin, kCanvas - 2 * kMargin, kCanvas - 2 * kMargin, "#f8f8f8");
  for (int i = 0; i < Yp.rows(); ++i)
    doc.circle(px(Yp(i, 0), lim), py(Yp(i, 1), lim), 1.5, "#cc7722");
  for (int i = 0; i < Xp.rows(); ++i)
    doc.circle(px(Xp(i, 0), lim), py(Xp(i, 1), lim), 1.5, "#3366bb");
  doc.text(kMargin, 14, "first marginal (blue) vs second (orange), 2 PCs");
  return doc.str();
}

}  // namespace w1bench
