#pragma once

#include <functional>
#include <string>

#include "w1bench/benchmark.hpp"

namespace w1bench {

// Grid of f values over [-B, B]^2, row i / column j at cell centers;
// row 0 is the bottom of the box.
Mat surface_grid(const std::function<double(const Vec&)>& f, double box_halfwidth,
                 int grid);

// Heatmap of a potential over the box (D = 2 only).
std::string plot_surface(const std::function<double(const Vec&)>& f,
                         double box_halfwidth, int grid = 64);

// Truncated transport rays through random points plus the funnel centers
// (D = 2 only).
std::string plot_rays(const BenchmarkPair& pair, int n_rays, RngStream& rng);

// Scatter of X vs Y projected on the two leading principal components of Y.
std::string plot_pca(const Mat& X, const Mat& Y);

}  // namespace w1bench
