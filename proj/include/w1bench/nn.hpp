#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

#include "w1bench/errors.hpp"
#include "w1bench/rng.hpp"

namespace w1bench::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Activation { ReLU, FullSort };
enum class Constraint { None, SpectralNorm, Orthonormal };

struct Layer {
  Mat W;  // out x in
  Vec b;
};

// Cached activations from one forward pass; batches are rows.
struct ForwardCache {
  std::vector<Mat> inputs;            // inputs to each layer
  std::vector<Mat> preacts;           // pre-activation values
  std::vector<Eigen::MatrixXi> perms; // FullSort sort order per hidden layer
};

struct ParamGrads {
  std::vector<Mat> dW;
  std::vector<Vec> db;

  void add_scaled(const ParamGrads& other, double s);
  void scale(double s);
  double squared_norm() const;
};

// Fixed dense MLP family: linear layers with ReLU or FullSort hidden
// activations and a linear output. This is all the dual solvers need;
// there is no general computation graph.
class DenseNet {
 public:
  DenseNet(std::vector<int> widths, Activation act, Constraint constraint,
           int power_iters, RngStream& rng);

  // Published architecture: hidden [max(2D,128), max(2D,128), max(D,128)].
  static std::vector<int> default_widths(int dim, int out_dim);

  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  Activation activation() const { return act_; }
  Constraint constraint() const { return constraint_; }
  int power_iters() const { return power_iters_; }
  const std::vector<int>& widths() const { return widths_; }

  Mat forward(const Mat& X, ForwardCache* cache = nullptr) const;

  // Per-sample input gradients of a scalar-output net, n x D.
  Mat grad_input(const ForwardCache& cache) const;

  // Reverse-mode parameter gradients for output cotangents dOut (n x out).
  ParamGrads backward(const ForwardCache& cache, const Mat& dOut,
                      Mat* dX = nullptr) const;

  ParamGrads zero_grads() const;

  void clip_weights(double c);

  // Divide each weight matrix by its power-iteration top-singular-value
  // estimate; the left/right vectors persist across calls.
  void spectral_normalize();

  // Bjorck projection W <- W(3I - W^T W)/2 until the small-side Gram is
  // within 1e-6 of the identity (Frobenius).
  void orthonormalize();

  double param_norm() const;

  const std::vector<Vec>& power_u() const { return pi_u_; }
  const std::vector<Vec>& power_v() const { return pi_v_; }
  void set_power_vectors(std::vector<Vec> u, std::vector<Vec> v);

 private:
  std::vector<int> widths_;
  std::vector<Layer> layers_;
  Activation act_;
  Constraint constraint_;
  int power_iters_;
  std::vector<Vec> pi_u_, pi_v_;
};

enum class PenaltyMode { GP, LP };

struct PenaltyResult {
  ParamGrads grads;   // d/dtheta of the batch-mean penalty
  double value = 0;   // batch-mean penalty
  long kink_count = 0;  // points skipped because ||grad f|| ~ 0
};

// Gradient of mean_r (||grad_x f(r)|| - 1)^2 (GP) or its hinge variant (LP)
// with respect to the parameters, via forward-over-reverse with the
// activation pattern frozen at each point. Exact a.e. for the piecewise
// linear nets in this family.
PenaltyResult penalty_grad(const DenseNet& net, const Mat& R, PenaltyMode mode);

// Convenience wrapper: reverse-mode d(loss)/d(theta) where `loss` maps batch
// outputs to (value, d loss / d outputs).
ParamGrads grad_params(const DenseNet& net, const Mat& X,
                       const std::function<std::pair<double, Mat>(const Mat&)>& loss,
                       double* loss_value = nullptr);

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

class AdamState {
 public:
  AdamState(const DenseNet& net, AdamConfig cfg);

  // One descent step; pass negated gradients for ascent.
  void step(DenseNet& net, const ParamGrads& grads);

  long step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<Mat> mW_, vW_;
  std::vector<Vec> mb_, vb_;
  long t_ = 0;
};

void save_checkpoint(const DenseNet& net, const std::string& path);
DenseNet load_checkpoint(const std::string& path);

}  // namespace w1bench::nn
