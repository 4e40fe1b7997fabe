#include "w1bench/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace w1bench::nn {

namespace {

using nlohmann::json;

// Descending sort of each row; perm(i, j) is the source column of entry j.
Mat full_sort(const Mat& Z, Eigen::MatrixXi& perm) {
  const int n = static_cast<int>(Z.rows()), d = static_cast<int>(Z.cols());
  Mat out(n, d);
  perm.resize(n, d);
  std::vector<int> idx(d);
  for (int i = 0; i < n; ++i) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return Z(i, a) > Z(i, b); });
    for (int j = 0; j < d; ++j) {
      perm(i, j) = idx[j];
      out(i, j) = Z(i, idx[j]);
    }
  }
  return out;
}

}  // namespace

void ParamGrads::add_scaled(const ParamGrads& other, double s) {
  for (size_t l = 0; l < dW.size(); ++l) {
    dW[l] += s * other.dW[l];
    db[l] += s * other.db[l];
  }
}

void ParamGrads::scale(double s) {
  for (size_t l = 0; l < dW.size(); ++l) {
    dW[l] *= s;
    db[l] *= s;
  }
}

double ParamGrads::squared_norm() const {
  double acc = 0;
  for (size_t l = 0; l < dW.size(); ++l)
    acc += dW[l].squaredNorm() + db[l].squaredNorm();
  return acc;
}

std::vector<int> DenseNet::default_widths(int dim, int out_dim) {
  return {dim, std::max(2 * dim, 128), std::max(2 * dim, 128), std::max(dim, 128),
          out_dim};
}

DenseNet::DenseNet(std::vector<int> widths, Activation act, Constraint constraint,
                   int power_iters, RngStream& rng)
    : widths_(std::move(widths)), act_(act), constraint_(constraint),
      power_iters_(power_iters) {
  if (widths_.size() < 2) throw DimensionError("net needs at least one layer");
  for (int w : widths_)
    if (w < 1) throw DimensionError("layer widths must be positive");

  for (size_t l = 0; l + 1 < widths_.size(); ++l) {
    const int in = widths_[l], out = widths_[l + 1];
    Layer layer;
    layer.W.resize(out, in);
    const double std = std::sqrt(2.0 / in);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < in; ++j) layer.W(i, j) = std * rng.normal();
    layer.b = Vec::Zero(out);
    layers_.push_back(std::move(layer));

    Vec u(out), v(in);
    for (int i = 0; i < out; ++i) u[i] = rng.normal();
    for (int j = 0; j < in; ++j) v[j] = rng.normal();
    pi_u_.push_back(u.normalized());
    pi_v_.push_back(v.normalized());
  }
}

Mat DenseNet::forward(const Mat& X, ForwardCache* cache) const {
  if (X.cols() != input_dim())
    throw DimensionError("forward: input width mismatch");
  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
    cache->perms.assign(layers_.size(), Eigen::MatrixXi());
  }
  Mat A = X;
  for (size_t l = 0; l < layers_.size(); ++l) {
    if (cache) cache->inputs.push_back(A);
    Mat Z = (A * layers_[l].W.transpose()).rowwise() + layers_[l].b.transpose();
    if (cache) cache->preacts.push_back(Z);
    if (l + 1 == layers_.size()) {
      A = std::move(Z);  // linear output
    } else if (act_ == Activation::ReLU) {
      A = Z.cwiseMax(0.0);
    } else {
      Eigen::MatrixXi perm;
      A = full_sort(Z, perm);
      if (cache) cache->perms[l] = std::move(perm);
    }
  }
  return A;
}

Mat DenseNet::grad_input(const ForwardCache& cache) const {
  if (output_dim() != 1)
    throw DimensionError("grad_input requires a scalar-output net");
  const int n = static_cast<int>(cache.inputs.front().rows());
  Mat G = Mat::Ones(n, 1);
  for (int l = num_layers() - 1; l >= 0; --l) {
    Mat GA = G * layers_[l].W;  // n x d_{l-1}
    if (l == 0) return GA;
    // back through the activation of layer l-1
    if (act_ == Activation::ReLU) {
      G = ((cache.preacts[l - 1].array() > 0.0).cast<double>() * GA.array()).matrix();
    } else {
      const auto& perm = cache.perms[l - 1];
      G = Mat::Zero(GA.rows(), GA.cols());
      for (int i = 0; i < GA.rows(); ++i)
        for (int j = 0; j < GA.cols(); ++j) G(i, perm(i, j)) += GA(i, j);
    }
  }
  return G;
}

ParamGrads DenseNet::backward(const ForwardCache& cache, const Mat& dOut,
                              Mat* dX) const {
  ParamGrads grads = zero_grads();
  Mat G = dOut;
  for (int l = num_layers() - 1; l >= 0; --l) {
    grads.dW[l] = G.transpose() * cache.inputs[l];
    grads.db[l] = G.colwise().sum().transpose();
    if (l == 0) {
      if (dX) *dX = G * layers_[0].W;
      break;
    }
    Mat GA = G * layers_[l].W;
    if (act_ == Activation::ReLU) {
      G = ((cache.preacts[l - 1].array() > 0.0).cast<double>() * GA.array()).matrix();
    } else {
      const auto& perm = cache.perms[l - 1];
      G = Mat::Zero(GA.rows(), GA.cols());
      for (int i = 0; i < GA.rows(); ++i)
        for (int j = 0; j < GA.cols(); ++j) G(i, perm(i, j)) += GA(i, j);
    }
  }
  return grads;
}

ParamGrads DenseNet::zero_grads() const {
  ParamGrads g;
  for (const auto& layer : layers_) {
    g.dW.push_back(Mat::Zero(layer.W.rows(), layer.W.cols()));
    g.db.push_back(Vec::Zero(layer.b.size()));
  }
  return g;
}

void DenseNet::clip_weights(double c) {
  for (auto& layer : layers_) {
    layer.W = layer.W.cwiseMax(-c).cwiseMin(c);
    layer.b = layer.b.cwiseMax(-c).cwiseMin(c);
  }
}

void DenseNet::spectral_normalize() {
  for (size_t l = 0; l < layers_.size(); ++l) {
    Mat& W = layers_[l].W;
    Vec& u = pi_u_[l];
    Vec& v = pi_v_[l];
    for (int it = 0; it < power_iters_; ++it) {
      v = (W.transpose() * u).normalized();
      u = (W * v).normalized();
    }
    const double sigma = u.dot(W * v);
    if (sigma > 0) W /= sigma;
  }
}

void DenseNet::orthonormalize() {
  for (size_t l = 0; l < layers_.size(); ++l) {
    Mat& W = layers_[l].W;
    // Bjorck diverges for top singular value >= sqrt(3); rescale first.
    Vec u = pi_u_[l], v = pi_v_[l];
    for (int it = 0; it < 20; ++it) {
      v = (W.transpose() * u).normalized();
      u = (W * v).normalized();
    }
    const double sigma = u.dot(W * v);
    if (sigma > 1.5) W /= sigma;
    pi_u_[l] = u;
    pi_v_[l] = v;

    const bool tall = W.rows() >= W.cols();
    const int k = static_cast<int>(tall ? W.cols() : W.rows());
    const Mat I = Mat::Identity(k, k);
    for (int it = 0; it < 100; ++it) {
      Mat gram = tall ? Mat(W.transpose() * W) : Mat(W * W.transpose());
      if ((gram - I).norm() <= 1e-6) break;
      W = 1.5 * W - 0.5 * (tall ? Mat(W * gram) : Mat(gram * W));
    }
  }
}

double DenseNet::param_norm() const {
  double acc = 0;
  for (const auto& layer : layers_)
    acc += layer.W.squaredNorm() + layer.b.squaredNorm();
  return std::sqrt(acc);
}

void DenseNet::set_power_vectors(std::vector<Vec> u, std::vector<Vec> v) {
  pi_u_ = std::move(u);
  pi_v_ = std::move(v);
}

PenaltyResult penalty_grad(const DenseNet& net, const Mat& R, PenaltyMode mode) {
  if (net.output_dim() != 1)
    throw DimensionError("penalty_grad requires a scalar-output net");
  const int n = static_cast<int>(R.rows());
  ForwardCache cache;
  net.forward(R, &cache);
  const Mat Gin = net.grad_input(cache);

  PenaltyResult res;
  res.grads = net.zero_grads();
  Mat C = Mat::Zero(n, R.cols());
  for (int i = 0; i < n; ++i) {
    const double norm = Gin.row(i).norm();
    if (norm < 1e-12) {
      // gradient of ||.|| undefined at 0; skip the point
      ++res.kink_count;
      continue;
    }
    double excess = norm - 1.0;
    if (mode == PenaltyMode::LP) excess = std::max(0.0, excess);
    res.value += excess * excess / n;
    const double coef = 2.0 * excess / (n * norm);
    if (mode == PenaltyMode::LP && excess == 0.0) continue;
    C.row(i) = coef * Gin.row(i);
  }

  // Tangent pass along per-point direction c with the activation pattern
  // frozen, then reverse over the tangent chain. Biases receive no gradient.
  const int L = net.num_layers();
  std::vector<Mat> tangents;  // tangent inputs to each layer
  Mat T = C;
  for (int l = 0; l < L; ++l) {
    tangents.push_back(T);
    Mat TZ = T * net.layers()[l].W.transpose();
    if (l + 1 == L) {
      T = std::move(TZ);
    } else if (net.activation() == Activation::ReLU) {
      T = ((cache.preacts[l].array() > 0.0).cast<double>() * TZ.array()).matrix();
    } else {
      const auto& perm = cache.perms[l];
      T.resize(TZ.rows(), TZ.cols());
      for (int i = 0; i < TZ.rows(); ++i)
        for (int j = 0; j < TZ.cols(); ++j) T(i, j) = TZ(i, perm(i, j));
    }
  }

  Mat G = Mat::Ones(n, 1);
  for (int l = L - 1; l >= 0; --l) {
    res.grads.dW[l] = G.transpose() * tangents[l];
    if (l == 0) break;
    Mat GA = G * net.layers()[l].W;
    if (net.activation() == Activation::ReLU) {
      G = ((cache.preacts[l - 1].array() > 0.0).cast<double>() * GA.array()).matrix();
    } else {
      const auto& perm = cache.perms[l - 1];
      G = Mat::Zero(GA.rows(), GA.cols());
      for (int i = 0; i < GA.rows(); ++i)
        for (int j = 0; j < GA.cols(); ++j) G(i, perm(i, j)) += GA(i, j);
    }
  }
  return res;
}

ParamGrads grad_params(const DenseNet& net, const Mat& X,
                       const std::function<std::pair<double, Mat>(const Mat&)>& loss,
                       double* loss_value) {
  ForwardCache cache;
  const Mat out = net.forward(X, &cache);
  auto [value, dOut] = loss(out);
  if (loss_value) *loss_value = value;
  return net.backward(cache, dOut);
}

AdamState::AdamState(const DenseNet& net, AdamConfig cfg) : cfg_(cfg) {
  for (const auto& layer : net.layers()) {
    mW_.push_back(Mat::Zero(layer.W.rows(), layer.W.cols()));
    vW_.push_back(Mat::Zero(layer.W.rows(), layer.W.cols()));
    mb_.push_back(Vec::Zero(layer.b.size()));
    vb_.push_back(Vec::Zero(layer.b.size()));
  }
}

void AdamState::step(DenseNet& net, const ParamGrads& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    mW_[l] = cfg_.beta1 * mW_[l] + (1.0 - cfg_.beta1) * grads.dW[l];
    vW_[l].array() = cfg_.beta2 * vW_[l].array() +
                     (1.0 - cfg_.beta2) * grads.dW[l].array().square();
    layer.W.array() -= cfg_.lr * (mW_[l].array() / bc1) /
                       ((vW_[l].array() / bc2).sqrt() + cfg_.eps);
    mb_[l] = cfg_.beta1 * mb_[l] + (1.0 - cfg_.beta1) * grads.db[l];
    vb_[l].array() = cfg_.beta2 * vb_[l].array() +
                     (1.0 - cfg_.beta2) * grads.db[l].array().square();
    layer.b.array() -= cfg_.lr * (mb_[l].array() / bc1) /
                       ((vb_[l].array() / bc2).sqrt() + cfg_.eps);
  }
}

void save_checkpoint(const DenseNet& net, const std::string& path) {
  json j;
  j["version"] = 1;
  j["widths"] = net.widths();
  j["activation"] = net.activation() == Activation::ReLU ? "relu" : "fullsort";
  json c;
  switch (net.constraint()) {
    case Constraint::None: c["kind"] = "none"; break;
    case Constraint::SpectralNorm: c["kind"] = "spectral_norm"; break;
    case Constraint::Orthonormal: c["kind"] = "orthonormal"; break;
  }
  c["power_iters"] = net.power_iters();
  std::vector<std::vector<double>> us, vs;
  for (const auto& u : net.power_u()) us.emplace_back(u.begin(), u.end());
  for (const auto& v : net.power_v()) vs.emplace_back(v.begin(), v.end());
  c["u"] = us;
  c["v"] = vs;
  j["constraint"] = c;

  json layers = json::array();
  for (const auto& layer : net.layers()) {
    json lj;
    std::vector<std::vector<double>> rows(layer.W.rows());
    for (int i = 0; i < layer.W.rows(); ++i)
      rows[i].assign(layer.W.row(i).begin(), layer.W.row(i).end());
    lj["W"] = rows;
    lj["b"] = std::vector<double>(layer.b.begin(), layer.b.end());
    layers.push_back(std::move(lj));
  }
  j["layers"] = layers;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump() << "\n";
}

DenseNet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw SchemaVersionError("unsupported checkpoint version in " + path);

  const auto widths = j.at("widths").get<std::vector<int>>();
  const Activation act =
      j.at("activation").get<std::string>() == "relu" ? Activation::ReLU
                                                      : Activation::FullSort;
  const auto& cj = j.at("constraint");
  const std::string ckind = cj.at("kind").get<std::string>();
  Constraint constraint = Constraint::None;
  if (ckind == "spectral_norm") constraint = Constraint::SpectralNorm;
  else if (ckind == "orthonormal") constraint = Constraint::Orthonormal;

  RngStream dummy(0);
  DenseNet net(widths, act, constraint, cj.at("power_iters").get<int>(), dummy);
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto& lj = j.at("layers")[l];
    auto& layer = net.layers()[l];
    for (int i = 0; i < layer.W.rows(); ++i)
      for (int k = 0; k < layer.W.cols(); ++k)
        layer.W(i, k) = lj.at("W")[i][k].get<double>();
    for (int i = 0; i < layer.b.size(); ++i)
      layer.b[i] = lj.at("b")[i].get<double>();
  }
  std::vector<Vec> us, vs;
  for (const auto& uj : cj.at("u")) {
    Vec u(uj.size());
    for (size_t i = 0; i < uj.size(); ++i) u[static_cast<int>(i)] = uj[i].get<double>();
    us.push_back(std::move(u));
  }
  for (const auto& vj : cj.at("v")) {
    Vec v(vj.size());
    for (size_t i = 0; i < vj.size(); ++i) v[static_cast<int>(i)] = vj[i].get<double>();
    vs.push_back(std::move(v));
  }
  net.set_power_vectors(std::move(us), std::move(vs));
  return net;
}

}  // namespace w1bench::nn
