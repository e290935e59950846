#include "edgespec/masac/mlp.hpp"

#include <cmath>

#include "edgespec/common/error.hpp"

namespace edgespec::masac {

namespace {

using ConstMap = Eigen::Map<const Matrix>;

}  // namespace

Eigen::Index Mlp::param_count(const std::vector<int>& sizes) {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) n += Eigen::Index(sizes[l + 1]) * (sizes[l] + 1);
  return n;
}

Mlp::Mlp(std::vector<int> sizes, Rng& rng, double output_scale) : sizes_(std::move(sizes)) {
  require(sizes_.size() >= 2, "Mlp: need at least input and output sizes");
  for (int s : sizes_) require(s > 0, "Mlp: layer sizes must be positive");
  params_ = Vector::Zero(param_count(sizes_));
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double limit = std::sqrt(6.0 / (in + out)) * (l + 2 == sizes_.size() ? output_scale : 1.0);
    std::uniform_real_distribution<double> init(-limit, limit);
    for (Eigen::Index k = 0; k < Eigen::Index(in) * out; ++k) params_[offset + k] = init(rng);
    offset += Eigen::Index(in) * out + out;
  }
}

Mlp::Mlp(std::vector<int> sizes, Vector params) : sizes_(std::move(sizes)), params_(std::move(params)) {
  require(sizes_.size() >= 2, "Mlp: need at least input and output sizes");
  require(params_.size() == param_count(sizes_), "Mlp: parameter vector has the wrong length");
}

Matrix Mlp::forward(const Matrix& input, Cache* cache) const {
  require(input.rows() == input_size(), "Mlp::forward: input has the wrong number of rows");
  if (cache) cache->activations.assign(1, input);
  Matrix a = input;
  Eigen::Index offset = 0;
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    ConstMap w(params_.data() + offset, out, in);
    Eigen::Map<const Vector> b(params_.data() + offset + Eigen::Index(out) * in, out);
    offset += Eigen::Index(out) * in + out;
    Matrix z = w * a;
    z.colwise() += b;
    if (l + 1 < layers) {
      a = z.array().tanh().matrix();
      if (cache) cache->activations.push_back(a);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Matrix Mlp::backward(const Cache& cache, const Matrix& grad_output, Vector& grad_params) const {
  const std::size_t layers = sizes_.size() - 1;
  require(cache.activations.size() == layers, "Mlp::backward: cache does not match the network");
  require(grad_output.rows() == output_size() && grad_output.cols() == cache.activations[0].cols(),
          "Mlp::backward: gradient shape mismatch");
  if (grad_params.size() != params_.size()) grad_params = Vector::Zero(params_.size());
  std::vector<Eigen::Index> offsets(layers);
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = offset;
    offset += Eigen::Index(sizes_[l + 1]) * sizes_[l] + sizes_[l + 1];
  }
  Matrix delta = grad_output;
  for (std::size_t l = layers; l-- > 0;) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const Matrix& a_in = cache.activations[l];
    Eigen::Map<Matrix> gw(grad_params.data() + offsets[l], out, in);
    Eigen::Map<Vector> gb(grad_params.data() + offsets[l] + Eigen::Index(out) * in, out);
    gw.noalias() += delta * a_in.transpose();
    gb += delta.rowwise().sum();
    ConstMap w(params_.data() + offsets[l], out, in);
    Matrix grad_in = w.transpose() * delta;
    if (l == 0) return grad_in;
    delta = grad_in.array() * (1.0 - a_in.array().square());
  }
  return {};
}

Adam::Adam(Eigen::Index size, double learning_rate, double max_grad_norm)
    : lr_(learning_rate), max_norm_(max_grad_norm), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {
  require(learning_rate >= 0.0, "Adam: learning rate must be non-negative");
}

void Adam::step(Vector& params, const Vector& grad) {
  require(params.size() == m_.size() && grad.size() == m_.size(), "Adam::step: size mismatch");
  double scale = 1.0;
  if (max_norm_ > 0.0) {
    const double norm = grad.norm();
    if (norm > max_norm_) scale = max_norm_ / norm;
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * scale * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * (scale * grad).cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, double(t_));
  const double c2 = 1.0 - std::pow(beta2_, double(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

void soft_update(const Vector& source, Vector& target, double xi) {
  require(xi > 0.0 && xi <= 1.0, "soft_update: xi must lie in (0, 1]");
  require(source.size() == target.size(), "soft_update: size mismatch");
  target = xi * source + (1.0 - xi) * target;
}

}  // namespace edgespec::masac
