#include "fairmdp/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "fairmdp/error.hpp"

namespace fairmdp {
namespace {

Eigen::MatrixXd orthogonal(int rows, int cols, double gain, Rng& rng) {
  const int big = std::max(rows, cols);
  Eigen::MatrixXd g(big, big);
  for (int j = 0; j < big; ++j)
    for (int i = 0; i < big; ++i) g(i, j) = standard_normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < big; ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return gain * q.topLeftCorner(rows, cols);
}

}  // namespace

Mlp::Mlp(int inputs, int hidden, int outputs) : inputs_(inputs), hidden_(hidden), outputs_(outputs) {
  require(inputs > 0 && hidden > 0 && outputs > 0, ErrorCode::kConfigInvalid, "layer widths must be positive");
  std::size_t off = 0;
  off_w1_ = off;
  off += static_cast<std::size_t>(hidden) * inputs;
  off_b1_ = off;
  off += hidden;
  off_w2_ = off;
  off += static_cast<std::size_t>(hidden) * hidden;
  off_b2_ = off;
  off += hidden;
  off_w3_ = off;
  off += static_cast<std::size_t>(outputs) * hidden;
  off_b3_ = off;
  off += outputs;
  theta_.assign(off, 0.0);
}

std::size_t Mlp::output_bias_offset() const noexcept { return off_b3_; }

void Mlp::initialize(Rng& rng, double output_gain) {
  std::fill(theta_.begin(), theta_.end(), 0.0);
  auto put = [&](std::size_t off, const Eigen::MatrixXd& m) {
    Eigen::Map<Eigen::MatrixXd>(theta_.data() + off, m.rows(), m.cols()) = m;
  };
  const double g = std::sqrt(2.0);
  put(off_w1_, orthogonal(hidden_, inputs_, g, rng));
  put(off_w2_, orthogonal(hidden_, hidden_, g, rng));
  put(off_w3_, orthogonal(outputs_, hidden_, output_gain, rng));
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x, Cache* cache) const {
  require(x.size() == inputs_, ErrorCode::kLengthMismatch, "network input has wrong width");
  const MatMap w1(theta_.data() + off_w1_, hidden_, inputs_);
  const VecMap b1(theta_.data() + off_b1_, hidden_);
  const MatMap w2(theta_.data() + off_w2_, hidden_, hidden_);
  const VecMap b2(theta_.data() + off_b2_, hidden_);
  const MatMap w3(theta_.data() + off_w3_, outputs_, hidden_);
  const VecMap b3(theta_.data() + off_b3_, outputs_);
  Eigen::VectorXd h1 = (w1 * x + b1).array().tanh().matrix();
  Eigen::VectorXd h2 = (w2 * h1 + b2).array().tanh().matrix();
  Eigen::VectorXd y = w3 * h2 + b3;
  if (cache) {
    cache->input = x;
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
  }
  return y;
}

void Mlp::backward(const Cache& cache, const Eigen::VectorXd& dy, std::span<double> grad) const {
  require(grad.size() == theta_.size(), ErrorCode::kLengthMismatch, "gradient buffer has wrong size");
  const MatMap w2(theta_.data() + off_w2_, hidden_, hidden_);
  const MatMap w3(theta_.data() + off_w3_, outputs_, hidden_);
  Eigen::Map<Eigen::MatrixXd> gw1(grad.data() + off_w1_, hidden_, inputs_);
  Eigen::Map<Eigen::VectorXd> gb1(grad.data() + off_b1_, hidden_);
  Eigen::Map<Eigen::MatrixXd> gw2(grad.data() + off_w2_, hidden_, hidden_);
  Eigen::Map<Eigen::VectorXd> gb2(grad.data() + off_b2_, hidden_);
  Eigen::Map<Eigen::MatrixXd> gw3(grad.data() + off_w3_, outputs_, hidden_);
  Eigen::Map<Eigen::VectorXd> gb3(grad.data() + off_b3_, outputs_);

  gw3.noalias() += dy * cache.h2.transpose();
  gb3 += dy;
  const Eigen::VectorXd d2 = ((w3.transpose() * dy).array() * (1.0 - cache.h2.array().square())).matrix();
  gw2.noalias() += d2 * cache.h1.transpose();
  gb2 += d2;
  const Eigen::VectorXd d1 = ((w2.transpose() * d2).array() * (1.0 - cache.h1.array().square())).matrix();
  gw1.noalias() += d1 * cache.input.transpose();
  gb1 += d1;
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {
  require(learning_rate > 0.0, ErrorCode::kConfigInvalid, "learning rate must be positive");
}

void Adam::step(std::span<double> theta, std::span<const double> grad) {
  require(theta.size() == m_.size() && grad.size() == m_.size(), ErrorCode::kLengthMismatch,
          "optimizer state does not match the parameter vector");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    theta[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  double ss = 0.0;
  for (double g : grad) ss += g * g;
  const double norm = std::sqrt(ss);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
  return norm;
}

}  // namespace fairmdp
