#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "fairmdp/rng.hpp"

namespace fairmdp {

/// in -> hidden -> hidden -> out with tanh hidden units and a linear output layer.
/// Parameters live in one flat vector: W1, b1, W2, b2, W3, b3 (column-major weights).
class Mlp {
 public:
  struct Cache {
    Eigen::VectorXd input;
    Eigen::VectorXd h1;
    Eigen::VectorXd h2;
  };

  Mlp() = default;
  Mlp(int inputs, int hidden, int outputs);

  int inputs() const noexcept { return inputs_; }
  int hidden() const noexcept { return hidden_; }
  int outputs() const noexcept { return outputs_; }
  std::size_t num_parameters() const noexcept { return theta_.size(); }

  std::span<double> parameters() noexcept { return theta_; }
  std::span<const double> parameters() const noexcept { return theta_; }

  /// Orthogonal weights (gain sqrt(2) on hidden layers, output_gain on the last),
  /// zero biases.
  void initialize(Rng& rng, double output_gain);

  Eigen::VectorXd forward(const Eigen::VectorXd& x, Cache* cache = nullptr) const;

  /// Adds dL/dtheta to grad given dL/dy for the cached forward pass.
  void backward(const Cache& cache, const Eigen::VectorXd& dy, std::span<double> grad) const;

  /// Offset of the output-layer bias inside the parameter vector.
  std::size_t output_bias_offset() const noexcept;

 private:
  using MatMap = Eigen::Map<const Eigen::MatrixXd>;
  using VecMap = Eigen::Map<const Eigen::VectorXd>;

  int inputs_ = 0;
  int hidden_ = 0;
  int outputs_ = 0;
  std::vector<double> theta_;
  std::size_t off_w1_ = 0, off_b1_ = 0, off_w2_ = 0, off_b2_ = 0, off_w3_ = 0, off_b3_ = 0;
};

/// Adam with bias correction.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<double> theta, std::span<const double> grad);
  double learning_rate() const noexcept { return lr_; }

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Scales grad in place so its Euclidean norm is at most max_norm; returns the
/// original norm.
double clip_grad_norm(std::span<double> grad, double max_norm);

}  // namespace fairmdp
