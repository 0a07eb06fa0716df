#ifndef MERGESIM_MLP_HPP_
#define MERGESIM_MLP_HPP_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace mergesim::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Fully connected network: tanh on hidden layers, linear output.
// Layer l maps sizes[l] -> sizes[l+1]; weights are (out x in).
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<int> sizes, std::uint64_t seed, double output_gain = 1.0);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t layers() const { return weights_.size(); }
  std::size_t parameter_count() const;

  const Matrix& weight(std::size_t l) const { return weights_[l]; }
  const Vector& bias(std::size_t l) const { return biases_[l]; }

  // Flat parameter view: per layer, row-major weights then bias.
  Vector flat() const;
  void set_flat(const Vector& params);

 private:
  std::vector<int> sizes_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

// Rows per work unit of the parallel kernels. Fixed so that reductions are
// summed in the same order regardless of the thread count.
inline constexpr int kBlockRows = 32;

// Batched forward pass, one sample per row (OpenMP over row blocks).
Matrix forward(const Mlp& net, const Matrix& inputs);

// Gradient of sum_rows <out_grad_row, f(x_row)> w.r.t. the flat parameters.
Vector backward(const Mlp& net, const Matrix& inputs, const Matrix& out_grad);

// Single-threaded per-sample reference implementations of the kernels above.
Matrix forward_reference(const Mlp& net, const Matrix& inputs);
Vector backward_reference(const Mlp& net, const Matrix& inputs, const Matrix& out_grad);

// Scales `grad` in place so that its L2 norm is at most max_norm; returns
// the norm before clipping.
double clip_grad_norm(Vector& grad, double max_norm);

class Adam {
 public:
  explicit Adam(std::size_t n = 0, double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  // params -= lr * m_hat / (sqrt(v_hat) + eps)
  void step(Vector& params, const Vector& grad);
  double learning_rate() const { return lr_; }
  long steps() const { return t_; }

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long t_ = 0;
  Vector m_;
  Vector v_;
};

}  // namespace mergesim::nn

#endif  // MERGESIM_MLP_HPP_
