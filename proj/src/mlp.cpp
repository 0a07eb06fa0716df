#include "mergesim/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mergesim::nn {

Mlp::Mlp(std::vector<int> sizes, std::uint64_t seed, double output_gain) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least two layer sizes");
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    if (in <= 0 || out <= 0) throw std::invalid_argument("Mlp layer sizes must be positive");
    double limit = std::sqrt(6.0 / (in + out));
    if (l + 2 == sizes_.size()) limit *= output_gain;
    std::uniform_real_distribution<double> dist(-limit, limit);
    Matrix w(out, in);
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) w(r, c) = dist(rng);
    }
    weights_.push_back(std::move(w));
    biases_.push_back(Vector::Zero(out));
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

Vector Mlp::flat() const {
  Vector out(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    out.segment(at, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
    at += w.size();
    out.segment(at, biases_[l].size()) = biases_[l];
    at += biases_[l].size();
  }
  return out;
}

void Mlp::set_flat(const Vector& params) {
  if (static_cast<std::size_t>(params.size()) != parameter_count()) {
    throw std::invalid_argument("Mlp::set_flat: parameter count mismatch");
  }
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    auto& w = weights_[l];
    Eigen::Map<Vector>(w.data(), w.size()) = params.segment(at, w.size());
    at += w.size();
    biases_[l] = params.segment(at, biases_[l].size());
    at += biases_[l].size();
  }
}

namespace {

int block_count(Eigen::Index rows) {
  return static_cast<int>((rows + kBlockRows - 1) / kBlockRows);
}

void check_input(const Mlp& net, const Matrix& inputs) {
  if (inputs.cols() != net.input_size()) {
    throw std::invalid_argument("Mlp: input width does not match the first layer");
  }
}

// Activations of every layer for one block; acts[0] is the input.
std::vector<Matrix> forward_block(const Mlp& net, const Matrix& x) {
  std::vector<Matrix> acts;
  acts.reserve(net.layers() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < net.layers(); ++l) {
    Matrix z = acts.back() * net.weight(l).transpose();
    z.rowwise() += net.bias(l).transpose();
    if (l + 1 < net.layers()) z = z.array().tanh().matrix();
    acts.push_back(std::move(z));
  }
  return acts;
}

}  // namespace

Matrix forward(const Mlp& net, const Matrix& inputs) {
  check_input(net, inputs);
  const Eigen::Index rows = inputs.rows();
  Matrix out(rows, net.output_size());
  const int blocks = block_count(rows);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    const Eigen::Index start = static_cast<Eigen::Index>(b) * kBlockRows;
    const Eigen::Index n = std::min<Eigen::Index>(kBlockRows, rows - start);
    auto acts = forward_block(net, inputs.middleRows(start, n));
    out.middleRows(start, n) = acts.back();
  }
  return out;
}

Vector backward(const Mlp& net, const Matrix& inputs, const Matrix& out_grad) {
  check_input(net, inputs);
  if (out_grad.rows() != inputs.rows() || out_grad.cols() != net.output_size()) {
    throw std::invalid_argument("Mlp::backward: output gradient shape mismatch");
  }
  const Eigen::Index rows = inputs.rows();
  const int blocks = block_count(rows);
  const auto n_params = static_cast<Eigen::Index>(net.parameter_count());
  std::vector<Vector> partial(static_cast<std::size_t>(blocks), Vector::Zero(n_params));

#pragma omp parallel for schedule(static)
  for (int b = 0; b < blocks; ++b) {
    const Eigen::Index start = static_cast<Eigen::Index>(b) * kBlockRows;
    const Eigen::Index n = std::min<Eigen::Index>(kBlockRows, rows - start);
    const auto acts = forward_block(net, inputs.middleRows(start, n));
    Vector& g = partial[static_cast<std::size_t>(b)];

    // Offsets of each layer inside the flat vector.
    std::vector<Eigen::Index> offset(net.layers());
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < net.layers(); ++l) {
      offset[l] = at;
      at += net.weight(l).size() + net.bias(l).size();
    }

    Matrix delta = out_grad.middleRows(start, n);
    for (std::size_t l = net.layers(); l-- > 0;) {
      const Matrix& a_prev = acts[l];
      const Matrix dw = delta.transpose() * a_prev;
      g.segment(offset[l], dw.size()) = Eigen::Map<const Vector>(dw.data(), dw.size());
      g.segment(offset[l] + dw.size(), net.bias(l).size()) = delta.colwise().sum().transpose();
      if (l == 0) break;
      Matrix back = delta * net.weight(l);
      delta = back.array() * (1.0 - a_prev.array().square());
    }
  }

  Vector total = Vector::Zero(n_params);
  for (const auto& p : partial) total += p;
  return total;
}

Matrix forward_reference(const Mlp& net, const Matrix& inputs) {
  check_input(net, inputs);
  Matrix out(inputs.rows(), net.output_size());
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    std::vector<double> a(inputs.row(r).data(), inputs.row(r).data() + inputs.cols());
    for (std::size_t l = 0; l < net.layers(); ++l) {
      const Matrix& w = net.weight(l);
      std::vector<double> z(static_cast<std::size_t>(w.rows()));
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        double s = net.bias(l)(i);
        for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * a[static_cast<std::size_t>(j)];
        z[static_cast<std::size_t>(i)] = l + 1 < net.layers() ? std::tanh(s) : s;
      }
      a = std::move(z);
    }
    for (Eigen::Index c = 0; c < out.cols(); ++c) out(r, c) = a[static_cast<std::size_t>(c)];
  }
  return out;
}

Vector backward_reference(const Mlp& net, const Matrix& inputs, const Matrix& out_grad) {
  check_input(net, inputs);
  Vector total = Vector::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  std::vector<Eigen::Index> offset(net.layers());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < net.layers(); ++l) {
    offset[l] = at;
    at += net.weight(l).size() + net.bias(l).size();
  }
  for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
    std::vector<std::vector<double>> acts;
    acts.emplace_back(inputs.row(r).data(), inputs.row(r).data() + inputs.cols());
    for (std::size_t l = 0; l < net.layers(); ++l) {
      const Matrix& w = net.weight(l);
      std::vector<double> z(static_cast<std::size_t>(w.rows()));
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        double s = net.bias(l)(i);
        for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * acts.back()[static_cast<std::size_t>(j)];
        z[static_cast<std::size_t>(i)] = l + 1 < net.layers() ? std::tanh(s) : s;
      }
      acts.push_back(std::move(z));
    }
    std::vector<double> delta(out_grad.row(r).data(), out_grad.row(r).data() + out_grad.cols());
    for (std::size_t l = net.layers(); l-- > 0;) {
      const Matrix& w = net.weight(l);
      const auto& a_prev = acts[l];
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        const double d = delta[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
          total(offset[l] + i * w.cols() + j) += d * a_prev[static_cast<std::size_t>(j)];
        }
        total(offset[l] + w.size() + i) += d;
      }
      if (l == 0) break;
      std::vector<double> back(static_cast<std::size_t>(w.cols()), 0.0);
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < w.rows(); ++i) s += delta[static_cast<std::size_t>(i)] * w(i, j);
        const double a = a_prev[static_cast<std::size_t>(j)];
        back[static_cast<std::size_t>(j)] = s * (1.0 - a * a);
      }
      delta = std::move(back);
    }
  }
  return total;
}

double clip_grad_norm(Vector& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
  return norm;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(Vector::Zero(static_cast<Eigen::Index>(n))), v_(Vector::Zero(static_cast<Eigen::Index>(n))) {}

void Adam::step(Vector& params, const Vector& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("Adam::step: size mismatch");
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace mergesim::nn
