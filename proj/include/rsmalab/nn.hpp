#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

#include "rsmalab/linalg.hpp"

namespace rsmalab {

/// Fully connected network: ReLU on hidden layers, linear output.
/// Parameters live in one flat vector, layer by layer: W (out x in, row-major)
/// followed by b. Batches are passed as columns.
class DenseNet {
 public:
  struct Cache {
    std::vector<Matrix> activations;  // input, then post-ReLU hidden outputs
    std::vector<Matrix> pre;          // pre-activation of every layer
  };

  DenseNet() = default;
  /// `widths` lists input, hidden and output sizes. Parameters are drawn from
  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) using `seed`.
  DenseNet(std::vector<int> widths, std::uint64_t seed);

  [[nodiscard]] const std::vector<int>& widths() const { return widths_; }
  [[nodiscard]] int input_size() const { return widths_.front(); }
  [[nodiscard]] int output_size() const { return widths_.back(); }
  [[nodiscard]] Eigen::Index parameter_count() const { return params_.size(); }

  Vector& parameters() { return params_; }
  [[nodiscard]] const Vector& parameters() const { return params_; }

  [[nodiscard]] Matrix forward(const Matrix& inputs) const;
  Matrix forward(const Matrix& inputs, Cache& cache) const;

  /// Gradient of sum over the batch of <output_grad, output> with respect to the
  /// parameters. When `input_grad` is given it receives d/d(inputs).
  Vector backward(const Cache& cache, const Matrix& output_grad, Matrix* input_grad = nullptr) const;

  /// d/d(inputs) only; skips the parameter gradient.
  [[nodiscard]] Matrix input_gradient(const Cache& cache, const Matrix& output_grad) const;

  void save(std::ostream& out) const;
  static DenseNet load(std::istream& in);

 private:
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  [[nodiscard]] Eigen::Map<const RowMajor> weight(size_t layer) const;
  [[nodiscard]] Eigen::Map<const Vector> bias(size_t layer) const;
  void check_input(const Matrix& inputs) const;

  std::vector<int> widths_;
  std::vector<Eigen::Index> offsets_;  // start of W for each layer
  Vector params_;
};

/// Adam with bias correction.
class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);

  void step(Vector& params, const Vector& grad);

  [[nodiscard]] std::int64_t steps() const { return steps_; }
  [[nodiscard]] double learning_rate() const { return lr_; }
  [[nodiscard]] const Vector& first_moment() const { return m_; }
  [[nodiscard]] const Vector& second_moment() const { return v_; }

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::int64_t steps_ = 0;
  Vector m_;
  Vector v_;
};

}  // namespace rsmalab
