#include "rsmalab/nn.hpp"

#include <array>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "rsmalab/random.hpp"

namespace rsmalab {
namespace {

constexpr std::array<char, 8> kMagic{'R', 'S', 'M', 'A', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated network record");
  return v;
}

}  // namespace

DenseNet::DenseNet(std::vector<int> widths, std::uint64_t seed) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw std::invalid_argument("net: need at least input and output widths");
  Eigen::Index total = 0;
  for (size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] < 1 || widths_[l + 1] < 1) throw std::invalid_argument("net: widths must be >= 1");
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(widths_[l + 1]) * (widths_[l] + 1);
  }
  params_.resize(total);
  RandomStream rng(seed);
  for (size_t l = 0; l + 1 < widths_.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths_[l]));
    const Eigen::Index n = static_cast<Eigen::Index>(widths_[l + 1]) * (widths_[l] + 1);
    for (Eigen::Index i = 0; i < n; ++i) params_[offsets_[l] + i] = rng.uniform(-bound, bound);
  }
}

Eigen::Map<const DenseNet::RowMajor> DenseNet::weight(size_t layer) const {
  return {params_.data() + offsets_[layer], widths_[layer + 1], widths_[layer]};
}

Eigen::Map<const Vector> DenseNet::bias(size_t layer) const {
  const Eigen::Index start =
      offsets_[layer] + static_cast<Eigen::Index>(widths_[layer + 1]) * widths_[layer];
  return {params_.data() + start, widths_[layer + 1]};
}

void DenseNet::check_input(const Matrix& inputs) const {
  if (widths_.empty()) throw std::logic_error("net: not initialized");
  if (inputs.rows() != widths_.front()) throw std::invalid_argument("net: input size mismatch");
}

Matrix DenseNet::forward(const Matrix& inputs) const {
  check_input(inputs);
  Matrix a = inputs;
  const size_t layers = widths_.size() - 1;
  for (size_t l = 0; l < layers; ++l) {
    Matrix z = weight(l) * a;
    z.colwise() += bias(l);
    a = l + 1 < layers ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return a;
}

Matrix DenseNet::forward(const Matrix& inputs, Cache& cache) const {
  check_input(inputs);
  const size_t layers = widths_.size() - 1;
  cache.activations.resize(layers);
  cache.pre.resize(layers);
  cache.activations[0] = inputs;
  for (size_t l = 0; l < layers; ++l) {
    cache.pre[l].noalias() = weight(l) * cache.activations[l];
    cache.pre[l].colwise() += bias(l);
    if (l + 1 < layers) cache.activations[l + 1] = cache.pre[l].cwiseMax(0.0);
  }
  return cache.pre.back();
}

Vector DenseNet::backward(const Cache& cache, const Matrix& output_grad, Matrix* input_grad) const {
  const size_t layers = widths_.size() - 1;
  if (cache.pre.size() != layers || output_grad.rows() != widths_.back() ||
      output_grad.cols() != cache.pre.back().cols()) {
    throw std::invalid_argument("net: backward shape mismatch");
  }
  Vector grad(params_.size());
  Matrix delta = output_grad;
  for (size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    Eigen::Map<RowMajor> gw(grad.data() + offsets_[l], widths_[l + 1], widths_[l]);
    gw.noalias() = delta * cache.activations[l].transpose();
    Eigen::Map<Vector> gb(grad.data() + offsets_[l] + gw.size(), widths_[l + 1]);
    gb = delta.rowwise().sum();
    if (l > 0 || input_grad) {
      Matrix next = weight(l).transpose() * delta;
      delta = std::move(next);
    }
  }
  if (input_grad) *input_grad = std::move(delta);
  return grad;
}

Matrix DenseNet::input_gradient(const Cache& cache, const Matrix& output_grad) const {
  const size_t layers = widths_.size() - 1;
  if (cache.pre.size() != layers || output_grad.rows() != widths_.back() ||
      output_grad.cols() != cache.pre.back().cols()) {
    throw std::invalid_argument("net: backward shape mismatch");
  }
  Matrix delta = output_grad;
  for (size_t l = layers; l-- > 0;) {
    if (l + 1 < layers) delta = delta.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    Matrix next = weight(l).transpose() * delta;
    delta = std::move(next);
  }
  return delta;
}

void DenseNet::save(std::ostream& out) const {
  out.write(kMagic.data(), kMagic.size());
  write_raw(out, kVersion);
  write_raw(out, static_cast<std::uint32_t>(widths_.size()));
  for (int w : widths_) write_raw(out, static_cast<std::uint32_t>(w));
  write_raw(out, static_cast<std::uint64_t>(params_.size()));
  for (Eigen::Index i = 0; i < params_.size(); ++i) write_raw(out, params_[i]);
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

DenseNet DenseNet::load(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("checkpoint: not a network record");
  if (read_raw<std::uint32_t>(in) != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  const auto n_widths = read_raw<std::uint32_t>(in);
  if (n_widths < 2 || n_widths > 64) throw std::runtime_error("checkpoint: bad layer count");
  std::vector<int> widths;
  for (std::uint32_t i = 0; i < n_widths; ++i) widths.push_back(static_cast<int>(read_raw<std::uint32_t>(in)));
  DenseNet net(widths, 0);
  const auto count = read_raw<std::uint64_t>(in);
  if (count != static_cast<std::uint64_t>(net.params_.size())) {
    throw std::runtime_error("checkpoint: parameter count does not match widths");
  }
  for (Eigen::Index i = 0; i < net.params_.size(); ++i) net.params_[i] = read_raw<double>(in);
  return net;
}

Adam::Adam(Eigen::Index size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon),
      m_(Vector::Zero(size)), v_(Vector::Zero(size)) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("adam: learning rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("adam: decay rates must lie in [0, 1)");
  }
}

void Adam::step(Vector& params, const Vector& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("adam: shape mismatch");
  }
  ++steps_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

}  // namespace rsmalab
