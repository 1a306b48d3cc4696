#include "cbfmarl/marl/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace cbfmarl::marl {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("mlp: need input and output sizes");
  Eigen::Index total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw std::invalid_argument("mlp: layer sizes must be positive");
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[l + 1]) * (sizes_[l] + 1);
  }
  params_ = Eigen::VectorXd::Zero(total);
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t l) const {
  return {params_.data() + offsets_[l], sizes_[l + 1], sizes_[l]};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t l) const {
  return {params_.data() + offsets_[l] + static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l], sizes_[l + 1]};
}

void Mlp::initialize(std::mt19937_64& rng, double output_gain) {
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const double limit = std::sqrt(6.0 / (sizes_[l] + sizes_[l + 1])) * (l + 2 == sizes_.size() ? output_gain : 1.0);
    std::uniform_real_distribution<double> dist(-limit, limit);
    const Eigen::Index n = static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l];
    for (Eigen::Index k = 0; k < n; ++k) params_(offsets_[l] + k) = dist(rng);
    params_.segment(offsets_[l] + n, sizes_[l + 1]).setZero();
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
  if (x.rows() != sizes_.front()) throw std::invalid_argument("mlp: input size mismatch");
  if (cache) cache->inputs.clear();
  Eigen::MatrixXd a = x;
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    if (cache) cache->inputs.push_back(std::move(a));
    if (l + 1 < layers) z = z.array().tanh().matrix();
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& d_out) const {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = d_out;
  for (std::size_t l = sizes_.size() - 1; l-- > 0;) {
    const Eigen::MatrixXd& in = cache.inputs[l];
    const Eigen::Index n = static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l];
    Eigen::Map<Eigen::MatrixXd>(grad.data() + offsets_[l], sizes_[l + 1], sizes_[l]).noalias() =
        delta * in.transpose();
    grad.segment(offsets_[l] + n, sizes_[l + 1]) = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = weight(l).transpose() * delta;
      delta = (back.array() * (1.0 - in.array().square())).matrix();
    }
  }
  return grad;
}

}  // namespace cbfmarl::marl
