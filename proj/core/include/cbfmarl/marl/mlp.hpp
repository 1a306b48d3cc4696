#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

namespace cbfmarl::marl {

/// Fully connected network with tanh hidden layers and a linear output. All
/// weights live in one flat vector: per layer the column-major weight matrix
/// (out x in) followed by the bias.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::MatrixXd> inputs;  ///< input of every layer
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  Eigen::Index num_params() const { return params_.size(); }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  /// Uniform Glorot initialization; the output layer is scaled by `output_gain`.
  void initialize(std::mt19937_64& rng, double output_gain);

  /// `x` is (input_size x batch). Fills `cache` when given.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;
  /// Gradient of sum(d_out .* output) with respect to the parameters.
  Eigen::VectorXd backward(const Cache& cache, const Eigen::MatrixXd& d_out) const;

 private:
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd params_;
};

}  // namespace cbfmarl::marl
