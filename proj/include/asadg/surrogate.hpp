#pragma once

// Fully connected regression network: tanh hidden layers, identity output,
// mean-absolute-error loss, plain mini-batch SGD.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace asadg::surrogate {

struct MlpConfig {
  std::size_t input_dim = 2;
  std::size_t output_dim = 1;
  std::vector<std::size_t> hidden_sizes{64, 512};
  double learning_rate = 0.01;
  std::size_t epochs = 300;
  std::size_t batch_size = 100;
  std::uint64_t seed = 0;

  /// Throws Error{invalid_argument}; train_size = 0 skips the batch-size bound.
  void validate(std::size_t train_size = 0) const;

  nlohmann::ordered_json to_json() const;
  static MlpConfig from_json(const nlohmann::json& j);
};

/// Samples are columns.
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd outputs;

  std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
  static Dataset from_rows(const std::vector<std::vector<double>>& inputs,
                           const std::vector<std::vector<double>>& outputs);
};

struct Layer {
  Eigen::MatrixXd weights;  // fan_out x fan_in
  Eigen::VectorXd bias;
};

class MlpModel {
 public:
  /// Seeded uniform weights and biases in +-1/sqrt(fan_in).
  static MlpModel initialize(const MlpConfig& config);
  /// Explicit layers; tanh follows every layer but the last. Throws Error{dimension_mismatch}.
  explicit MlpModel(std::vector<Layer> layers);

  std::size_t input_dim() const { return static_cast<std::size_t>(layers_.front().weights.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(layers_.back().weights.rows()); }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }
  std::size_t parameter_count() const;

  /// Throws Error{dimension_mismatch}.
  std::vector<double> predict(std::span<const double> input) const;
  Eigen::MatrixXd predict(const Eigen::MatrixXd& inputs) const;

  nlohmann::ordered_json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static MlpModel load(const std::filesystem::path& path);

 private:
  std::vector<Layer> layers_;
};

/// MAE over all samples and components, with its gradient (subgradient 0 at zero error).
struct LossGradient {
  double loss = 0.0;
  std::vector<Layer> gradient;
};
LossGradient loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

double mean_absolute_error(const MlpModel& model, const Dataset& data);

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_trace;  // per epoch, sample-weighted mean of the batch losses
};

/// Exactly config.epochs passes over seeded-shuffled mini-batches; the last batch may be short.
/// Throws Error{dimension_mismatch}, Error{invalid_argument}, Error{non_finite_loss}.
TrainResult train(const Dataset& data, const MlpConfig& config);

struct MnreReport {
  double mnre = 0.0;
  double std = 0.0;  // population std of the per-component terms over the whole set
  double epsilon = 0.1;
  std::vector<double> component_min;
  std::vector<double> component_max;
  std::vector<std::size_t> excluded_components;  // constant over the test targets
  std::size_t samples = 0;

  nlohmann::ordered_json to_json() const;
};

/// Normalizes both sets with the per-component range of the targets.
/// Throws Error{empty_test_set}, Error{dimension_mismatch}, Error{invalid_argument}.
MnreReport mnre(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets, double epsilon = 0.1);

}  // namespace asadg::surrogate
