#include "asadg/surrogate.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "asadg/error.hpp"
#include "asadg/rng.hpp"

namespace asadg::surrogate {

namespace {

Eigen::Index as_index(std::size_t n) { return static_cast<Eigen::Index>(n); }

void check_inputs(const MlpModel& m, const Eigen::MatrixXd& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != m.input_dim())
    throw Error(Errc::dimension_mismatch, "input has dimension " + std::to_string(inputs.rows()) +
                                              ", model expects " + std::to_string(m.input_dim()));
}

}  // namespace

void MlpConfig::validate(std::size_t train_size) const {
  if (input_dim == 0 || output_dim == 0) throw Error(Errc::invalid_argument, "network dimensions must be positive");
  if (hidden_sizes.empty()) throw Error(Errc::invalid_argument, "at least one hidden layer is required");
  for (std::size_t h : hidden_sizes)
    if (h == 0) throw Error(Errc::invalid_argument, "hidden layer sizes must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw Error(Errc::invalid_argument, "learning rate must be finite and non-negative");
  if (epochs == 0) throw Error(Errc::invalid_argument, "epochs must be positive");
  if (batch_size == 0) throw Error(Errc::invalid_argument, "batch size must be positive");
  if (train_size > 0 && batch_size > train_size)
    throw Error(Errc::invalid_argument, "batch size " + std::to_string(batch_size) + " exceeds the " +
                                            std::to_string(train_size) + " training samples");
}

nlohmann::ordered_json MlpConfig::to_json() const {
  return {{"input_dim", input_dim},   {"output_dim", output_dim}, {"hidden_sizes", hidden_sizes},
          {"learning_rate", learning_rate}, {"epochs", epochs}, {"batch_size", batch_size},
          {"seed", seed}};
}

MlpConfig MlpConfig::from_json(const nlohmann::json& j) {
  MlpConfig c;
  try {
    c.input_dim = j.value("input_dim", c.input_dim);
    c.output_dim = j.value("output_dim", c.output_dim);
    c.hidden_sizes = j.value("hidden_sizes", c.hidden_sizes);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format_error, std::string("network config: ") + e.what());
  }
  return c;
}

Dataset Dataset::from_rows(const std::vector<std::vector<double>>& inputs,
                           const std::vector<std::vector<double>>& outputs) {
  if (inputs.size() != outputs.size()) throw Error(Errc::dimension_mismatch, "input and output counts differ");
  Dataset d;
  if (inputs.empty()) return d;
  d.inputs.resize(as_index(inputs.front().size()), as_index(inputs.size()));
  d.outputs.resize(as_index(outputs.front().size()), as_index(outputs.size()));
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    if (inputs[s].size() != inputs.front().size() || outputs[s].size() != outputs.front().size())
      throw Error(Errc::dimension_mismatch, "ragged dataset at sample " + std::to_string(s));
    d.inputs.col(as_index(s)) = Eigen::Map<const Eigen::VectorXd>(inputs[s].data(), as_index(inputs[s].size()));
    d.outputs.col(as_index(s)) = Eigen::Map<const Eigen::VectorXd>(outputs[s].data(), as_index(outputs[s].size()));
  }
  return d;
}

MlpModel::MlpModel(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw Error(Errc::dimension_mismatch, "a model needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weights.rows() == 0 || layers_[l].weights.cols() == 0)
      throw Error(Errc::dimension_mismatch, "empty layer " + std::to_string(l));
    if (layers_[l].bias.size() != layers_[l].weights.rows())
      throw Error(Errc::dimension_mismatch, "bias length differs from layer " + std::to_string(l) + " fan-out");
    if (l > 0 && layers_[l].weights.cols() != layers_[l - 1].weights.rows())
      throw Error(Errc::dimension_mismatch, "layer " + std::to_string(l) + " does not chain to its predecessor");
  }
}

MlpModel MlpModel::initialize(const MlpConfig& config) {
  config.validate();
  CounterRng rng(config.seed);
  std::vector<std::size_t> sizes{config.input_dim};
  sizes.insert(sizes.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
  sizes.push_back(config.output_dim);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    Layer layer{Eigen::MatrixXd(as_index(sizes[l + 1]), as_index(sizes[l])), Eigen::VectorXd(as_index(sizes[l + 1]))};
    // Row-major fill order so the draw sequence matches the saved layout.
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = rng.uniform(-bound, bound);
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = rng.uniform(-bound, bound);
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers));
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return n;
}

Eigen::MatrixXd MlpModel::predict(const Eigen::MatrixXd& inputs) const {
  check_inputs(*this, inputs);
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weights * a;
    z.colwise() += layers_[l].bias;
    a = (l + 1 < layers_.size()) ? Eigen::MatrixXd(z.array().tanh()) : std::move(z);
  }
  return a;
}

std::vector<double> MlpModel::predict(std::span<const double> input) const {
  const Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(input.data(), as_index(input.size()));
  const Eigen::MatrixXd y = predict(x);
  return std::vector<double>(y.data(), y.data() + y.size());
}

nlohmann::ordered_json MlpModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "asadg-mlp";
  j["activation"] = {{"hidden", "tanh"}, {"output", "identity"}};
  auto& arr = j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : layers_) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    arr.push_back({{"rows", l.weights.rows()},
                   {"cols", l.weights.cols()},
                   {"weights", w},
                   {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
  }
  return j;
}

MlpModel MlpModel::from_json(const nlohmann::json& j) {
  std::vector<Layer> layers;
  try {
    if (j.value("format", std::string()) != "asadg-mlp") throw Error(Errc::format_error, "not a saved network");
    for (const auto& l : j.at("layers")) {
      const auto rows = l.at("rows").get<Eigen::Index>(), cols = l.at("cols").get<Eigen::Index>();
      const auto w = l.at("weights").get<std::vector<double>>();
      const auto b = l.at("bias").get<std::vector<double>>();
      if (rows <= 0 || cols <= 0 || static_cast<Eigen::Index>(w.size()) != rows * cols ||
          static_cast<Eigen::Index>(b.size()) != rows)
        throw Error(Errc::format_error, "layer arrays do not match the declared shape");
      Layer layer{Eigen::MatrixXd(rows, cols), Eigen::Map<const Eigen::VectorXd>(b.data(), rows)};
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = w[static_cast<std::size_t>(r * cols + c)];
      layers.push_back(std::move(layer));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format_error, std::string("saved network: ") + e.what());
  }
  try {
    return MlpModel(std::move(layers));
  } catch (const Error& e) {
    throw Error(Errc::format_error, e.what());
  }
}

void MlpModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_failure, "cannot open " + path.string());
  out << to_json().dump() << '\n';
  if (!out) throw Error(Errc::io_failure, "write failed for " + path.string());
}

MlpModel MlpModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::format_error, path.string() + ": " + e.what());
  }
  return from_json(j);
}

LossGradient loss_and_gradient(const MlpModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  check_inputs(model, inputs);
  if (static_cast<std::size_t>(targets.rows()) != model.output_dim() || targets.cols() != inputs.cols())
    throw Error(Errc::dimension_mismatch, "targets do not match the model output or the sample count");
  const auto& layers = model.layers();
  const std::size_t depth = layers.size();

  // activations[0] is the input; activations[l + 1] is the output of layer l.
  std::vector<Eigen::MatrixXd> activations;
  activations.reserve(depth + 1);
  activations.push_back(inputs);
  for (std::size_t l = 0; l < depth; ++l) {
    Eigen::MatrixXd z = layers[l].weights * activations.back();
    z.colwise() += layers[l].bias;
    if (l + 1 < depth) z = z.array().tanh();
    activations.push_back(std::move(z));
  }

  const Eigen::MatrixXd err = activations.back() - targets;
  const double count = static_cast<double>(err.size());
  LossGradient out;
  out.loss = err.cwiseAbs().sum() / count;
  out.gradient.resize(depth);
  Eigen::MatrixXd delta = err.unaryExpr([](double e) { return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0); }) / count;
  for (std::size_t l = depth; l-- > 0;) {
    out.gradient[l].weights = delta * activations[l].transpose();
    out.gradient[l].bias = delta.rowwise().sum();
    if (l > 0) {
      delta = (layers[l].weights.transpose() * delta).array() * (1.0 - activations[l].array().square());
    }
  }
  return out;
}

double mean_absolute_error(const MlpModel& model, const Dataset& data) {
  return (model.predict(data.inputs) - data.outputs).cwiseAbs().mean();
}

TrainResult train(const Dataset& data, const MlpConfig& config) {
  if (data.size() == 0) throw Error(Errc::invalid_argument, "training set is empty");
  config.validate(data.size());
  if (static_cast<std::size_t>(data.inputs.rows()) != config.input_dim ||
      static_cast<std::size_t>(data.outputs.rows()) != config.output_dim || data.outputs.cols() != data.inputs.cols())
    throw Error(Errc::dimension_mismatch, "dataset shape does not match the network config");

  TrainResult result{MlpModel::initialize(config), {}};
  auto& layers = result.model.layers();
  CounterRng rng(derive_seed(config.seed, 1));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Eigen::MatrixXd xb, yb;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      xb.resize(data.inputs.rows(), as_index(n));
      yb.resize(data.outputs.rows(), as_index(n));
      for (std::size_t k = 0; k < n; ++k) {
        xb.col(as_index(k)) = data.inputs.col(as_index(order[start + k]));
        yb.col(as_index(k)) = data.outputs.col(as_index(order[start + k]));
      }
      const LossGradient g = loss_and_gradient(result.model, xb, yb);
      if (!std::isfinite(g.loss))
        throw Error(Errc::non_finite_loss, "loss diverged in epoch " + std::to_string(epoch + 1) +
                                               "; the learning rate is too high for the data scale");
      epoch_loss += g.loss * static_cast<double>(n);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weights -= config.learning_rate * g.gradient[l].weights;
        layers[l].bias -= config.learning_rate * g.gradient[l].bias;
      }
    }
    epoch_loss /= static_cast<double>(order.size());
    result.loss_trace.push_back(epoch_loss);
  }
  for (const auto& l : layers)
    if (!l.weights.allFinite() || !l.bias.allFinite())
      throw Error(Errc::non_finite_loss, "weights diverged; the learning rate is too high for the data scale");
  return result;
}

nlohmann::ordered_json MnreReport::to_json() const {
  return {{"mnre", mnre},
          {"std", std},
          {"std_population", "per-component terms"},
          {"epsilon", epsilon},
          {"samples", samples},
          {"components", component_min.size()},
          {"excluded_components", excluded_components}};
}

MnreReport mnre(const Eigen::MatrixXd& predictions, const Eigen::MatrixXd& targets, double epsilon) {
  if (targets.cols() == 0) throw Error(Errc::empty_test_set, "test set is empty");
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw Error(Errc::dimension_mismatch, "predictions and targets differ in shape");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(Errc::invalid_argument, "epsilon must lie in (0, 1)");

  MnreReport rep;
  rep.epsilon = epsilon;
  rep.samples = static_cast<std::size_t>(targets.cols());
  const Eigen::Index m = targets.rows();
  rep.component_min.resize(static_cast<std::size_t>(m));
  rep.component_max.resize(static_cast<std::size_t>(m));
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double lo = targets.row(i).minCoeff(), hi = targets.row(i).maxCoeff();
    rep.component_min[static_cast<std::size_t>(i)] = lo;
    rep.component_max[static_cast<std::size_t>(i)] = hi;
    if (hi == lo)
      rep.excluded_components.push_back(static_cast<std::size_t>(i));
    else
      kept.push_back(i);
  }
  if (kept.empty()) return rep;

  std::vector<double> terms;
  terms.reserve(kept.size() * static_cast<std::size_t>(targets.cols()));
  double sum_d = 0.0;
  for (Eigen::Index s = 0; s < targets.cols(); ++s) {
    double d = 0.0;
    for (Eigen::Index i : kept) {
      const double lo = rep.component_min[static_cast<std::size_t>(i)];
      const double range = rep.component_max[static_cast<std::size_t>(i)] - lo;
      const double u = epsilon + (targets(i, s) - lo) / range;
      const double uh = epsilon + (predictions(i, s) - lo) / range;
      const double t = std::abs(uh - u) / std::abs(u);
      d += t;
      terms.push_back(t);
    }
    sum_d += d / static_cast<double>(kept.size());
  }
  rep.mnre = sum_d / static_cast<double>(targets.cols());
  const double mean_t = std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(terms.size());
  double var = 0.0;
  for (double t : terms) var += (t - mean_t) * (t - mean_t);
  rep.std = std::sqrt(var / static_cast<double>(terms.size()));
  return rep;
}

}  // namespace asadg::surrogate
