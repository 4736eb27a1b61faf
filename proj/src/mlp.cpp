#include "fedxfer/mlp.hpp"

#include <cmath>

#include <json.hpp>

#include "fedxfer/error.hpp"
#include "fedxfer/rng.hpp"

namespace fedxfer {

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::tanh_act;
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  fail(ErrorCode::config, "unknown activation '" + name + "'");
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::tanh_act: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "identity";
}

std::size_t MlpModel::param_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.data.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

bool MlpModel::all_finite() const {
  for (const auto& w : weights) {
    if (!w.all_finite()) return false;
  }
  for (const auto& b : biases) {
    for (double v : b) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ParamGrads ParamGrads::zeros_like(const MlpModel& m) {
  ParamGrads g;
  g.weights.reserve(m.weights.size());
  g.biases.reserve(m.biases.size());
  for (const auto& w : m.weights) g.weights.emplace_back(w.rows, w.cols);
  for (const auto& b : m.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

void ParamGrads::add_scaled(const ParamGrads& other, double scale) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].data.size(); ++i) {
      weights[l].data[i] += scale * other.weights[l].data[i];
    }
    for (std::size_t i = 0; i < biases[l].size(); ++i) {
      biases[l][i] += scale * other.biases[l][i];
    }
  }
}

bool ParamGrads::all_finite() const {
  for (const auto& w : weights) {
    if (!w.all_finite()) return false;
  }
  for (const auto& b : biases) {
    for (double v : b) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

MlpModel init_model(const std::vector<std::size_t>& layer_dims, Activation hidden,
                    std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    fail(ErrorCode::config, "init_model: need at least [input, output] dims");
  }
  for (std::size_t d : layer_dims) {
    if (d < 1) fail(ErrorCode::config, "init_model: zero-width layer");
  }
  MlpModel m;
  m.layer_dims = layer_dims;
  m.hidden_activation = hidden;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const std::size_t fan_in = layer_dims[l];
    const std::size_t fan_out = layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_in, fan_out);
    for (double& v : w.data) v = rng.uniform(-bound, bound);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(fan_out, 0.0);
  }
  return m;
}

namespace {

void apply_activation(Matrix& a, Activation act) {
  switch (act) {
    case Activation::identity:
      break;
    case Activation::tanh_act:
      for (double& v : a.data) v = std::tanh(v);
      break;
    case Activation::relu:
      for (double& v : a.data) v = v > 0.0 ? v : 0.0;
      break;
  }
}

// Derivative expressed through the post-activation value.
double activation_grad(double activated, Activation act) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::tanh_act: return 1.0 - activated * activated;
    case Activation::relu: return activated > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

Matrix affine(const Matrix& x, const Matrix& w, const std::vector<double>& b) {
  Matrix out = matmul(x, w);
  for (std::size_t i = 0; i < out.rows; ++i) {
    double* row = out.row_ptr(i);
    for (std::size_t j = 0; j < out.cols; ++j) row[j] += b[j];
  }
  return out;
}

}  // namespace

Matrix forward(const MlpModel& model, const Matrix& x, ForwardCache* cache) {
  if (x.cols != model.input_dim()) {
    fail(ErrorCode::dimension_mismatch,
         "forward: batch has " + std::to_string(x.cols) + " features, model expects " +
             std::to_string(model.input_dim()));
  }
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(x);
  }
  Matrix a = x;
  const std::size_t last = model.num_layers() - 1;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    a = affine(a, model.weights[l], model.biases[l]);
    if (l != last) apply_activation(a, model.hidden_activation);
    if (cache) cache->activations.push_back(a);
  }
  return a;
}

BackwardResult backward(const MlpModel& model, const ForwardCache& cache,
                        const Matrix& upstream) {
  const std::size_t layers = model.num_layers();
  if (cache.activations.size() != layers + 1) {
    fail(ErrorCode::numeric, "backward: cache does not match model depth");
  }
  if (upstream.rows != cache.batch_size() || upstream.cols != model.output_dim()) {
    fail(ErrorCode::numeric,
         "backward: upstream " + upstream.shape_str() + " does not match cached batch");
  }

  BackwardResult res;
  res.grads = ParamGrads::zeros_like(model);

  Matrix delta = upstream;  // d(loss)/d(activations[l+1])
  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& a_prev = cache.activations[l];
    // dW = a_prev^T . delta, db = column sums of delta (batch sums).
    res.grads.weights[l] = matmul(transpose(a_prev), delta);
    auto& db = res.grads.biases[l];
    for (std::size_t i = 0; i < delta.rows; ++i) {
      const double* row = delta.row_ptr(i);
      for (std::size_t j = 0; j < delta.cols; ++j) db[j] += row[j];
    }
    Matrix prev_delta = matmul(delta, transpose(model.weights[l]));
    if (l > 0) {
      // a_prev is post-activation output of layer l-1.
      for (std::size_t i = 0; i < prev_delta.data.size(); ++i) {
        prev_delta.data[i] *= activation_grad(a_prev.data[i], model.hidden_activation);
      }
    }
    delta = std::move(prev_delta);
  }
  res.input_grad = std::move(delta);
  return res;
}

void sgd_step(MlpModel& model, const ParamGrads& grads, double learning_rate) {
  if (grads.weights.size() != model.weights.size()) {
    fail(ErrorCode::dimension_mismatch, "sgd_step: gradient/model layer count mismatch");
  }
  if (!grads.all_finite()) {
    fail(ErrorCode::numeric, "sgd_step: non-finite gradient entry");
  }
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    if (!model.weights[l].same_shape(grads.weights[l]) ||
        model.biases[l].size() != grads.biases[l].size()) {
      fail(ErrorCode::dimension_mismatch, "sgd_step: gradient shape mismatch at layer " +
                                              std::to_string(l));
    }
    for (std::size_t i = 0; i < model.weights[l].data.size(); ++i) {
      model.weights[l].data[i] -= learning_rate * grads.weights[l].data[i];
    }
    for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
      model.biases[l][i] -= learning_rate * grads.biases[l][i];
    }
  }
}

std::string model_to_json(const MlpModel& model) {
  nlohmann::json j;
  j["layer_dims"] = model.layer_dims;
  j["hidden_activation"] = activation_name(model.hidden_activation);
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& w : model.weights) weights.push_back(w.data);
  j["weights"] = std::move(weights);
  j["biases"] = model.biases;
  return j.dump();
}

MlpModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::load, std::string("model json: ") + e.what());
  }
  MlpModel m;
  try {
    m.layer_dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    m.hidden_activation = activation_from_name(j.at("hidden_activation").get<std::string>());
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (m.layer_dims.size() < 2 || weights.size() + 1 != m.layer_dims.size() ||
        biases.size() != weights.size()) {
      fail(ErrorCode::load, "model json: inconsistent layer structure");
    }
    for (std::size_t l = 0; l + 1 < m.layer_dims.size(); ++l) {
      Matrix w(m.layer_dims[l], m.layer_dims[l + 1]);
      w.data = weights.at(l).get<std::vector<double>>();
      if (w.data.size() != w.rows * w.cols) {
        fail(ErrorCode::load, "model json: weight size mismatch at layer " + std::to_string(l));
      }
      m.weights.push_back(std::move(w));
      auto b = biases.at(l).get<std::vector<double>>();
      if (b.size() != m.layer_dims[l + 1]) {
        fail(ErrorCode::load, "model json: bias size mismatch at layer " + std::to_string(l));
      }
      m.biases.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::load, std::string("model json: ") + e.what());
  }
  if (!m.all_finite()) fail(ErrorCode::load, "model json: non-finite parameter");
  return m;
}

}  // namespace fedxfer
