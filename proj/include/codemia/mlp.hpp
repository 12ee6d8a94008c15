// Copyright 2026 The Codemia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CODEMIA_MLP_HPP_
#define CODEMIA_MLP_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "codemia/corpus.hpp"
#include "codemia/error.hpp"
#include "codemia/jsonio.hpp"
#include "codemia/rng.hpp"

namespace codemia::mlp {

struct MlpConfig {
  int input_dim = 27;
  std::vector<int> hidden_dims{512, 512, 512};
  int output_dim = 2;
  double dropout_rate = 0.1;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  int epochs = 25;
  int batch_size = 4;
  uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void Validate() const {
    Require(input_dim >= 1, "input_dim must be >= 1");
    for (int h : hidden_dims) Require(h >= 1, "hidden sizes must be >= 1");
    Require(output_dim == 2, "output_dim must be 2");
    Require(dropout_rate >= 0.0 && dropout_rate < 1.0,
            "dropout_rate must lie in [0, 1)");
    Require(learning_rate > 0.0, "learning_rate must be > 0");
    Require(weight_decay >= 0.0, "weight_decay must be >= 0");
    Require(epochs >= 0, "epochs must be >= 0");
    Require(batch_size >= 1, "batch_size must be >= 1");
  }

  Json ToJson() const {
    return Json{{"input_dim", input_dim},         {"hidden_dims", hidden_dims},
                {"output_dim", output_dim},       {"dropout_rate", dropout_rate},
                {"learning_rate", learning_rate}, {"weight_decay", weight_decay},
                {"epochs", epochs},               {"batch_size", batch_size},
                {"seed", seed},                   {"beta1", beta1},
                {"beta2", beta2},                 {"epsilon", epsilon}};
  }

  // Missing keys keep their defaults.
  static MlpConfig FromJson(const Json& j, const std::string& where) {
    MlpConfig c;
    auto opt = [&](const char* key, auto& field) {
      if (j.contains(key)) {
        field = Field<std::decay_t<decltype(field)>>(j, key, where);
      }
    };
    opt("input_dim", c.input_dim);
    opt("hidden_dims", c.hidden_dims);
    opt("output_dim", c.output_dim);
    opt("dropout_rate", c.dropout_rate);
    opt("learning_rate", c.learning_rate);
    opt("weight_decay", c.weight_decay);
    opt("epochs", c.epochs);
    opt("batch_size", c.batch_size);
    opt("seed", c.seed);
    opt("beta1", c.beta1);
    opt("beta2", c.beta2);
    opt("epsilon", c.epsilon);
    c.Validate();
    return c;
  }
};

// Dense layer y = W x + b with W stored row-major, rows = outputs.
struct Layer {
  int rows = 0;
  int cols = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  bool operator==(const Layer&) const = default;
};

struct MlpModel {
  MlpConfig config;
  std::vector<Layer> layers;  // hidden layers followed by the output layer
};

using Gradients = std::vector<Layer>;

inline MlpModel Init(const MlpConfig& config) {
  config.Validate();
  MlpModel model;
  model.config = config;
  Rng rng(DeriveSeed(config.seed, "init"));
  int in = config.input_dim;
  std::vector<int> outs = config.hidden_dims;
  outs.push_back(config.output_dim);
  for (int out : outs) {
    Layer layer;
    layer.rows = out;
    layer.cols = in;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    layer.weights.resize(static_cast<size_t>(out) * in);
    for (double& w : layer.weights) w = rng.Uniform(-bound, bound);
    layer.biases.assign(out, 0.0);
    model.layers.push_back(std::move(layer));
    in = out;
  }
  return model;
}

// Activations kept for the backward pass. inputs[l] feeds layer l; masks[l]
// is the inverted-dropout multiplier applied to hidden layer l's output.
struct ForwardCache {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> masks;
  std::array<double, 2> logits{};
};

inline void CheckInput(const MlpModel& model, std::span<const double> x) {
  if (x.size() != static_cast<size_t>(model.config.input_dim)) {
    Fail(ErrorKind::kValidation,
         "feature vector has " + std::to_string(x.size()) +
             " entries, model expects " + std::to_string(model.config.input_dim));
  }
  for (double v : x) Require(std::isfinite(v), "feature vector has a non-finite entry");
}

// Dropout is active iff `dropout_rng` is non-null and the rate is positive.
inline ForwardCache Forward(const MlpModel& model, std::span<const double> x,
                            Rng* dropout_rng = nullptr) {
  CheckInput(model, x);
  const double rate = model.config.dropout_rate;
  const bool drop = dropout_rng != nullptr && rate > 0.0;
  ForwardCache cache;
  std::vector<double> h(x.begin(), x.end());
  const size_t n = model.layers.size();
  for (size_t l = 0; l < n; ++l) {
    const Layer& layer = model.layers[l];
    std::vector<double> z(layer.biases);
    for (int r = 0; r < layer.rows; ++r) {
      const double* w = &layer.weights[static_cast<size_t>(r) * layer.cols];
      double acc = 0.0;
      for (int c = 0; c < layer.cols; ++c) acc += w[c] * h[c];
      z[r] += acc;
    }
    cache.inputs.push_back(std::move(h));
    if (l + 1 == n) {
      cache.logits = {z[0], z[1]};
      cache.pre.push_back(std::move(z));
      break;
    }
    std::vector<double> mask(layer.rows, 1.0);
    if (drop) {
      const double keep = 1.0 / (1.0 - rate);
      for (double& m : mask) m = dropout_rng->Bernoulli(rate) ? 0.0 : keep;
    }
    h.assign(layer.rows, 0.0);
    for (int r = 0; r < layer.rows; ++r) h[r] = std::max(0.0, z[r]) * mask[r];
    cache.pre.push_back(std::move(z));
    cache.masks.push_back(std::move(mask));
  }
  return cache;
}

inline std::array<double, 2> Softmax(std::array<double, 2> z) {
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m);
  const double e1 = std::exp(z[1] - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

// -log softmax(z)[label], computed stably.
inline double CrossEntropy(std::array<double, 2> z, int label) {
  const double m = std::max(z[0], z[1]);
  const double lse = m + std::log(std::exp(z[0] - m) + std::exp(z[1] - m));
  return lse - z[label];
}

inline Gradients ZeroGradients(const MlpModel& model) {
  Gradients g;
  for (const Layer& l : model.layers) {
    g.push_back({l.rows, l.cols, std::vector<double>(l.weights.size(), 0.0),
                 std::vector<double>(l.biases.size(), 0.0)});
  }
  return g;
}

// Adds d(CE)/d(params) * scale for one example to `grads`.
inline void Backward(const MlpModel& model, const ForwardCache& cache, int label,
                     double scale, Gradients& grads) {
  const std::array<double, 2> p = Softmax(cache.logits);
  std::vector<double> delta{p[0] * scale, p[1] * scale};
  delta[label] -= scale;
  for (size_t l = model.layers.size(); l-- > 0;) {
    const Layer& layer = model.layers[l];
    Layer& g = grads[l];
    const std::vector<double>& in = cache.inputs[l];
    for (int r = 0; r < layer.rows; ++r) {
      g.biases[r] += delta[r];
      double* gw = &g.weights[static_cast<size_t>(r) * layer.cols];
      for (int c = 0; c < layer.cols; ++c) gw[c] += delta[r] * in[c];
    }
    if (l == 0) break;
    // Back through the previous hidden layer's ReLU and dropout.
    std::vector<double> next(layer.cols, 0.0);
    for (int r = 0; r < layer.rows; ++r) {
      const double* w = &layer.weights[static_cast<size_t>(r) * layer.cols];
      for (int c = 0; c < layer.cols; ++c) next[c] += w[c] * delta[r];
    }
    const std::vector<double>& z = cache.pre[l - 1];
    const std::vector<double>& mask = cache.masks[l - 1];
    for (int c = 0; c < layer.cols; ++c) {
      next[c] = z[c] > 0.0 ? next[c] * mask[c] : 0.0;
    }
    delta = std::move(next);
  }
}

inline int LabelIndex(Membership m) { return m == Membership::kMember ? 1 : 0; }

// Mean cross-entropy over the batch and its gradient, dropout disabled.
inline double LossAndGradients(const MlpModel& model,
                               const std::vector<std::vector<double>>& xs,
                               const std::vector<Membership>& ys,
                               Gradients* grads) {
  Require(!xs.empty() && xs.size() == ys.size(), "batch is empty or mislabeled");
  if (grads != nullptr) *grads = ZeroGradients(model);
  const double scale = 1.0 / static_cast<double>(xs.size());
  double loss = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const ForwardCache cache = Forward(model, xs[i]);
    loss += CrossEntropy(cache.logits, LabelIndex(ys[i])) * scale;
    if (grads != nullptr) Backward(model, cache, LabelIndex(ys[i]), scale, *grads);
  }
  return loss;
}

inline double MeanLoss(const MlpModel& model,
                       const std::vector<std::vector<double>>& xs,
                       const std::vector<Membership>& ys) {
  return LossAndGradients(model, xs, ys, nullptr);
}

// Minibatch Adam on softmax cross-entropy. Returns the mean training loss of
// each epoch (computed with dropout active, as seen by the optimizer).
inline std::vector<double> Train(MlpModel& model,
                                 const std::vector<std::vector<double>>& xs,
                                 const std::vector<Membership>& ys) {
  const MlpConfig& cfg = model.config;
  cfg.Validate();
  Require(!xs.empty(), "training set is empty");
  Require(xs.size() == ys.size(), "training features and labels differ in count");
  const bool has_member = std::count(ys.begin(), ys.end(), Membership::kMember) > 0;
  const bool has_nonmember =
      std::count(ys.begin(), ys.end(), Membership::kNonmember) > 0;
  Require(has_member && has_nonmember,
          "training set needs both member and nonmember samples");
  for (const auto& x : xs) CheckInput(model, x);

  Gradients m = ZeroGradients(model);
  Gradients v = ZeroGradients(model);
  Rng order_rng(DeriveSeed(cfg.seed, "shuffle"));
  Rng dropout_rng(DeriveSeed(cfg.seed, "dropout"));
  std::vector<size_t> order(xs.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<double> history;
  int64_t step = 0;

  auto update = [&](std::vector<double>& param, std::vector<double>& g,
                    std::vector<double>& m1, std::vector<double>& m2) {
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (size_t i = 0; i < param.size(); ++i) {
      const double gi = g[i] + cfg.weight_decay * param[i];
      m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * gi;
      m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * gi * gi;
      param[i] -= cfg.learning_rate * (m1[i] / c1) /
                  (std::sqrt(m2[i] / c2) + cfg.epsilon);
    }
  };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.Shuffle(std::span<size_t>(order));
    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      Gradients g = ZeroGradients(model);
      for (size_t k = start; k < end; ++k) {
        const size_t i = order[k];
        const ForwardCache cache = Forward(model, xs[i], &dropout_rng);
        const int label = LabelIndex(ys[i]);
        epoch_loss += CrossEntropy(cache.logits, label);
        Backward(model, cache, label, scale, g);
      }
      ++step;
      for (size_t l = 0; l < model.layers.size(); ++l) {
        update(model.layers[l].weights, g[l].weights, m[l].weights, v[l].weights);
        update(model.layers[l].biases, g[l].biases, m[l].biases, v[l].biases);
      }
    }
    history.push_back(epoch_loss / static_cast<double>(xs.size()));
  }
  for (const Layer& l : model.layers) {
    for (double w : l.weights) {
      Require(std::isfinite(w), "training diverged: non-finite weight");
    }
  }
  return history;
}

struct Verdict {
  Membership label = Membership::kNonmember;
  double member_probability = 0.0;
};

// Argmax over (nonmember, member) logits; a tie is a nonmember.
inline Verdict Predict(const MlpModel& model, std::span<const double> x) {
  const ForwardCache cache = Forward(model, x);
  Verdict v;
  v.member_probability = Softmax(cache.logits)[1];
  v.label = cache.logits[1] > cache.logits[0] ? Membership::kMember
                                              : Membership::kNonmember;
  return v;
}

inline Json ModelToJson(const MlpModel& model) {
  Json layers = Json::array();
  for (const Layer& l : model.layers) {
    layers.push_back(Json{{"rows", l.rows},
                          {"cols", l.cols},
                          {"weights", l.weights},
                          {"biases", l.biases}});
  }
  return Json{{"config", model.config.ToJson()}, {"layers", layers}};
}

inline MlpModel ModelFromJson(const Json& j, const std::string& where) {
  MlpModel model;
  model.config = MlpConfig::FromJson(Field<Json>(j, "config", where), where + " config");
  const Json layers = Field<Json>(j, "layers", where);
  Require(layers.is_array(), where + ": field 'layers' must be an array");
  int in = model.config.input_dim;
  std::vector<int> outs = model.config.hidden_dims;
  outs.push_back(model.config.output_dim);
  Require(layers.size() == outs.size(),
          where + ": layer count does not match the config");
  for (size_t i = 0; i < layers.size(); ++i) {
    const std::string lw = where + " layer " + std::to_string(i);
    Layer l;
    l.rows = Field<int>(layers[i], "rows", lw);
    l.cols = Field<int>(layers[i], "cols", lw);
    l.weights = Field<std::vector<double>>(layers[i], "weights", lw);
    l.biases = Field<std::vector<double>>(layers[i], "biases", lw);
    Require(l.rows == outs[i] && l.cols == in, lw + ": shape does not chain");
    Require(l.weights.size() == static_cast<size_t>(l.rows) * l.cols,
            lw + ": field 'weights' has the wrong length");
    Require(l.biases.size() == static_cast<size_t>(l.rows),
            lw + ": field 'biases' has the wrong length");
    for (double w : l.weights) Require(std::isfinite(w), lw + ": non-finite weight");
    for (double b : l.biases) Require(std::isfinite(b), lw + ": non-finite bias");
    model.layers.push_back(std::move(l));
    in = outs[i];
  }
  return model;
}

}  // namespace codemia::mlp

#endif  // CODEMIA_MLP_HPP_
