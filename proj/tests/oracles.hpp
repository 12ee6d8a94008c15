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

// Reference implementations used to check the library. They share no code
// with include/codemia beyond plain data types.

#ifndef CODEMIA_TESTS_ORACLES_HPP_
#define CODEMIA_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "codemia/metrics.hpp"
#include "codemia/mlp.hpp"

namespace codemia::oracle {

// Mean softmax cross-entropy of a ReLU network in extended precision,
// evaluated straight from the layer arrays. `signature` collects the sign
// pattern of every hidden pre-activation so callers can detect finite
// differences that straddle a ReLU kink.
inline long double NetworkLoss(const std::vector<mlp::Layer>& layers,
                               const std::vector<std::vector<double>>& xs,
                               const std::vector<int>& labels,
                               std::vector<bool>* signature = nullptr) {
  if (signature != nullptr) signature->clear();
  long double total = 0;
  for (size_t s = 0; s < xs.size(); ++s) {
    std::vector<long double> a(xs[s].begin(), xs[s].end());
    for (size_t l = 0; l < layers.size(); ++l) {
      const mlp::Layer& layer = layers[l];
      std::vector<long double> z(layer.rows);
      for (int r = 0; r < layer.rows; ++r) {
        long double acc = layer.biases[r];
        for (int c = 0; c < layer.cols; ++c) {
          acc += static_cast<long double>(layer.weights[r * layer.cols + c]) * a[c];
        }
        z[r] = acc;
      }
      if (l + 1 < layers.size()) {
        for (long double& v : z) {
          if (signature != nullptr) signature->push_back(v > 0);
          v = v > 0 ? v : 0;
        }
      }
      a = std::move(z);
    }
    const long double m = std::max(a[0], a[1]);
    const long double lse = m + std::log(std::exp(a[0] - m) + std::exp(a[1] - m));
    total += lse - a[labels[s]];
  }
  return total / static_cast<long double>(xs.size());
}

struct GradCheckResult {
  size_t checked = 0;
  size_t kinks = 0;  // skipped: the two probes saw different ReLU patterns
  double worst = 0.0;
};

// Relative error of one analytic derivative against a central difference.
inline double RelativeError(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central-difference check of `analytic` (same shapes as `layers`) at the
// parameter positions chosen by `pick(layer, is_bias, index)`.
template <typename Pick>
GradCheckResult CheckGradients(std::vector<mlp::Layer> layers,
                               const std::vector<mlp::Layer>& analytic,
                               const std::vector<std::vector<double>>& xs,
                               const std::vector<int>& labels, double step,
                               double floor, Pick pick) {
  GradCheckResult out;
  std::vector<bool> sig_plus;
  std::vector<bool> sig_minus;
  for (size_t l = 0; l < layers.size(); ++l) {
    for (int is_bias = 0; is_bias < 2; ++is_bias) {
      std::vector<double>& params = is_bias ? layers[l].biases : layers[l].weights;
      const std::vector<double>& grads = is_bias ? analytic[l].biases : analytic[l].weights;
      for (size_t i = 0; i < params.size(); ++i) {
        if (!pick(l, is_bias != 0, i)) continue;
        const double saved = params[i];
        params[i] = saved + step;
        const long double up = NetworkLoss(layers, xs, labels, &sig_plus);
        params[i] = saved - step;
        const long double down = NetworkLoss(layers, xs, labels, &sig_minus);
        params[i] = saved;
        if (sig_plus != sig_minus) {
          ++out.kinks;
          continue;
        }
        const long double h2 = (static_cast<long double>(saved) + step) -
                               (static_cast<long double>(saved) - step);
        const double numeric = static_cast<double>((up - down) / h2);
        out.worst = std::max(out.worst, RelativeError(grads[i], numeric, floor));
        ++out.checked;
      }
    }
  }
  return out;
}

// Central-difference check of every parameter of a ReLU network. A probe
// shifts one parameter, which moves a single pre-activation; only the
// activations downstream of that change are recomputed, in extended
// precision, from cached per-sample activations.
class IncrementalGradCheck {
 public:
  IncrementalGradCheck(const std::vector<mlp::Layer>& layers,
                       const std::vector<std::vector<double>>& xs,
                       const std::vector<int>& labels)
      : layers_(layers), labels_(labels) {
    for (const auto& x : xs) {
      Cache c;
      std::vector<long double> a(x.begin(), x.end());
      for (size_t l = 0; l < layers.size(); ++l) {
        const mlp::Layer& layer = layers[l];
        std::vector<long double> z(layer.rows);
        for (int r = 0; r < layer.rows; ++r) {
          long double acc = layer.biases[r];
          for (int col = 0; col < layer.cols; ++col) {
            acc += static_cast<long double>(layer.weights[r * layer.cols + col]) * a[col];
          }
          z[r] = acc;
        }
        c.inputs.push_back(a);
        c.pre.push_back(z);
        if (l + 1 < layers.size()) {
          for (long double& v : z) v = v > 0 ? v : 0;
        }
        a = std::move(z);
      }
      caches_.push_back(std::move(c));
    }
  }

  GradCheckResult Run(const std::vector<mlp::Layer>& analytic, long double step,
                      double floor) const {
    GradCheckResult out;
    std::vector<bool> sig_plus;
    std::vector<bool> sig_minus;
    for (size_t l = 0; l < layers_.size(); ++l) {
      const mlp::Layer& layer = layers_[l];
      for (int r = 0; r < layer.rows; ++r) {
        for (int col = -1; col < layer.cols; ++col) {  // -1 is the bias
          long double diff = 0;
          sig_plus.clear();
          sig_minus.clear();
          for (size_t s = 0; s < caches_.size(); ++s) {
            const long double a = col < 0 ? 1.0L : caches_[s].inputs[l][col];
            diff += SampleLoss(s, l, r, step * a, &sig_plus) -
                    SampleLoss(s, l, r, -step * a, &sig_minus);
          }
          if (sig_plus != sig_minus) {
            ++out.kinks;
            continue;
          }
          const double numeric =
              static_cast<double>(diff / (2 * step * static_cast<long double>(caches_.size())));
          const double g = col < 0 ? analytic[l].biases[r]
                                   : analytic[l].weights[static_cast<size_t>(r) * layer.cols + col];
          out.worst = std::max(out.worst, RelativeError(g, numeric, floor));
          ++out.checked;
        }
      }
    }
    return out;
  }

 private:
  struct Cache {
    std::vector<std::vector<long double>> inputs;  // inputs[l] feeds layer l
    std::vector<std::vector<long double>> pre;
  };

  // Loss of sample `s` with pre-activation `r` of layer `l` shifted by `t`.
  long double SampleLoss(size_t s, size_t l, int r, long double t,
                         std::vector<bool>* signs) const {
    const Cache& c = caches_[s];
    const size_t last = layers_.size() - 1;
    std::vector<long double> logits = c.pre[last];
    if (l == last) {
      logits[r] += t;
      return Ce(logits, labels_[s]);
    }
    // Sparse change of the activations feeding layer k.
    std::vector<std::pair<int, long double>> delta;
    {
      const long double z = c.pre[l][r];
      signs->push_back(z + t > 0);
      const long double d = Relu(z + t) - Relu(z);
      if (d != 0) delta.emplace_back(r, d);
    }
    for (size_t k = l + 1; k <= last && !delta.empty(); ++k) {
      const mlp::Layer& layer = layers_[k];
      std::vector<long double> dz(layer.rows, 0);
      for (int row = 0; row < layer.rows; ++row) {
        const double* w = &layer.weights[static_cast<size_t>(row) * layer.cols];
        long double acc = 0;
        for (const auto& [idx, d] : delta) acc += static_cast<long double>(w[idx]) * d;
        dz[row] = acc;
      }
      if (k == last) {
        for (int row = 0; row < layer.rows; ++row) logits[row] += dz[row];
        break;
      }
      std::vector<std::pair<int, long double>> next;
      for (int row = 0; row < layer.rows; ++row) {
        if (dz[row] == 0) continue;
        const long double z = c.pre[k][row];
        signs->push_back(z + dz[row] > 0);
        const long double d = Relu(z + dz[row]) - Relu(z);
        if (d != 0) next.emplace_back(row, d);
      }
      delta = std::move(next);
    }
    return Ce(logits, labels_[s]);
  }

  static long double Relu(long double v) { return v > 0 ? v : 0; }

  static long double Ce(const std::vector<long double>& z, int label) {
    const long double m = std::max(z[0], z[1]);
    return m + std::log(std::exp(z[0] - m) + std::exp(z[1] - m)) - z[label];
  }

  const std::vector<mlp::Layer>& layers_;
  std::vector<int> labels_;
  std::vector<Cache> caches_;
};

// AUC as the fraction of (member, nonmember) pairs ordered correctly, ties
// counted half.
inline double BruteForceAuc(const std::vector<metrics::Prediction>& preds) {
  int64_t twice = 0;
  int64_t pairs = 0;
  for (const auto& p : preds) {
    if (p.truth != Membership::kMember) continue;
    for (const auto& q : preds) {
      if (q.truth != Membership::kNonmember) continue;
      ++pairs;
      twice += p.score > q.score ? 2 : (p.score == q.score ? 1 : 0);
    }
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(pairs));
}

}  // namespace codemia::oracle

#endif  // CODEMIA_TESTS_ORACLES_HPP_
