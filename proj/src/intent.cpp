// Copyright 2026 The rsx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rsx/intent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rsx {

void CategoryDistribution::validate() const {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw NumericError("category distribution has a negative or NaN entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) throw NumericError("category distribution sums to " + std::to_string(total));
}

PredictionRule PredictionRule::top_k(int k) {
  PredictionRule r;
  r.kind = Kind::kTopK;
  r.k = k;
  r.validate();
  return r;
}

PredictionRule PredictionRule::at_threshold(double tau) {
  PredictionRule r;
  r.kind = Kind::kThreshold;
  r.threshold = tau;
  r.validate();
  return r;
}

PredictionRule PredictionRule::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw InvalidArgument("prediction rule '" + std::string(text) + "'");
  const std::string kind(text.substr(0, colon));
  const std::string value(text.substr(colon + 1));
  try {
    std::size_t used = 0;
    if (kind == "top") {
      const int k = std::stoi(value, &used);
      if (used == value.size()) return top_k(k);
    } else if (kind == "threshold") {
      const double tau = std::stod(value, &used);
      if (used == value.size()) return at_threshold(tau);
    }
  } catch (const std::logic_error&) {
  }
  throw InvalidArgument("prediction rule '" + std::string(text) + "': expected top:K or threshold:TAU");
}

std::string PredictionRule::to_string() const {
  if (kind == Kind::kTopK) return "top:" + std::to_string(k);
  std::ostringstream os;
  os << "threshold:" << threshold;
  return os.str();
}

void PredictionRule::validate() const {
  if (kind == Kind::kTopK && k < 1) throw InvalidArgument("top-k rule needs k >= 1");
  if (kind == Kind::kThreshold && !(threshold > 0.0 && threshold < 1.0))
    throw InvalidArgument("threshold must lie in (0, 1)");
}

void IntentFinetuneConfig::validate() const {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  rule.validate();
}

void check_label_space(int head_labels, const LabelSpace& space) {
  if (head_labels != space.size)
    throw ShapeError("intent head has " + std::to_string(head_labels) + " labels, label space has " +
                     std::to_string(space.size));
}

Tensor<double> one_hot_targets(std::span<const int> category_ids, int num_labels) {
  Tensor<double> t = Tensor<double>::Zero(static_cast<Index>(category_ids.size()), num_labels);
  for (std::size_t i = 0; i < category_ids.size(); ++i) {
    const int c = category_ids[i];
    if (c < 0 || c >= num_labels)
      throw InvalidArgument("label " + std::to_string(c) + " outside label space of " + std::to_string(num_labels));
    t(static_cast<Index>(i), c) = 1.0;
  }
  return t;
}

Tensor<double> weighted_targets(std::span<const std::vector<IntentLabel>> labels, int num_labels) {
  Tensor<double> t = Tensor<double>::Zero(static_cast<Index>(labels.size()), num_labels);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& row = labels[i];
    if (row.empty()) throw InvalidArgument("example " + std::to_string(i) + " has no labels");
    double total = 0.0;
    for (const auto& l : row) {
      if (l.category_id < 0 || l.category_id >= num_labels)
        throw InvalidArgument("label " + std::to_string(l.category_id) + " outside label space of " +
                              std::to_string(num_labels));
      if (!(l.weight >= 0.0)) throw InvalidArgument("negative label weight");
      total += l.weight;
    }
    const bool uniform = total <= 0.0;
    for (const auto& l : row)
      t(static_cast<Index>(i), l.category_id) +=
          uniform ? 1.0 / static_cast<double>(row.size()) : l.weight / total;
  }
  return t;
}

namespace {

double cross_entropy(std::span<const double> logits, const Tensor<double>& target, double temperature) {
  if (logits.empty()) throw InvalidArgument("empty logits");
  double m = -std::numeric_limits<double>::infinity();
  for (double z : logits) m = std::max(m, z / temperature);
  double acc = 0.0;
  for (double z : logits) acc += std::exp(z / temperature - m);
  const double lse = m + std::log(acc);
  double loss = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    const double t = target(0, static_cast<Index>(c));
    if (t != 0.0) loss -= t * (logits[c] / temperature - lse);
  }
  return loss;
}

}  // namespace

double rsc_pretrain_loss(std::span<const double> logits, int category_id) {
  const int ids[] = {category_id};
  return cross_entropy(logits, one_hot_targets(ids, static_cast<int>(logits.size())), 1.0);
}

double finetune_multilabel_loss(std::span<const double> logits, std::span<const IntentLabel> labels,
                                const IntentFinetuneConfig& cfg) {
  cfg.validate();
  const std::vector<IntentLabel> row(labels.begin(), labels.end());
  return cross_entropy(logits, weighted_targets(std::span(&row, 1), static_cast<int>(logits.size())),
                       cfg.temperature);
}

CategoryDistribution softmax(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  if (logits.empty()) throw InvalidArgument("empty logits");
  double m = -std::numeric_limits<double>::infinity();
  for (double z : logits) m = std::max(m, z / temperature);
  CategoryDistribution d;
  d.probs.resize(logits.size());
  double total = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) total += d.probs[c] = std::exp(logits[c] / temperature - m);
  for (double& p : d.probs) p /= total;
  return d;
}

std::vector<int> rank_categories(const CategoryDistribution& dist) {
  std::vector<int> order(dist.probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist.probs[a] > dist.probs[b]; });
  return order;
}

std::vector<int> predict_categories(const CategoryDistribution& dist, const PredictionRule& rule) {
  rule.validate();
  auto order = rank_categories(dist);
  if (rule.kind == PredictionRule::Kind::kTopK) {
    order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(rule.k)));
    return order;
  }
  std::vector<int> out;
  for (int c : order) {
    if (dist.probs[static_cast<std::size_t>(c)] < rule.threshold) break;
    out.push_back(c);
  }
  return out;
}

}  // namespace rsx
