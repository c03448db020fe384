// Copyright 2026 The datlab Authors.
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

#include "datlab/nets.hpp"

#include <cmath>

namespace datlab::nets {

void MlpSpec::validate() const {
  if (layer_widths.size() < 2) {
    throw ValidationError("MlpSpec: need at least 2 layer widths");
  }
  for (int w : layer_widths) {
    if (w <= 0) throw ValidationError("MlpSpec: layer widths must be positive");
  }
}

std::vector<ad::NodePtr> ModelParams::all_nodes() const {
  std::vector<ad::NodePtr> nodes;
  nodes.reserve(2 * layers.size());
  for (const auto& layer : layers) {
    nodes.push_back(layer.weight);
    nodes.push_back(layer.bias);
  }
  return nodes;
}

ModelParams ModelParams::clone() const {
  ModelParams copy;
  copy.spec = spec;
  copy.layers.reserve(layers.size());
  for (const auto& layer : layers) {
    copy.layers.push_back({ad::leaf(layer.weight->value), ad::leaf(layer.bias->value)});
  }
  return copy;
}

ModelParams init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ModelParams params;
  params.spec = spec;
  for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
    const int in = spec.layer_widths[l];
    const int out = spec.layer_widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(in, out);
    for (Index r = 0; r < in; ++r) {
      for (Index c = 0; c < out; ++c) {
        w(r, c) = rng.uniform(-bound, bound);
      }
    }
    params.layers.push_back({ad::leaf(std::move(w)), ad::leaf(Matrix::Zero(1, out))});
  }
  return params;
}

ad::NodePtr forward_mlp(const ModelParams& params, const ad::NodePtr& x) {
  ad::NodePtr h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    h = ad::bias_add(ad::matmul(h, params.layers[l].weight), params.layers[l].bias);
    if (l + 1 < params.layers.size()) {
      h = params.spec.hidden_activation == Activation::kTanh ? ad::tanh(h) : ad::relu(h);
    } else if (params.spec.output == Output::kSoftmax) {
      h = ad::softmax_rows(h);
    }
  }
  return h;
}

ad::NodePtr forward_hidden(const ModelParams& params, const ad::NodePtr& x) {
  ad::NodePtr h = x;
  for (std::size_t l = 0; l + 1 < params.layers.size(); ++l) {
    h = ad::bias_add(ad::matmul(h, params.layers[l].weight), params.layers[l].bias);
    h = params.spec.hidden_activation == Activation::kTanh ? ad::tanh(h) : ad::relu(h);
  }
  return h;
}

void DatModelConfig::validate() const {
  if (input_dim <= 0 || embed_dim <= 0) throw ValidationError("DatModelConfig: dims must be positive");
  if (n_domain_classes < 2) throw ValidationError("DatModelConfig: need at least 2 domain classes");
  if (n_task_classes < 2) throw ValidationError("DatModelConfig: need at least 2 task classes");
  if (domain_feature == DomainFeature::kLearned && linear_embed_width <= 0) {
    throw ValidationError("DatModelConfig: linear_embed_width must be positive");
  }
  if (lambda < 0.0) throw ValidationError("DatModelConfig: lambda must be nonnegative");
}

int DatModelConfig::domain_feature_width() const {
  switch (domain_feature) {
    case DomainFeature::kNone: return 0;
    case DomainFeature::kOneHot: return n_domain_classes;
    case DomainFeature::kLearned: return linear_embed_width;
  }
  return 0;
}

std::vector<ad::NodePtr> DatModel::all_params() const {
  std::vector<ad::NodePtr> nodes = generator.all_nodes();
  for (const auto& n : domain_classifier.all_nodes()) nodes.push_back(n);
  for (const auto& n : task_net.all_nodes()) nodes.push_back(n);
  if (domain_embed) nodes.push_back(*domain_embed);
  return nodes;
}

DatModel DatModel::clone() const {
  DatModel copy;
  copy.generator = generator.clone();
  copy.domain_classifier = domain_classifier.clone();
  copy.task_net = task_net.clone();
  if (domain_embed) copy.domain_embed = ad::leaf((*domain_embed)->value);
  copy.lambda = lambda;
  return copy;
}

DatModel make_dat_model(const DatModelConfig& config, std::uint64_t seed) {
  config.validate();
  auto widths = [](int in, const std::vector<int>& hidden, int out) {
    std::vector<int> w;
    w.push_back(in);
    w.insert(w.end(), hidden.begin(), hidden.end());
    w.push_back(out);
    return w;
  };
  DatModel model;
  model.generator = init_params(
      {widths(config.input_dim, config.generator_hidden, config.embed_dim), config.activation,
       Output::kLinear},
      mix_seed(seed, 0));
  model.domain_classifier = init_params(
      {widths(config.embed_dim, config.classifier_hidden, config.n_domain_classes),
       config.activation, Output::kSoftmax},
      mix_seed(seed, 1));
  model.task_net = init_params(
      {widths(config.embed_dim + config.domain_feature_width(), config.task_hidden,
              config.n_task_classes),
       config.activation, Output::kSoftmax},
      mix_seed(seed, 2));
  if (config.domain_feature == DomainFeature::kLearned) {
    Rng rng(mix_seed(seed, 3));
    const double bound =
        std::sqrt(6.0 / static_cast<double>(config.n_domain_classes + config.linear_embed_width));
    Matrix e(config.n_domain_classes, config.linear_embed_width);
    for (Index r = 0; r < e.rows(); ++r) {
      for (Index c = 0; c < e.cols(); ++c) e(r, c) = rng.uniform(-bound, bound);
    }
    model.domain_embed = ad::leaf(std::move(e));
  }
  model.lambda = config.lambda;
  return model;
}

ad::NodePtr forward_generator(const ModelParams& generator, const Matrix& x) {
  if (x.cols() != generator.spec.input_width()) {
    throw DimensionError("forward_generator: input " + shape_str(x) + " does not match width " +
                         std::to_string(generator.spec.input_width()));
  }
  return forward_mlp(generator, ad::leaf(x));
}

ad::NodePtr forward_classifier(const ModelParams& classifier, const ad::NodePtr& z, bool reverse,
                               double lambda) {
  if (z->value.cols() != classifier.spec.input_width()) {
    throw DimensionError("forward_classifier: embedding " + shape_str(z->value) +
                         " does not match width " + std::to_string(classifier.spec.input_width()));
  }
  const ad::NodePtr input = reverse ? ad::grad_reverse(z, lambda) : z;
  return forward_mlp(classifier, input);
}

ad::NodePtr forward_task(const ModelParams& task_net, const ad::NodePtr& z,
                         const std::optional<ad::NodePtr>& domain_feature) {
  ad::NodePtr input = z;
  if (domain_feature) {
    input = ad::concat_cols(z, *domain_feature);
  }
  if (input->value.cols() != task_net.spec.input_width()) {
    throw DimensionError("forward_task: input " + shape_str(input->value) +
                         " does not match width " + std::to_string(task_net.spec.input_width()));
  }
  return forward_mlp(task_net, input);
}

ad::NodePtr domain_loss(const ad::NodePtr& probs, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != probs->value.rows()) {
    throw ValidationError("domain_loss: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(probs->value.rows()) + " rows");
  }
  return ad::cross_entropy_soft(probs, one_hot(labels, static_cast<int>(probs->value.cols())));
}

ad::NodePtr domain_loss(const ad::NodePtr& probs, const Matrix& soft_labels) {
  return ad::cross_entropy_soft(probs, soft_labels);
}

ad::NodePtr task_loss(const ad::NodePtr& probs, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != probs->value.rows()) {
    throw ValidationError("task_loss: " + std::to_string(labels.size()) + " labels for " +
                          std::to_string(probs->value.rows()) + " rows");
  }
  return ad::cross_entropy_soft(probs, one_hot(labels, static_cast<int>(probs->value.cols())));
}

}  // namespace datlab::nets
