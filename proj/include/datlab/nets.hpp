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

#ifndef DATLAB_NETS_HPP_
#define DATLAB_NETS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "datlab/autodiff.hpp"
#include "datlab/common.hpp"

namespace datlab::nets {

enum class Activation { kTanh, kRelu };
enum class Output { kLinear, kSoftmax };

struct MlpSpec {
  std::vector<int> layer_widths;  // input width first
  Activation hidden_activation = Activation::kTanh;
  Output output = Output::kLinear;

  void validate() const;
  int input_width() const { return layer_widths.front(); }
  int output_width() const { return layer_widths.back(); }
  // Width of the activation feeding the final affine layer.
  int penultimate_width() const { return layer_widths[layer_widths.size() - 2]; }
};

struct Layer {
  ad::NodePtr weight;  // [in x out]
  ad::NodePtr bias;    // [1 x out]
};

// Parameters of one MLP, kept as live graph leaves so the same nodes can be
// reused across training steps.
struct ModelParams {
  MlpSpec spec;
  std::vector<Layer> layers;

  std::vector<ad::NodePtr> all_nodes() const;
  ModelParams clone() const;
};

// Xavier-uniform weights in +-sqrt(6/(in+out)), zero biases.
ModelParams init_params(const MlpSpec& spec, std::uint64_t seed);

ad::NodePtr forward_mlp(const ModelParams& params, const ad::NodePtr& x);
// Activations entering the final affine layer (the utterance embedding).
ad::NodePtr forward_hidden(const ModelParams& params, const ad::NodePtr& x);

// How the task network sees domain identity.
enum class DomainFeature { kNone, kOneHot, kLearned };

struct DatModelConfig {
  int input_dim = 16;
  int embed_dim = 16;
  std::vector<int> generator_hidden = {32};
  std::vector<int> classifier_hidden = {32};
  std::vector<int> task_hidden = {32};
  int n_domain_classes = 3;
  int n_task_classes = 4;
  DomainFeature domain_feature = DomainFeature::kNone;
  int linear_embed_width = 4;  // q for the learned-embedding baseline
  Activation activation = Activation::kTanh;
  double lambda = 1.0;

  void validate() const;
  int domain_feature_width() const;
};

// The three networks plus the optional learned domain-embedding matrix.
struct DatModel {
  ModelParams generator;          // input_dim -> embed_dim
  ModelParams domain_classifier;  // embed_dim -> n_domain_classes
  ModelParams task_net;           // embed_dim (+ feature width) -> n_task_classes
  std::optional<ad::NodePtr> domain_embed;  // [N x q]
  double lambda = 1.0;

  int n_domains() const { return domain_classifier.spec.output_width(); }
  int n_task_classes() const { return task_net.spec.output_width(); }
  int embed_dim() const { return generator.spec.output_width(); }
  std::vector<ad::NodePtr> all_params() const;
  DatModel clone() const;
};

DatModel make_dat_model(const DatModelConfig& config, std::uint64_t seed);

ad::NodePtr forward_generator(const ModelParams& generator, const Matrix& x);
// When `reverse` is set, z passes through grad_reverse(lambda) before the
// classifier MLP; the forward probabilities are unchanged either way.
ad::NodePtr forward_classifier(const ModelParams& classifier, const ad::NodePtr& z, bool reverse,
                               double lambda);
ad::NodePtr forward_task(const ModelParams& task_net, const ad::NodePtr& z,
                         const std::optional<ad::NodePtr>& domain_feature);

// L_C: mean cross-entropy of the domain classifier, hard or soft targets.
ad::NodePtr domain_loss(const ad::NodePtr& probs, const std::vector<int>& labels);
ad::NodePtr domain_loss(const ad::NodePtr& probs, const Matrix& soft_labels);
// L_R: mean cross-entropy of the task network.
ad::NodePtr task_loss(const ad::NodePtr& probs, const std::vector<int>& labels);

}  // namespace datlab::nets

#endif  // DATLAB_NETS_HPP_
