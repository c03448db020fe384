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

#include <doctest.h>

#include <cmath>

#include "datlab/nets.hpp"
#include "gradcheck.hpp"

using namespace datlab;
using nets::Activation;
using nets::MlpSpec;
using nets::Output;
using testing::max_gradient_error;
using testing::random_matrix;

TEST_CASE("MlpSpec validation") {
  CHECK_THROWS_AS(MlpSpec{{4}}.validate(), ValidationError);
  CHECK_THROWS_AS((MlpSpec{{4, 0, 2}}).validate(), ValidationError);
  CHECK_NOTHROW((MlpSpec{{4, 8, 2}}).validate());
}

TEST_CASE("init_params is deterministic and Xavier-bounded") {
  const MlpSpec spec{{4, 8}, Activation::kTanh, Output::kLinear};
  const auto a = nets::init_params(spec, 99);
  const auto b = nets::init_params(spec, 99);
  CHECK(a.layers[0].weight->value == b.layers[0].weight->value);
  CHECK(a.layers[0].bias->value == b.layers[0].bias->value);

  const double bound = std::sqrt(6.0 / 12.0);
  CHECK(a.layers[0].weight->value.cwiseAbs().maxCoeff() <= bound);
  CHECK(a.layers[0].bias->value.cwiseAbs().maxCoeff() == 0.0);

  const auto c = nets::init_params(spec, 100);
  CHECK((a.layers[0].weight->value - c.layers[0].weight->value).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("forward_generator zero parameters give zero embeddings") {
  MlpSpec spec{{3, 4, 2}, Activation::kTanh, Output::kLinear};
  auto params = nets::init_params(spec, 1);
  for (auto& layer : params.layers) {
    layer.weight->value.setZero();
    layer.bias->value.setZero();
  }
  Rng rng(2);
  auto z = nets::forward_generator(params, random_matrix(rng, 5, 3));
  CHECK(z->value.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single identity layer reproduces the input") {
  MlpSpec spec{{3, 3}, Activation::kTanh, Output::kLinear};
  auto params = nets::init_params(spec, 1);
  params.layers[0].weight->value = Matrix::Identity(3, 3);
  params.layers[0].bias->value.setZero();
  Rng rng(3);
  const Matrix x = random_matrix(rng, 4, 3);
  auto z = nets::forward_generator(params, x);
  CHECK((z->value - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward_generator rejects width mismatch") {
  auto params = nets::init_params({{3, 4, 2}, Activation::kTanh, Output::kLinear}, 1);
  CHECK_THROWS_AS(nets::forward_generator(params, Matrix::Zero(2, 5)), DimensionError);
}

TEST_CASE("generator gradients match finite differences") {
  const MlpSpec spec{{3, 4, 2}, Activation::kTanh, Output::kLinear};
  Rng rng(5);
  const Matrix x = random_matrix(rng, 4, 3);
  auto reference = nets::init_params(spec, 17);
  std::vector<Matrix> inputs{x};
  for (const auto& layer : reference.layers) {
    inputs.push_back(layer.weight->value);
    inputs.push_back(layer.bias->value);
  }
  const double err = max_gradient_error(inputs, [&spec](const auto& in) {
    nets::ModelParams params;
    params.spec = spec;
    for (std::size_t l = 1; l + 1 < in.size(); l += 2) {
      params.layers.push_back({in[l], in[l + 1]});
    }
    auto z = nets::forward_mlp(params, in[0]);
    return ad::mean_reduce(ad::hadamard(z, z));
  });
  CHECK(err < 1e-5);
}

TEST_CASE("forward_classifier: reversal changes no forward value") {
  auto classifier = nets::init_params({{4, 8, 3}, Activation::kTanh, Output::kSoftmax}, 21);
  Rng rng(6);
  auto z = ad::leaf(random_matrix(rng, 5, 4));
  auto off = nets::forward_classifier(classifier, z, false, 1.0);
  auto on = nets::forward_classifier(classifier, z, true, 1.0);
  CHECK(off->value == on->value);
  for (Index r = 0; r < 5; ++r) {
    CHECK(std::abs(on->value.row(r).sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("forward_classifier: reversal negates generator-side gradients") {
  auto classifier = nets::init_params({{4, 8, 3}, Activation::kTanh, Output::kSoftmax}, 23);
  Rng rng(7);
  const Matrix zv = random_matrix(rng, 5, 4);
  const std::vector<int> labels{0, 1, 2, 1, 0};

  auto z_off = ad::leaf(zv);
  ad::backward(nets::domain_loss(nets::forward_classifier(classifier, z_off, false, 1.0), labels));

  auto z_on = ad::leaf(zv);
  ad::backward(nets::domain_loss(nets::forward_classifier(classifier, z_on, true, 1.0), labels));

  CHECK((z_on->grad + z_off->grad).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("classifier parameters receive unreversed gradients") {
  // The reversal sits between z and the classifier input, so C's own update
  // direction must be identical with and without it.
  auto a = nets::init_params({{4, 6, 3}, Activation::kTanh, Output::kSoftmax}, 29);
  auto b = a.clone();
  Rng rng(8);
  const Matrix zv = random_matrix(rng, 5, 4);
  const std::vector<int> labels{2, 1, 0, 1, 2};

  ad::backward(nets::domain_loss(nets::forward_classifier(a, ad::leaf(zv), true, 3.0), labels));
  ad::backward(nets::domain_loss(nets::forward_classifier(b, ad::leaf(zv), false, 0.0), labels));
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    CHECK((a.layers[l].weight->grad - b.layers[l].weight->grad).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("forward_task shape contract with a domain feature") {
  auto task = nets::init_params({{4 + 3, 8, 2}, Activation::kTanh, Output::kSoftmax}, 31);
  Rng rng(9);
  auto z = ad::leaf(random_matrix(rng, 5, 4));
  auto feature = ad::leaf(one_hot({0, 1, 2, 0, 1}, 3));
  auto probs = nets::forward_task(task, z, feature);
  CHECK(probs->value.rows() == 5);
  CHECK(probs->value.cols() == 2);

  // Without the feature the widths no longer chain.
  CHECK_THROWS_AS(nets::forward_task(task, z, std::nullopt), DimensionError);
}

TEST_CASE("gradients flow through the concatenated feature") {
  const MlpSpec spec{{5, 6, 2}, Activation::kTanh, Output::kSoftmax};
  auto reference = nets::init_params(spec, 37);
  Rng rng(10);
  std::vector<Matrix> inputs{random_matrix(rng, 4, 3), random_matrix(rng, 4, 2)};
  for (const auto& layer : reference.layers) {
    inputs.push_back(layer.weight->value);
    inputs.push_back(layer.bias->value);
  }
  const double err = max_gradient_error(inputs, [&spec](const auto& in) {
    nets::ModelParams params;
    params.spec = spec;
    for (std::size_t l = 2; l + 1 < in.size(); l += 2) {
      params.layers.push_back({in[l], in[l + 1]});
    }
    auto probs = nets::forward_task(params, in[0], in[1]);
    return nets::task_loss(probs, {0, 1, 1, 0});
  });
  CHECK(err < 1e-5);
}

TEST_CASE("domain_loss hand values") {
  auto probs = ad::leaf((Matrix(1, 2) << 0.7, 0.3).finished());
  CHECK(nets::domain_loss(probs, std::vector<int>{0})->value(0, 0) ==
        doctest::Approx(0.356675).epsilon(1e-5));

  // Soft one-hot row reduces to the hard value.
  const double hard = nets::domain_loss(probs, std::vector<int>{0})->value(0, 0);
  const double soft = nets::domain_loss(probs, (Matrix(1, 2) << 1.0, 0.0).finished())->value(0, 0);
  CHECK(std::abs(hard - soft) <= 1e-12);

  // Uniform probabilities cost ln N whatever the labels.
  const int n = 5;
  auto uniform = ad::leaf(Matrix::Constant(3, n, 1.0 / n));
  CHECK(nets::domain_loss(uniform, std::vector<int>{4, 0, 2})->value(0, 0) ==
        doctest::Approx(std::log(double(n))).epsilon(1e-12));
}

TEST_CASE("domain_loss rejects out-of-range labels") {
  auto probs = ad::leaf(Matrix::Constant(2, 3, 1.0 / 3));
  CHECK_THROWS_AS(nets::domain_loss(probs, std::vector<int>{0, 3}), ValidationError);
  CHECK_THROWS_AS(nets::domain_loss(probs, std::vector<int>{-1, 0}), ValidationError);
}

TEST_CASE("task_loss basics") {
  auto sharp = ad::leaf((Matrix(1, 3) << 1.0 - 2e-9, 1e-9, 1e-9).finished());
  CHECK(nets::task_loss(sharp, std::vector<int>{0})->value(0, 0) ==
        doctest::Approx(0.0).epsilon(1e-8));

  auto uniform = ad::leaf(Matrix::Constant(2, 4, 0.25));
  CHECK(nets::task_loss(uniform, std::vector<int>{1, 3})->value(0, 0) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(nets::task_loss(uniform, std::vector<int>{1, 3})->value(0, 0) ==
        doctest::Approx(1.386294).epsilon(1e-5));
}

TEST_CASE("task loss decreases under SGD on a separable toy set") {
  // Two well-separated classes in 2-D, full-batch steps.
  Rng rng(55);
  Matrix x(40, 2);
  std::vector<int> labels(40);
  for (Index i = 0; i < 40; ++i) {
    const int cls = static_cast<int>(i % 2);
    labels[static_cast<std::size_t>(i)] = cls;
    x(i, 0) = (cls == 0 ? -2.0 : 2.0) + 0.3 * rng.normal();
    x(i, 1) = rng.normal();
  }
  auto params = nets::init_params({{2, 8, 2}, Activation::kTanh, Output::kSoftmax}, 71);
  const auto nodes = params.all_nodes();
  std::vector<double> losses;
  for (int step = 0; step < 50; ++step) {
    auto loss = nets::task_loss(nets::forward_mlp(params, ad::leaf(x)), labels);
    losses.push_back(loss->value(0, 0));
    ad::backward(loss);
    ad::sgd_step(nodes, 0.5);
    ad::zero_grad(nodes);
  }
  for (std::size_t i = 1; i < losses.size(); ++i) {
    CHECK(losses[i] <= losses[i - 1] + 1e-12);
  }
}

TEST_CASE("lambda zero stops classifier gradients into the generator") {
  nets::DatModelConfig config;
  config.input_dim = 3;
  config.embed_dim = 4;
  config.n_domain_classes = 2;
  config.n_task_classes = 2;
  auto model = nets::make_dat_model(config, 5);
  Rng rng(12);
  auto z = nets::forward_generator(model.generator, random_matrix(rng, 6, 3));
  auto probs = nets::forward_classifier(model.domain_classifier, z, true, 0.0);
  ad::backward(nets::domain_loss(probs, std::vector<int>{0, 1, 0, 1, 0, 1}));
  for (const auto& node : model.generator.all_nodes()) {
    CHECK(node->grad.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("make_dat_model wires widths consistently") {
  nets::DatModelConfig config;
  config.domain_feature = nets::DomainFeature::kLearned;
  auto model = nets::make_dat_model(config, 3);
  CHECK(model.generator.spec.output_width() == config.embed_dim);
  CHECK(model.domain_classifier.spec.input_width() == config.embed_dim);
  CHECK(model.task_net.spec.input_width() == config.embed_dim + config.linear_embed_width);
  CHECK(model.n_domains() == config.n_domain_classes);
  REQUIRE(model.domain_embed.has_value());
  CHECK((*model.domain_embed)->value.rows() == config.n_domain_classes);

  nets::DatModelConfig bad;
  bad.n_domain_classes = 1;
  CHECK_THROWS_AS(nets::make_dat_model(bad, 0), ValidationError);
}

TEST_CASE("classifier rows satisfy the softmax constraints on random inputs") {
  auto classifier = nets::init_params({{6, 16, 4}, Activation::kTanh, Output::kSoftmax}, 101);
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    auto probs =
        nets::forward_classifier(classifier, ad::leaf(random_matrix(rng, 7, 6, -4.0, 4.0)),
                                 trial % 2 == 0, 1.0);
    for (Index r = 0; r < probs->value.rows(); ++r) {
      CHECK(std::abs(probs->value.row(r).sum() - 1.0) <= 1e-12);
      CHECK(probs->value.row(r).minCoeff() > 0.0);
      CHECK(probs->value.row(r).maxCoeff() < 1.0);
    }
  }
}
