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

#include "datlab/datagen.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "datlab/probe.hpp"

namespace datlab::datagen {

using nlohmann::json;

namespace {

// Class means sit on a circle of radius 3 in the first two coordinates.
Matrix class_means(int n_task_classes, int feature_dim) {
  Matrix means = Matrix::Zero(n_task_classes, feature_dim);
  for (int t = 0; t < n_task_classes; ++t) {
    const double angle = 2.0 * M_PI * t / n_task_classes;
    means(t, 0) = 3.0 * std::cos(angle);
    means(t, 1) = 3.0 * std::sin(angle);
  }
  return means;
}

// Rotation of the first two coordinates, identity elsewhere.
void rotate_in_place(Vector& x, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double x0 = x(0);
  const double x1 = x(1);
  x(0) = c * x0 - s * x1;
  x(1) = s * x0 + c * x1;
}

void validate_domain(const DomainSpec& spec, int feature_dim, const std::string& name) {
  if (spec.noise_scale <= 0.0) {
    throw ValidationError(name + ".noise_scale must be positive, got " +
                          std::to_string(spec.noise_scale));
  }
  if (spec.nonnative_fraction < 0.0 || spec.nonnative_fraction > 1.0) {
    throw ValidationError(name + ".nonnative_fraction must lie in [0, 1], got " +
                          std::to_string(spec.nonnative_fraction));
  }
  if (spec.nonnative_extra_noise <= 0.0) {
    throw ValidationError(name + ".nonnative_extra_noise must be positive, got " +
                          std::to_string(spec.nonnative_extra_noise));
  }
  if (spec.offset.size() != 0 && spec.offset.size() != feature_dim) {
    throw ValidationError(name + ".offset has length " + std::to_string(spec.offset.size()) +
                          ", expected " + std::to_string(feature_dim));
  }
}

Dataset generate_domain(const DomainSpec& spec, int domain_label, int count,
                        const Matrix& means, int feature_dim, Rng& rng) {
  Dataset out;
  out.records.reserve(static_cast<std::size_t>(count));
  const int n_task = static_cast<int>(means.rows());
  for (int i = 0; i < count; ++i) {
    Record rec;
    rec.task_label = static_cast<int>(rng.integer(static_cast<std::uint64_t>(n_task)));
    rec.domain_label = domain_label;
    rec.native = !rng.bernoulli(spec.nonnative_fraction);
    Vector x = means.row(rec.task_label).transpose();
    for (Index j = 0; j < feature_dim; ++j) x(j) += spec.noise_scale * rng.normal();
    if (!rec.native) {
      for (Index j = 0; j < feature_dim; ++j) x(j) += spec.nonnative_extra_noise * rng.normal();
    }
    rotate_in_place(x, spec.rotation_angle);
    if (spec.offset.size() != 0) x += spec.offset;
    rec.features = std::move(x);
    out.records.push_back(std::move(rec));
  }
  return out;
}

json record_to_json(const Record& rec) {
  json j;
  j["x"] = std::vector<double>(rec.features.data(), rec.features.data() + rec.features.size());
  j["y"] = rec.task_label;
  j["d"] = rec.domain_label;
  j["native"] = rec.native;
  if (rec.soft_domain) {
    j["soft"] = std::vector<double>(rec.soft_domain->data(),
                                    rec.soft_domain->data() + rec.soft_domain->size());
  }
  return j;
}

Vector vector_from_json(const json& arr, const std::string& path, long line, const char* key) {
  if (!arr.is_array() || arr.empty()) {
    throw ParseError(path, line, std::string("\"") + key + "\" must be a nonempty array");
  }
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw ParseError(path, line, std::string("\"") + key + "\" has a non-numeric entry");
    }
    v(static_cast<Index>(i)) = arr[i].get<double>();
    if (!std::isfinite(v(static_cast<Index>(i)))) {
      throw ParseError(path, line, std::string("\"") + key + "\" has a non-finite entry");
    }
  }
  return v;
}

Record record_from_json(const json& j, const std::string& path, long line) {
  for (const char* key : {"x", "y", "d", "native"}) {
    if (!j.contains(key)) {
      throw ParseError(path, line, std::string("missing key \"") + key + "\"");
    }
  }
  Record rec;
  rec.features = vector_from_json(j.at("x"), path, line, "x");
  if (!j.at("y").is_number_integer()) throw ParseError(path, line, "\"y\" must be an integer");
  if (!j.at("d").is_number_integer()) throw ParseError(path, line, "\"d\" must be an integer");
  if (!j.at("native").is_boolean()) throw ParseError(path, line, "\"native\" must be a boolean");
  rec.task_label = j.at("y").get<int>();
  rec.domain_label = j.at("d").get<int>();
  rec.native = j.at("native").get<bool>();
  if (rec.task_label < 0) throw ParseError(path, line, "\"y\" must be nonnegative");
  if (rec.domain_label < 0) throw ParseError(path, line, "\"d\" must be nonnegative");
  if (j.contains("soft")) {
    Vector soft = vector_from_json(j.at("soft"), path, line, "soft");
    if (soft.minCoeff() < 0.0 || std::abs(soft.sum() - 1.0) > 1e-9) {
      throw ParseError(path, line, "\"soft\" is not a normalized probability vector");
    }
    rec.soft_domain = std::move(soft);
  }
  return rec;
}

DomainSpec domain_from_json(const json& j, int feature_dim, const std::string& name) {
  DomainSpec spec;
  if (j.contains("rotation_angle")) spec.rotation_angle = j.at("rotation_angle").get<double>();
  if (j.contains("offset")) {
    const auto& arr = j.at("offset");
    if (!arr.is_array()) throw ValidationError(name + ".offset must be an array");
    spec.offset = Vector(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      spec.offset(static_cast<Index>(i)) = arr[i].get<double>();
    }
  }
  if (j.contains("noise_scale")) spec.noise_scale = j.at("noise_scale").get<double>();
  if (j.contains("nonnative_fraction")) {
    spec.nonnative_fraction = j.at("nonnative_fraction").get<double>();
  }
  if (j.contains("nonnative_extra_noise")) {
    spec.nonnative_extra_noise = j.at("nonnative_extra_noise").get<double>();
  }
  validate_domain(spec, feature_dim, name);
  return spec;
}

}  // namespace

bool Record::operator==(const Record& other) const {
  if (task_label != other.task_label || domain_label != other.domain_label ||
      native != other.native) {
    return false;
  }
  if (features.size() != other.features.size() || features != other.features) return false;
  if (soft_domain.has_value() != other.soft_domain.has_value()) return false;
  if (soft_domain && (soft_domain->size() != other.soft_domain->size() ||
                      *soft_domain != *other.soft_domain)) {
    return false;
  }
  return true;
}

Matrix Dataset::feature_matrix() const {
  if (records.empty()) throw ValidationError("feature_matrix: empty dataset");
  const Index d = records.front().features.size();
  Matrix x(static_cast<Index>(records.size()), d);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].features.size() != d) {
      throw ValidationError("feature_matrix: inconsistent feature widths");
    }
    x.row(static_cast<Index>(i)) = records[i].features.transpose();
  }
  return x;
}

std::vector<int> Dataset::task_labels() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.task_label);
  return out;
}

std::vector<int> Dataset::domain_labels() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.domain_label);
  return out;
}

bool Dataset::has_soft_labels() const {
  if (records.empty()) return false;
  for (const auto& r : records) {
    if (!r.soft_domain) return false;
  }
  return true;
}

Matrix Dataset::soft_label_matrix() const {
  if (!has_soft_labels()) {
    throw ValidationError("soft_label_matrix: dataset lacks soft domain labels");
  }
  const Index n = records.front().soft_domain->size();
  Matrix out(static_cast<Index>(records.size()), n);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].soft_domain->size() != n) {
      throw ValidationError("soft_label_matrix: inconsistent soft label widths");
    }
    out.row(static_cast<Index>(i)) = records[i].soft_domain->transpose();
  }
  return out;
}

GenConfig GenConfig::defaults() {
  GenConfig config;
  config.domains.resize(3);
  for (int j = 0; j < 3; ++j) {
    config.domains[j].rotation_angle = kDefaultAngleStep * j;
    config.domains[j].offset = Vector::Zero(config.feature_dim);
    config.domains[j].offset(2 + j) = kDefaultOffset;
    config.domains[j].noise_scale = kDefaultNoise;
    config.domains[j].nonnative_extra_noise = kDefaultNoise;
  }
  // The unseen domain interpolates the last two seen domains.
  config.unseen.rotation_angle =
      0.5 * (config.domains[1].rotation_angle + config.domains[2].rotation_angle);
  config.unseen.offset = 0.5 * (config.domains[1].offset + config.domains[2].offset);
  config.unseen.noise_scale = kDefaultNoise;
  config.unseen.nonnative_extra_noise = kDefaultNoise;
  config.min_probe_accuracy = 0.8;
  return config;
}

void GenConfig::validate() const {
  if (feature_dim < 2) {
    throw ValidationError("feature_dim must be at least 2, got " + std::to_string(feature_dim));
  }
  if (n_task_classes < 2) {
    throw ValidationError("n_task_classes must be at least 2, got " +
                          std::to_string(n_task_classes));
  }
  if (n_seen_domains < 2) {
    throw ValidationError("n_seen_domains must be at least 2, got " +
                          std::to_string(n_seen_domains));
  }
  if (samples_per_domain < 10) {
    throw ValidationError("samples_per_domain must be at least 10, got " +
                          std::to_string(samples_per_domain));
  }
  if (static_cast<int>(domains.size()) != n_seen_domains) {
    throw ValidationError("domains has " + std::to_string(domains.size()) +
                          " entries, expected n_seen_domains = " + std::to_string(n_seen_domains));
  }
  for (std::size_t j = 0; j < domains.size(); ++j) {
    validate_domain(domains[j], feature_dim, "domains[" + std::to_string(j) + "]");
  }
  validate_domain(unseen, feature_dim, "unseen");
  if (min_probe_accuracy < 0.0 || min_probe_accuracy > 1.0) {
    throw ValidationError("min_probe_accuracy must lie in [0, 1], got " +
                          std::to_string(min_probe_accuracy));
  }
}

GenResult generate(const GenConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const Matrix means = class_means(config.n_task_classes, config.feature_dim);

  GenResult result;
  for (int j = 0; j < config.n_seen_domains; ++j) {
    Dataset domain = generate_domain(config.domains[static_cast<std::size_t>(j)], j,
                                     config.samples_per_domain, means, config.feature_dim, rng);
    const std::size_t n_train = static_cast<std::size_t>(config.samples_per_domain) * 4 / 5;
    for (std::size_t i = 0; i < domain.records.size(); ++i) {
      (i < n_train ? result.train : result.test_seen).records.push_back(std::move(domain.records[i]));
    }
  }
  result.test_unseen = generate_domain(config.unseen, config.n_seen_domains,
                                       config.samples_per_domain, means, config.feature_dim, rng);

  result.domain_probe_accuracy =
      probe::linear_probe_accuracy(result.train.feature_matrix(), result.train.domain_labels(),
                                   config.n_seen_domains, mix_seed(config.seed, 1000));
  if (config.min_probe_accuracy > 0.0 &&
      result.domain_probe_accuracy < config.min_probe_accuracy) {
    throw ValidationError("domain separability precondition failed: raw-feature probe accuracy " +
                          std::to_string(result.domain_probe_accuracy) + " below min_probe_accuracy " +
                          std::to_string(config.min_probe_accuracy));
  }
  return result;
}

void write_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  for (const auto& rec : dataset.records) {
    out << record_to_json(rec).dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  Dataset out;
  std::string line;
  long line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) throw ParseError(path, line_number, "blank line");
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(path, line_number, e.what());
    }
    out.records.push_back(record_from_json(j, path, line_number));
  }
  if (out.records.empty()) throw ParseError(path, 0, "no records in dataset file");
  return out;
}

GenConfig read_gen_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path, 0, e.what());
  }

  GenConfig config = GenConfig::defaults();
  if (j.contains("feature_dim")) config.feature_dim = j.at("feature_dim").get<int>();
  if (j.contains("n_task_classes")) config.n_task_classes = j.at("n_task_classes").get<int>();
  if (j.contains("n_seen_domains")) config.n_seen_domains = j.at("n_seen_domains").get<int>();
  if (j.contains("samples_per_domain")) {
    config.samples_per_domain = j.at("samples_per_domain").get<int>();
  }
  if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("min_probe_accuracy")) {
    config.min_probe_accuracy = j.at("min_probe_accuracy").get<double>();
  }

  if (j.contains("domains")) {
    const auto& arr = j.at("domains");
    if (!arr.is_array()) throw ValidationError("domains must be an array");
    config.domains.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      config.domains.push_back(
          domain_from_json(arr[i], config.feature_dim, "domains[" + std::to_string(i) + "]"));
    }
  } else if (config.n_seen_domains != static_cast<int>(config.domains.size()) ||
             config.feature_dim != GenConfig().feature_dim) {
    // Re-derive default-style domains for non-default dimensions.
    config.domains.clear();
    for (int jdx = 0; jdx < config.n_seen_domains; ++jdx) {
      DomainSpec spec;
      spec.rotation_angle = kDefaultAngleStep * jdx;
      spec.offset = Vector::Zero(config.feature_dim);
      spec.offset((2 + jdx) % config.feature_dim) = kDefaultOffset;
      spec.noise_scale = kDefaultNoise;
      spec.nonnative_extra_noise = kDefaultNoise;
      config.domains.push_back(std::move(spec));
    }
    const auto& a = config.domains[config.domains.size() - 2];
    const auto& b = config.domains[config.domains.size() - 1];
    config.unseen.rotation_angle = 0.5 * (a.rotation_angle + b.rotation_angle);
    config.unseen.offset = 0.5 * (a.offset + b.offset);
  }
  if (j.contains("unseen")) {
    config.unseen = domain_from_json(j.at("unseen"), config.feature_dim, "unseen");
  }
  config.validate();
  return config;
}

}  // namespace datlab::datagen
