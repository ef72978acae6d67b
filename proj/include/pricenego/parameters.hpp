// Copyright 2026 The pricenego Authors
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

#ifndef PRICENEGO_PARAMETERS_HPP_
#define PRICENEGO_PARAMETERS_HPP_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pricenego/autodiff.hpp"

namespace pricenego {

// Named tensors with stable addresses (std::map nodes never move), so model
// blocks can hold Parameter pointers for the store's lifetime.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  Parameter& Add(const std::string& name, Matrix value);
  // Uniform(-scale, scale) initialization.
  Parameter& AddUniform(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                        double scale, std::mt19937_64& rng);
  Parameter& AddZeros(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;
  bool Contains(const std::string& name) const { return params_.count(name) > 0; }

  // Parameters whose name starts with `prefix`, in name order.
  std::vector<Parameter*> WithPrefix(const std::string& prefix);
  std::vector<Parameter*> All() { return WithPrefix(""); }
  size_t size() const { return params_.size(); }

  void ZeroGrad();
  size_t ScalarCount() const;

  // Copies values for every name present in both stores; shapes must agree.
  void CopyValuesFrom(const ParameterStore& other);

  const std::map<std::string, Parameter>& entries() const { return params_; }

 private:
  std::map<std::string, Parameter> params_;
};

// Binary checkpoint: "PNCKPT\0\1", u32 version, u64 metadata length, metadata
// bytes (UTF-8 JSON), u32 tensor count, then per tensor u32 name length, name,
// u32 rows, u32 cols and rows*cols little-endian IEEE-754 doubles in
// row-major order. Round-trips bit-exactly.
struct Checkpoint {
  std::string metadata;
  std::map<std::string, Matrix> tensors;
};

inline constexpr uint32_t kCheckpointVersion = 1;

void WriteCheckpoint(const std::string& path, const std::string& metadata, const ParameterStore& store);
Checkpoint ReadCheckpoint(const std::string& path);
std::string SerializeCheckpoint(const std::string& metadata, const ParameterStore& store);
Checkpoint ParseCheckpoint(const std::string& bytes);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over an explicit parameter list. Moments are
// keyed by parameter name.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Applies one update from the parameters' current gradients. A NaN or
  // infinite gradient aborts the whole step before any parameter changes.
  void Step(const std::vector<Parameter*>& params, double learning_rate);
  int64_t steps() const { return step_; }

 private:
  struct Moments {
    Matrix m;
    Matrix v;
  };
  AdamOptions options_;
  int64_t step_ = 0;
  std::map<std::string, Moments> moments_;
};

// Rescales gradients in place so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double ClipGradNorm(const std::vector<Parameter*>& params, double max_norm);

}  // namespace pricenego

#endif  // PRICENEGO_PARAMETERS_HPP_
