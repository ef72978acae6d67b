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

#ifndef PRICENEGO_NN_HPP_
#define PRICENEGO_NN_HPP_

#include <random>
#include <string>
#include <vector>

#include "pricenego/autodiff.hpp"
#include "pricenego/parameters.hpp"

namespace pricenego {

// Training-time switches threaded through every forward pass.
struct ForwardMode {
  bool training = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;

  ad::Var MaybeDropout(ad::Var v) const {
    if (!training || dropout <= 0.0 || rng == nullptr) return v;
    return ad::Dropout(v, dropout, *rng);
  }
};

inline const ForwardMode kInference{};

// Uniform draw in [0, 1) from the top 53 bits, independent of the standard
// library's distribution implementations.
double Uniform01(std::mt19937_64& rng);
// Index drawn proportionally to nonnegative `weights`.
int SampleIndex(const double* weights, int n, std::mt19937_64& rng);

class Linear {
 public:
  Linear() = default;
  // Glorot-uniform weights, zero bias.
  Linear(ParameterStore& store, const std::string& name, int in, int out, std::mt19937_64& rng);

  ad::Var operator()(ad::Graph& g, ad::Var x) const;
  Parameter& weight() const { return *weight_; }
  Parameter& bias() const { return *bias_; }
  int in() const { return static_cast<int>(weight_->value.cols()); }
  int out() const { return static_cast<int>(weight_->value.rows()); }

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

// Affine layers with ReLU between them; the last layer is linear.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& name, const std::vector<int>& sizes, std::mt19937_64& rng);

  ad::Var operator()(ad::Graph& g, ad::Var x, const ForwardMode& mode) const;
  const std::vector<Linear>& layers() const { return layers_; }

 private:
  std::vector<Linear> layers_;
};

// Stacked LSTM advanced one step at a time.
class Lstm {
 public:
  struct State {
    std::vector<ad::Var> h;
    std::vector<ad::Var> c;
    ad::Var top() const { return h.back(); }
  };
  // Plain values, for carrying state across graphs.
  struct StateValues {
    std::vector<Vector> h;
    std::vector<Vector> c;
  };

  Lstm() = default;
  Lstm(ParameterStore& store, const std::string& name, int input, int hidden, int layers, std::mt19937_64& rng);

  State Zero(ad::Graph& g) const;
  State FromValues(ad::Graph& g, const StateValues& values) const;
  static StateValues Values(const State& state);
  State Step(ad::Graph& g, const State& state, ad::Var x, const ForwardMode& mode) const;

  int hidden() const { return hidden_; }
  int layers() const { return static_cast<int>(w_input_.size()); }

 private:
  int hidden_ = 0;
  std::vector<Parameter*> w_input_;
  std::vector<Parameter*> w_hidden_;
  std::vector<Parameter*> bias_;
};

}  // namespace pricenego

#endif  // PRICENEGO_NN_HPP_
