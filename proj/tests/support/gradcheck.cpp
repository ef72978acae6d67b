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

#include "support/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pricenego::testing {

GradCheck CheckGradients(const std::vector<Parameter*>& params, const LossFn& loss, double h, double floor,
                         size_t max_entries, uint64_t seed) {
  for (Parameter* p : params) p->grad.setZero();
  {
    ad::Graph g;
    g.Backward(loss(g));
  }
  std::mt19937_64 rng(seed);
  GradCheck out;
  for (Parameter* p : params) {
    const Matrix analytic = p->grad;
    std::vector<Eigen::Index> entries(static_cast<size_t>(p->value.size()));
    std::iota(entries.begin(), entries.end(), Eigen::Index{0});
    if (max_entries > 0 && entries.size() > max_entries) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(max_entries);
    }
    for (Eigen::Index k : entries) {
      double& x = p->value.data()[k];
      const double saved = x;
      x = saved + h;
      double plus, minus;
      {
        ad::Graph g(false);
        plus = loss(g).scalar();
      }
      x = saved - h;
      {
        ad::Graph g(false);
        minus = loss(g).scalar();
      }
      x = saved;
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic.data()[k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++out.checked;
      if (rel > out.max_relative_error || !std::isfinite(rel)) {
        out.max_relative_error = std::isfinite(rel) ? rel : INFINITY;
        const Eigen::Index rows = p->value.rows();
        out.worst = p->name + "[" + std::to_string(k % rows) + "," + std::to_string(k / rows) + "]";
      }
    }
  }
  return out;
}

ad::Var RandomProjection(ad::Var v, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix w(v.value().rows(), v.value().cols());
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = n(rng);
  return ad::Sum(ad::Hadamard(v, v.graph().Constant(w)));
}

}  // namespace pricenego::testing
