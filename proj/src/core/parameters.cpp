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

#include "pricenego/parameters.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pricenego/error.hpp"

namespace pricenego {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian hosts");

Parameter& ParameterStore::Add(const std::string& name, Matrix value) {
  auto [it, inserted] = params_.try_emplace(name, name, std::move(value));
  if (!inserted) Fail(ErrorKind::kInvalidArgument, "duplicate parameter " + name);
  return it->second;
}

Parameter& ParameterStore::AddUniform(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                                      double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return Add(name, std::move(m));
}

Parameter& ParameterStore::AddZeros(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  return Add(name, Matrix::Zero(rows, cols));
}

Parameter& ParameterStore::Get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) Fail(ErrorKind::kNotFound, "no parameter named " + name);
  return it->second;
}

const Parameter& ParameterStore::Get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) Fail(ErrorKind::kNotFound, "no parameter named " + name);
  return it->second;
}

std::vector<Parameter*> ParameterStore::WithPrefix(const std::string& prefix) {
  std::vector<Parameter*> out;
  for (auto& [name, p] : params_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.push_back(&p);
  }
  return out;
}

void ParameterStore::ZeroGrad() {
  for (auto& [name, p] : params_) p.grad.setZero();
}

size_t ParameterStore::ScalarCount() const {
  size_t n = 0;
  for (const auto& [name, p] : params_) n += static_cast<size_t>(p.value.size());
  return n;
}

void ParameterStore::CopyValuesFrom(const ParameterStore& other) {
  for (auto& [name, p] : params_) {
    auto it = other.params_.find(name);
    if (it == other.params_.end()) continue;
    if (it->second.value.rows() != p.value.rows() || it->second.value.cols() != p.value.cols()) {
      Fail(ErrorKind::kInvalidArgument, "shape mismatch copying " + name);
    }
    p.value = it->second.value;
  }
}

namespace {

constexpr char kMagic[8] = {'P', 'N', 'C', 'K', 'P', 'T', '\0', '\1'};

template <typename T>
void PutRaw(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  template <typename T>
  T Get() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string GetString(size_t n) {
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void Need(size_t n) {
    if (pos_ + n > bytes_.size()) Fail(ErrorKind::kParse, "checkpoint truncated");
  }
  const std::string& bytes_;
  size_t pos_ = 0;
};

}  // namespace

std::string SerializeCheckpoint(const std::string& metadata, const ParameterStore& store) {
  std::string out(kMagic, sizeof(kMagic));
  PutRaw<uint32_t>(out, kCheckpointVersion);
  PutRaw<uint64_t>(out, metadata.size());
  out += metadata;
  PutRaw<uint32_t>(out, static_cast<uint32_t>(store.size()));
  for (const auto& [name, p] : store.entries()) {
    PutRaw<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out += name;
    PutRaw<uint32_t>(out, static_cast<uint32_t>(p.value.rows()));
    PutRaw<uint32_t>(out, static_cast<uint32_t>(p.value.cols()));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) PutRaw<double>(out, p.value(r, c));
    }
  }
  return out;
}

Checkpoint ParseCheckpoint(const std::string& bytes) {
  Reader in(bytes);
  if (in.GetString(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    Fail(ErrorKind::kParse, "not a pricenego checkpoint");
  }
  uint32_t version = in.Get<uint32_t>();
  if (version != kCheckpointVersion) {
    Fail(ErrorKind::kParse, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.metadata = in.GetString(in.Get<uint64_t>());
  uint32_t count = in.Get<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = in.GetString(in.Get<uint32_t>());
    uint32_t rows = in.Get<uint32_t>();
    uint32_t cols = in.Get<uint32_t>();
    Matrix m(rows, cols);
    for (uint32_t r = 0; r < rows; ++r) {
      for (uint32_t c = 0; c < cols; ++c) m(r, c) = in.Get<double>();
    }
    ckpt.tensors.emplace(std::move(name), std::move(m));
  }
  if (!in.done()) Fail(ErrorKind::kParse, "trailing bytes in checkpoint");
  return ckpt;
}

void WriteCheckpoint(const std::string& path, const std::string& metadata, const ParameterStore& store) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) Fail(ErrorKind::kIo, "cannot write " + path);
  std::string bytes = SerializeCheckpoint(metadata, store);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) Fail(ErrorKind::kIo, "write failed for " + path);
}

Checkpoint ReadCheckpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) Fail(ErrorKind::kIo, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ParseCheckpoint(ss.str());
}

void Adam::Step(const std::vector<Parameter*>& params, double learning_rate) {
  for (const Parameter* p : params) {
    if (!p->grad.allFinite()) Fail(ErrorKind::kNumeric, "non-finite gradient in " + p->name);
  }
  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (Parameter* p : params) {
    auto [it, inserted] = moments_.try_emplace(p->name);
    Moments& mo = it->second;
    if (inserted) {
      mo.m = Matrix::Zero(p->value.rows(), p->value.cols());
      mo.v = Matrix::Zero(p->value.rows(), p->value.cols());
    }
    mo.m = b1 * mo.m + (1.0 - b1) * p->grad;
    mo.v = b2 * mo.v + (1.0 - b2) * p->grad.cwiseProduct(p->grad);
    p->value.array() -= learning_rate * (mo.m.array() / c1) / ((mo.v.array() / c2).sqrt() + options_.epsilon);
  }
}

double ClipGradNorm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) sq += p->grad.squaredNorm();
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    double s = max_norm / norm;
    for (Parameter* p : params) p->grad *= s;
  }
  return norm;
}

}  // namespace pricenego
