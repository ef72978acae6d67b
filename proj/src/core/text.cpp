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

#include "pricenego/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "pricenego/error.hpp"

namespace pricenego {

std::string_view RoleName(Role r) { return r == Role::kSeller ? "seller" : "buyer"; }

Role ParseRole(std::string_view name) {
  if (name == "seller") return Role::kSeller;
  if (name == "buyer") return Role::kBuyer;
  Fail(ErrorKind::kParse, "unknown role '" + std::string(name) + "'");
}

namespace {
constexpr std::array<std::string_view, kNumCategories> kCategoryNames = {
    "bike", "car", "electronics", "furniture", "housing", "phone"};
constexpr std::array<std::string_view, kNumActions> kActionNames = {
    "negotiate", "concede", "offer", "accept", "reject", "quit"};
constexpr std::array<std::string_view, 4> kEventNames = {"offer", "accept", "reject", "quit"};
}  // namespace

std::string_view CategoryName(Category c) { return kCategoryNames[static_cast<size_t>(c)]; }

Category ParseCategory(std::string_view name) {
  for (size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  }
  Fail(ErrorKind::kParse, "unknown category '" + std::string(name) + "'");
}

std::string_view ActionName(Action a) { return kActionNames[static_cast<size_t>(a)]; }

Action ParseAction(std::string_view name) {
  for (size_t i = 0; i < kActionNames.size(); ++i) {
    if (kActionNames[i] == name) return static_cast<Action>(i);
  }
  Fail(ErrorKind::kParse, "unknown action '" + std::string(name) + "'");
}

std::string_view EventName(EventType e) { return kEventNames[static_cast<size_t>(e)]; }

EventType ParseEvent(std::string_view name) {
  for (size_t i = 0; i < kEventNames.size(); ++i) {
    if (kEventNames[i] == name) return static_cast<EventType>(i);
  }
  Fail(ErrorKind::kParse, "unknown event type '" + std::string(name) + "'");
}

RatioClass NearestRatio(double step) {
  int best = 0;
  double best_dist = std::abs(step);
  for (int k = 1; k < kNumRatios; ++k) {
    double d = std::abs(step - 0.2 * k);
    // Strict comparison keeps the smaller class on ties; the epsilon absorbs
    // the inexact representation of the grid points.
    if (d < best_dist - 1e-12) {
      best = k;
      best_dist = d;
    }
  }
  return RatioFromIndex(best);
}

namespace {

bool IsDigit(char c) { return c >= '0' && c <= '9'; }
bool IsAlpha(char c) { return (c >= 'a' && c <= 'z') || static_cast<unsigned char>(c) >= 0x80; }
bool IsWordChar(char c) { return IsDigit(c) || IsAlpha(c); }

struct Numeral {
  double value = 0.0;
  size_t end = 0;
};

// Parses digits with optional ",ddd" groups, ".d+" decimals and a "k"
// suffix starting at `i`. Fails when the run continues into letters.
std::optional<Numeral> ParseNumeral(const std::string& s, size_t i) {
  size_t j = i;
  if (j >= s.size() || !IsDigit(s[j])) return std::nullopt;
  std::string digits;
  while (j < s.size() && IsDigit(s[j])) digits += s[j++];
  while (j + 3 < s.size() && s[j] == ',' && IsDigit(s[j + 1]) && IsDigit(s[j + 2]) &&
         IsDigit(s[j + 3]) && !(j + 4 < s.size() && IsDigit(s[j + 4]))) {
    digits += s.substr(j + 1, 3);
    j += 4;
  }
  if (j + 1 < s.size() && s[j] == '.' && IsDigit(s[j + 1])) {
    digits += '.';
    ++j;
    while (j < s.size() && IsDigit(s[j])) digits += s[j++];
  }
  double value = std::stod(digits);
  if (j < s.size() && s[j] == 'k' && (j + 1 >= s.size() || !IsWordChar(s[j + 1]))) {
    value *= 1000.0;
    ++j;
  }
  if (j < s.size() && IsWordChar(s[j])) return std::nullopt;
  return Numeral{value, j};
}

size_t ScanWord(const std::string& s, size_t i) {
  size_t j = i;
  while (j < s.size()) {
    if (IsWordChar(s[j])) {
      ++j;
    } else if (s[j] == '\'' && j + 1 < s.size() && IsAlpha(s[j + 1]) && j > i) {
      ++j;
    } else {
      break;
    }
  }
  return j;
}

AbstractedText Scan(std::string_view text, bool abstract, std::optional<double> listing) {
  std::string s(text);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  AbstractedText out;
  size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '$' && abstract) {
      size_t j = i + 1;
      if (j < s.size() && s[j] == ' ') ++j;
      if (auto num = ParseNumeral(s, j)) {
        out.tokens.emplace_back(kPriceToken);
        out.prices.push_back(num->value);
        i = num->end;
        continue;
      }
      out.tokens.emplace_back("$");
      ++i;
      continue;
    }
    if (IsDigit(c)) {
      if (auto num = ParseNumeral(s, i)) {
        bool is_price = abstract && listing.has_value() && num->value >= 0.2 * *listing &&
                        num->value <= 2.0 * *listing;
        if (is_price) {
          out.tokens.emplace_back(kPriceToken);
          out.prices.push_back(num->value);
        } else {
          out.tokens.push_back(s.substr(i, num->end - i));
        }
        i = num->end;
        continue;
      }
    }
    if (IsWordChar(c)) {
      size_t j = ScanWord(s, i);
      out.tokens.push_back(s.substr(i, j - i));
      i = j;
      continue;
    }
    out.tokens.emplace_back(1, c);
    ++i;
  }
  return out;
}

}  // namespace

AbstractedText TokenizeWithPrices(std::string_view text, std::optional<double> listing_price) {
  return Scan(text, true, listing_price);
}

Tokens Tokenize(std::string_view text) { return Scan(text, false, std::nullopt).tokens; }

std::string FormatPrice(double price) {
  char buf[64];
  double rounded = std::round(price);
  if (std::abs(price - rounded) < 1e-9) {
    std::snprintf(buf, sizeof(buf), "$%.0f", rounded);
  } else {
    std::snprintf(buf, sizeof(buf), "$%.2f", price);
  }
  return buf;
}

std::string Detokenize(const Tokens& tokens, const std::vector<double>& prices) {
  std::string out;
  size_t next_price = 0;
  for (const std::string& t : tokens) {
    if (!out.empty()) out += ' ';
    if (t == kPriceToken && next_price < prices.size()) {
      out += FormatPrice(prices[next_price++]);
    } else {
      out += t;
    }
  }
  return out;
}

bool LooksNumeric(std::string_view token) {
  if (token.empty()) return false;
  if (token.front() == '$') return true;
  bool digit = false;
  for (char c : token) {
    if (IsDigit(c)) {
      digit = true;
    } else if (c != ',' && c != '.' && c != 'k') {
      return false;
    }
  }
  return digit;
}

Vocabulary::Vocabulary() {
  Insert(std::string(kPadToken));
  Insert(std::string(kUnknownToken));
  Insert(std::string(kEndToken));
  Insert(std::string(kPriceToken));
  for (Role r : kRoles) {
    for (Action a : kActions) Insert(StartTokenText(r, a));
  }
}

std::string Vocabulary::StartTokenText(Role role, Action action) {
  return "<" + std::string(RoleName(role)) + ":" + std::string(ActionName(action)) + ">";
}

void Vocabulary::Insert(const std::string& token) {
  if (index_.count(token)) return;
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

Vocabulary Vocabulary::Build(const std::vector<const Tokens*>& corpora) {
  std::set<std::string> distinct;
  for (const Tokens* seq : corpora) {
    for (const std::string& t : *seq) {
      if (!LooksNumeric(t)) distinct.insert(t);
    }
  }
  Vocabulary v;
  for (const std::string& t : distinct) v.Insert(t);
  return v;
}

Vocabulary Vocabulary::FromTokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  if (tokens.size() < static_cast<size_t>(kNumReserved)) {
    Fail(ErrorKind::kParse, "vocabulary is missing reserved tokens");
  }
  for (int i = 0; i < kNumReserved; ++i) {
    if (tokens[static_cast<size_t>(i)] != v.tokens_[static_cast<size_t>(i)]) {
      Fail(ErrorKind::kParse, "vocabulary reserved token mismatch at " + std::to_string(i));
    }
  }
  for (size_t i = kNumReserved; i < tokens.size(); ++i) {
    if (LooksNumeric(tokens[i])) Fail(ErrorKind::kInvariant, "numeric token in vocabulary: " + tokens[i]);
    v.Insert(tokens[i]);
  }
  return v;
}

int Vocabulary::Id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnknown : it->second;
}

std::vector<int> Vocabulary::Encode(const Tokens& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(Id(t));
  return ids;
}

WordVectors WordVectors::Load(const std::string& path) {
  std::ifstream f(path);
  if (!f) Fail(ErrorKind::kIo, "cannot open embeddings file " + path);
  std::string line;
  int dim = -1;
  size_t line_no = 0;
  std::unordered_map<std::string, Vector> table;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> values;
    double x;
    while (ss >> x) values.push_back(x);
    if (!ss.eof()) Fail(ErrorKind::kParse, path + ":" + std::to_string(line_no) + ": malformed number");
    if (dim < 0) dim = static_cast<int>(values.size());
    if (static_cast<int>(values.size()) != dim || dim == 0) {
      Fail(ErrorKind::kParse, path + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                                  " values, got " + std::to_string(values.size()));
    }
    table[token] = Eigen::Map<Vector>(values.data(), dim);
  }
  if (dim <= 0) Fail(ErrorKind::kParse, "embeddings file " + path + " is empty");
  WordVectors wv(dim);
  wv.table_ = std::move(table);
  return wv;
}

void WordVectors::Set(const std::string& token, Vector v) {
  if (v.size() != dim_) Fail(ErrorKind::kInvalidArgument, "word vector dimension mismatch");
  table_[token] = std::move(v);
}

Vector WordVectors::Lookup(const std::string& token) const {
  auto it = table_.find(token);
  if (it != table_.end()) return it->second;
  uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::mt19937_64 rng(h);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  Vector v(dim_);
  for (int i = 0; i < dim_; ++i) v[i] = dist(rng);
  return v;
}

Vector WordVectors::SumOf(const Tokens& tokens) const {
  Vector v = Vector::Zero(dim_);
  for (const std::string& t : tokens) v += Lookup(t);
  return v;
}

}  // namespace pricenego
