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

#include "support/world.hpp"

#include <array>
#include <cmath>
#include <filesystem>

#include "pricenego/pricing.hpp"
#include "pricenego/text.hpp"

namespace pricenego::testing {

namespace {

constexpr std::array<const char*, kNumCategories> kNouns = {"bike", "car", "laptop", "sofa", "apartment", "phone"};
constexpr std::array<double, kNumCategories> kBaseListing = {300, 6000, 800, 400, 1500, 350};
constexpr std::array<const char*, 3> kTiers = {"budget", "standard", "premium"};
constexpr std::array<const char*, 3> kConditions = {"fair", "good", "excellent"};
constexpr std::array<double, 3> kBuyerTargets = {0.5, 0.6, 0.7};

std::string Money(double p) { return FormatPrice(p); }

}  // namespace

std::vector<const Item*> World::all_items() const {
  std::vector<const Item*> out;
  for (const CatalogItem& it : catalog) out.push_back(&it);
  for (const Scenario& s : scenarios) out.push_back(&s.item);
  return out;
}

std::vector<CatalogItem> MakeItems(int n, const std::string& prefix, int feature_dim, double noise,
                                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> spread(-1.0, 1.0);
  std::normal_distribution<double> jitter(0.0, noise);
  std::uniform_int_distribution<int> condition(0, 2);
  std::vector<CatalogItem> items;
  for (int i = 0; i < n; ++i) {
    const int c = i % kNumCategories;
    const double z = spread(rng);  // standardized log listing
    nlohmann::json j;
    j["id"] = prefix + std::to_string(i);
    j["category"] = CategoryName(static_cast<Category>(c));
    const double listing = RoundToCents(kBaseListing[static_cast<size_t>(c)] * std::exp(0.8 * z));
    j["listing_price"] = listing;
    const char* tier = kTiers[static_cast<size_t>(z < -0.33 ? 0 : (z < 0.33 ? 1 : 2))];
    const char* noun = kNouns[static_cast<size_t>(c)];
    j["title"] = std::string(tier) + " " + noun;
    j["description"] = std::string(noun) + " in " + kConditions[static_cast<size_t>(condition(rng))] + " condition";
    std::vector<double> f(static_cast<size_t>(feature_dim), 0.0);
    // A positive offset keeps cosines informative about z.
    f[0] = 1.0;
    if (feature_dim > 1) f[1] = z + jitter(rng);
    if (feature_dim > 2) f[2] = z * z + jitter(rng);
    for (int k = 3; k < feature_dim; ++k) f[static_cast<size_t>(k)] = jitter(rng);
    j["image_features"] = f;
    items.push_back(ItemFromJson(j));
  }
  return items;
}

Scenario MakeScenario(const Item& item, int index) {
  nlohmann::json j = ItemToJson(item);
  const double listing = item.listing_price;
  j["seller_bottom"] = RoundToCents(kSellerBottomFraction * listing);
  j["buyer_target"] = RoundToCents(kBuyerTargets[static_cast<size_t>(index) % kBuyerTargets.size()] * listing);
  j["image_url"] = "https://example.invalid/" + item.id + ".jpg";
  return ScenarioFromJson(j);
}

Dialogue MakeDialogue(const Scenario& s, double fraction) {
  const double listing = s.listing_price();
  const std::string noun = kNouns[static_cast<size_t>(s.item.category)];
  const double b1 = RoundToCents(s.buyer_target + 0.2 * (listing - s.buyer_target));
  const double s1 = RoundToCents(0.97 * listing);
  const double p = RoundToCents(std::clamp(fraction * listing, b1 + 0.01, s1 - 0.01));
  nlohmann::json turns = nlohmann::json::array();
  auto say = [&](const char* who, const std::string& text) {
    turns.push_back({{"speaker", who}, {"text", text}});
  };
  say("buyer", "hi is the " + noun + " still available");
  say("seller", "yes it is . it is in great shape");
  say("buyer", "would you take " + Money(b1));
  say("seller", "i can do " + Money(s1));
  say("buyer", "how about " + Money(p));
  turns.push_back({{"speaker", "seller"}, {"text", "ok " + Money(p) + " works"}, {"event", {{"type", "offer"}, {"price", p}}}});
  turns.push_back({{"speaker", "buyer"}, {"text", "deal"}, {"event", {{"type", "accept"}}}});
  nlohmann::json j = {{"scenario_id", s.id()}, {"turns", turns}, {"outcome", {{"agreed", true}, {"price", p}}}};
  ScenarioIndex index{{s.id(), &s}};
  Dialogue d = DialogueFromJson(j, index);
  DeriveLabels(d, s);
  return d;
}

World MakeWorld(const WorldOptions& options) {
  World w;
  w.options = options;
  std::mt19937_64 rng(options.seed);
  w.catalog = MakeItems(options.catalog_items, "c", options.feature_dim, options.feature_noise, rng);
  std::vector<CatalogItem> items = MakeItems(options.scenarios, "s", options.feature_dim, options.feature_noise, rng);
  for (int i = 0; i < options.scenarios; ++i) w.scenarios.push_back(MakeScenario(items[static_cast<size_t>(i)], i));
  std::uniform_real_distribution<double> settle(kFairFraction - options.settle_spread,
                                                kFairFraction + options.settle_spread);
  for (const Scenario& s : w.scenarios) {
    for (int k = 0; k < options.dialogues_per_scenario; ++k) w.dialogues.push_back(MakeDialogue(s, settle(rng)));
  }
  w.words = std::make_unique<WordVectors>(options.word_dim);
  w.index = std::make_unique<Catalog>(w.catalog, *w.words);
  return w;
}

ModelConfig SmallModelConfig(const World& world, int dim) {
  ModelConfig c;
  c.feature_dim = world.options.feature_dim;
  c.dim = dim;
  c.layers = 1;
  c.policy_hidden = 16;
  c.ave_hidden = 16;
  c.neighbors = 8;
  c.similarity_dim = world.options.word_dim;
  c.seed = 11;
  return c;
}

std::unique_ptr<Model> MakeModel(const World& world, const ModelConfig& config) {
  const auto items = world.all_items();
  return std::make_unique<Model>(config, BuildOveVocabulary(items), BuildDialogueVocabulary(items, world.dialogues));
}

TrainConfig QuickTrainConfig(int epochs) {
  TrainConfig c;
  for (Schedule* s : {&c.ove, &c.ave, &c.language, &c.policy}) {
    s->lr_high = 1e-2;
    s->epochs_high = epochs;
    s->lr_low = 1e-3;
    s->epochs_low = 0;
  }
  c.batch_size = 8;
  c.dropout = 0.0;
  c.rl_episodes = 50;
  c.rl_lr = 1e-3;
  return c;
}

std::string TempPath(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "pricenego_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace pricenego::testing
