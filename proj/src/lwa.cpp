/* Copyright 2026 The LWA Toolkit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "lwa/lwa.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "lwa/error.hpp"
#include "lwa/raster_io.hpp"

namespace lwa {

namespace fs = std::filesystem;

ConditionStack::ConditionStack(std::vector<ConditionMap> maps) {
  for (auto& m : maps) insert(std::move(m));
}

void ConditionStack::insert(ConditionMap map) {
  if (find(map.modality())) {
    throw Error(ErrorCode::kInvalidArgument,
                "duplicate " + std::string(to_string(map.modality())) + " map");
  }
  if (!maps_.empty() && !(maps_.front().domain() == map.domain())) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(to_string(map.modality())) +
                    " map does not share the stack's pixel domain");
  }
  auto pos = std::find_if(maps_.begin(), maps_.end(), [&](const ConditionMap& m) {
    return canonical_rank(m.modality()) > canonical_rank(map.modality());
  });
  maps_.insert(pos, std::move(map));
}

const ConditionMap* ConditionStack::find(Modality modality) const {
  for (const auto& m : maps_) {
    if (m.modality() == modality) return &m;
  }
  return nullptr;
}

ConditionMap* ConditionStack::find(Modality modality) {
  for (auto& m : maps_) {
    if (m.modality() == modality) return &m;
  }
  return nullptr;
}

const ConditionMap& ConditionStack::at(Modality modality) const {
  if (const ConditionMap* m = find(modality)) return *m;
  throw Error(ErrorCode::kMissingModality,
              std::string(to_string(modality)) + " map not present");
}

std::optional<PixelDomain> ConditionStack::domain() const {
  if (maps_.empty()) return std::nullopt;
  return maps_.front().domain();
}

WorldLayer::WorldLayer(Role role, ConditionStack conditions)
    : role_(role), conditions_(std::move(conditions)) {
  if (conditions_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "world layer needs at least one condition");
  }
}

int WorldLayer::total_channels() const {
  int d = 0;
  for (const auto& m : conditions_.maps()) d += m.channels();
  return d;
}

Lwa::Lwa(PixelDomain domain, std::vector<LayerEntry> entries)
    : domain_(domain), entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (!(e.layer.domain() == domain_) || !(e.mask.domain() == domain_)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "layer " + std::string(to_string(e.layer.role())) +
                      " does not match the abstraction's pixel domain");
    }
    for (std::size_t k = 0; k < i; ++k) {
      if (entries_[k].layer.role() == e.layer.role()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "duplicate role " + std::string(to_string(e.layer.role())));
      }
    }
  }
}

const LayerEntry* Lwa::find(Role role) const {
  for (const auto& e : entries_) {
    if (e.layer.role() == role) return &e;
  }
  return nullptr;
}

LayerEntry* Lwa::find(Role role) {
  for (auto& e : entries_) {
    if (e.layer.role() == role) return &e;
  }
  return nullptr;
}

const LayerEntry& Lwa::at(Role role) const {
  if (const LayerEntry* e = find(role)) return *e;
  throw Error(ErrorCode::kMissingRole,
              "role " + std::string(to_string(role)) + " missing from abstraction");
}

LayerEntry& Lwa::at(Role role) {
  if (LayerEntry* e = find(role)) return *e;
  throw Error(ErrorCode::kMissingRole,
              "role " + std::string(to_string(role)) + " missing from abstraction");
}

bool Lwa::has_canonical_roles() const {
  return std::all_of(kRolesByPriority.begin(), kRolesByPriority.end(),
                     [this](Role r) { return find(r) != nullptr; });
}

bool Lwa::is_partition() const {
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cover =
      Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(
          domain_.height, domain_.width);
  for (const auto& e : entries_) cover += e.mask.data().cast<int>();
  return (cover == 1).all();
}

bool operator==(const Lwa& a, const Lwa& b) {
  if (!(a.domain_ == b.domain_) || a.entries_.size() != b.entries_.size()) {
    return false;
  }
  for (const auto& e : a.entries_) {
    const LayerEntry* other = b.find(e.layer.role());
    if (!other || !(*other == e)) return false;
  }
  return true;
}

Lwa decompose(const ConditionStack& frame, const LayerSpec& spec,
              const DecomposeOptions& options) {
  const ConditionMap& semantic = frame.at(Modality::kSemantic);
  frame.at(Modality::kDepth);
  const PixelDomain domain = semantic.domain();
  if (semantic.channels() != 1) {
    throw Error(ErrorCode::kInvalidArgument, "semantic map must have 1 channel");
  }

  std::vector<Role> role_of_pixel(domain.pixels());
  for (Eigen::Index p = 0; p < domain.pixels(); ++p) {
    const double s = semantic.values()(p, 0);
    const bool integral = s >= 0.0 && s <= 4294967295.0 && std::floor(s) == s;
    const auto idx = integral ? static_cast<std::uint32_t>(s) : kVoidClass;
    if (options.strict && (!integral || (idx != kVoidClass && !spec.has_index(idx)))) {
      throw Error(ErrorCode::kInvalidArgument,
                  "semantic label " + std::to_string(s) + " at pixel " +
                      std::to_string(p) + " is not in the class table");
    }
    role_of_pixel[p] = spec.role_of(idx);
  }

  std::vector<LayerEntry> entries;
  for (Role role : kRolesByPriority) {
    VisibilityMask mask(domain);
    std::vector<ConditionMap> maps;
    for (const auto& src : frame.maps()) {
      maps.push_back(ConditionMap::filled(src.modality(), domain, src.channels()));
    }
    for (Eigen::Index p = 0; p < domain.pixels(); ++p) {
      if (role_of_pixel[p] != role) continue;
      mask.set_pixel(p, true);
      for (std::size_t j = 0; j < maps.size(); ++j) {
        maps[j].copy_pixel_from(frame.maps()[j], p);
      }
    }
    entries.push_back(
        LayerEntry{WorldLayer(role, ConditionStack(std::move(maps))), std::move(mask)});
  }
  return Lwa(domain, std::move(entries));
}

namespace {

// Highest-priority entry per pixel, or nullptr when uncovered.
std::vector<const LayerEntry*> owners(const Lwa& lwa) {
  std::vector<const LayerEntry*> owner(lwa.domain().pixels(), nullptr);
  for (auto it = kRolesByPriority.rbegin(); it != kRolesByPriority.rend(); ++it) {
    const LayerEntry* e = lwa.find(*it);
    if (!e) continue;
    for (Eigen::Index p = 0; p < lwa.domain().pixels(); ++p) {
      if (e->mask.at_pixel(p)) owner[p] = e;
    }
  }
  return owner;
}

ConditionMap compose_one(const Lwa& lwa, const std::vector<const LayerEntry*>& owner,
                         Modality modality, int channels) {
  ConditionMap out = ConditionMap::filled(modality, lwa.domain(), channels);
  for (Eigen::Index p = 0; p < lwa.domain().pixels(); ++p) {
    if (!owner[p]) continue;
    if (const ConditionMap* src = owner[p]->layer.conditions().find(modality)) {
      out.copy_pixel_from(*src, p);
    }
  }
  return out;
}

}  // namespace

ConditionStack compose(const Lwa& lwa) {
  if (lwa.entries().empty()) {
    throw Error(ErrorCode::kEmptyInput, "cannot compose an empty abstraction");
  }
  const auto owner = owners(lwa);
  ConditionStack out;
  for (Modality m : kCanonicalModalities) {
    std::optional<int> channels;
    for (const auto& e : lwa.entries()) {
      const ConditionMap* c = e.layer.conditions().find(m);
      if (!c) continue;
      if (channels && *channels != c->channels()) {
        throw Error(ErrorCode::kDimensionMismatch,
                    std::string(to_string(m)) + " channel count differs between layers");
      }
      channels = c->channels();
    }
    if (channels) out.insert(compose_one(lwa, owner, m, *channels));
  }
  return out;
}

ConditionMap extract_modality(const Lwa& lwa, Modality modality) {
  if (lwa.entries().empty()) {
    throw Error(ErrorCode::kEmptyInput, "cannot extract from an empty abstraction");
  }
  std::optional<int> channels;
  for (const auto& e : lwa.entries()) {
    const ConditionMap* c = e.layer.conditions().find(modality);
    if (!c) {
      throw Error(ErrorCode::kMissingModality,
                  std::string(to_string(modality)) + " missing from layer " +
                      std::string(to_string(e.layer.role())));
    }
    if (channels && *channels != c->channels()) {
      throw Error(ErrorCode::kDimensionMismatch, "channel count differs between layers");
    }
    channels = c->channels();
  }
  return compose_one(lwa, owners(lwa), modality, *channels);
}

Lwa reassign_mask(const Lwa& lwa, const VisibilityMask& pixels, Role from, Role to) {
  Lwa out = lwa;
  LayerEntry& src = out.at(from);
  LayerEntry& dst = out.at(to);
  if (!is_subset(pixels, src.mask)) {
    throw Error(ErrorCode::kNotSubset,
                "pixels to move are not inside the " + std::string(to_string(from)) +
                    " mask");
  }
  if (from == to || pixels.empty()) return out;
  for (const auto& m : src.layer.conditions().maps()) {
    const ConditionMap* d = dst.layer.conditions().find(m.modality());
    if (!d || d->channels() != m.channels()) {
      throw Error(ErrorCode::kMissingModality,
                  "target layer lacks a matching " + std::string(to_string(m.modality())) +
                      " map");
    }
  }
  for (Eigen::Index p = 0; p < lwa.domain().pixels(); ++p) {
    if (!pixels.at_pixel(p)) continue;
    for (auto& m : src.layer.conditions().maps()) {
      dst.layer.conditions().find(m.modality())->copy_pixel_from(m, p);
      m.fill_pixel(p);
    }
    src.mask.set_pixel(p, false);
    dst.mask.set_pixel(p, true);
  }
  return out;
}

namespace {
std::string layer_file(Role role, std::string_view what) {
  return std::string(to_string(role)) + "." + std::string(what) + ".lwa1";
}
}  // namespace

void save_lwa(const fs::path& dir, const Lwa& lwa) {
  fs::create_directories(dir);
  nlohmann::json layers = nlohmann::json::array();
  for (Role role : kRolesByPriority) {
    const LayerEntry* e = lwa.find(role);
    if (!e) continue;
    nlohmann::json conditions = nlohmann::json::array();
    for (const auto& m : e->layer.conditions().maps()) {
      const std::string file = layer_file(role, to_string(m.modality()));
      save_condition(dir / file, m);
      conditions.push_back({{"modality", to_string(m.modality())},
                            {"channels", m.channels()},
                            {"file", file}});
    }
    const std::string mask_file = layer_file(role, "mask");
    save_mask(dir / mask_file, e->mask);
    layers.push_back({{"role", to_string(role)},
                      {"total_channels", e->layer.total_channels()},
                      {"mask", mask_file},
                      {"conditions", conditions}});
  }
  nlohmann::json index = {{"lwa_version", 1},
                          {"height", lwa.domain().height},
                          {"width", lwa.domain().width},
                          {"layers", layers}};
  write_text_atomic(dir / "lwa.json", index.dump(2) + "\n");
}

Lwa load_lwa(const fs::path& dir) {
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(read_text(dir / "lwa.json"));
    const PixelDomain domain = PixelDomain::make(index.at("height").get<std::int64_t>(),
                                                 index.at("width").get<std::int64_t>());
    std::vector<LayerEntry> entries;
    for (const auto& l : index.at("layers")) {
      const Role role = role_from_string(l.at("role").get<std::string>());
      ConditionStack stack;
      for (const auto& c : l.at("conditions")) {
        const Modality m = modality_from_string(c.at("modality").get<std::string>());
        stack.insert(load_condition(dir / c.at("file").get<std::string>(), m));
      }
      VisibilityMask mask = load_mask(dir / l.at("mask").get<std::string>());
      entries.push_back(LayerEntry{WorldLayer(role, std::move(stack)), std::move(mask)});
    }
    return Lwa(domain, std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, (dir / "lwa.json").string() + ": " + e.what());
  }
}

void save_stack(const fs::path& dir, const ConditionStack& stack) {
  fs::create_directories(dir);
  for (const auto& m : stack.maps()) {
    save_condition(dir / (std::string(to_string(m.modality())) + ".lwa1"), m);
  }
}

ConditionStack load_stack(const fs::path& dir) {
  ConditionStack stack;
  for (Modality m : kCanonicalModalities) {
    const fs::path p = dir / (std::string(to_string(m)) + ".lwa1");
    if (fs::exists(p)) stack.insert(load_condition(p, m));
  }
  if (stack.empty()) {
    throw Error(ErrorCode::kIo, dir.string() + ": no condition rasters found");
  }
  return stack;
}

}  // namespace lwa
