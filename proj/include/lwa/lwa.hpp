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

#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "lwa/layer_spec.hpp"
#include "lwa/raster.hpp"

namespace lwa {

/// Ordered set of condition maps over one domain, at most one per modality,
/// kept in canonical modality order.
class ConditionStack {
 public:
  ConditionStack() = default;
  explicit ConditionStack(std::vector<ConditionMap> maps);

  void insert(ConditionMap map);
  const std::vector<ConditionMap>& maps() const { return maps_; }
  std::vector<ConditionMap>& maps() { return maps_; }
  const ConditionMap* find(Modality modality) const;
  ConditionMap* find(Modality modality);
  /// Throws kMissingModality.
  const ConditionMap& at(Modality modality) const;
  bool empty() const { return maps_.empty(); }
  std::optional<PixelDomain> domain() const;

  friend bool operator==(const ConditionStack& a, const ConditionStack& b) {
    return a.maps_ == b.maps_;
  }

 private:
  std::vector<ConditionMap> maps_;
};

/// One world layer: a role plus its condition maps. The layer's channel
/// count is the sum over its maps.
class WorldLayer {
 public:
  WorldLayer(Role role, ConditionStack conditions);

  Role role() const { return role_; }
  const ConditionStack& conditions() const { return conditions_; }
  ConditionStack& conditions() { return conditions_; }
  int total_channels() const;
  PixelDomain domain() const { return *conditions_.domain(); }

  friend bool operator==(const WorldLayer&, const WorldLayer&) = default;

 private:
  Role role_;
  ConditionStack conditions_;
};

struct LayerEntry {
  WorldLayer layer;
  VisibilityMask mask;

  friend bool operator==(const LayerEntry&, const LayerEntry&) = default;
};

/// Layered world abstraction: role-tagged (layer, mask) pairs over one
/// pixel domain, at most one entry per role. Entry order carries no meaning;
/// overlaps resolve by role priority.
class Lwa {
 public:
  Lwa(PixelDomain domain, std::vector<LayerEntry> entries);

  const PixelDomain& domain() const { return domain_; }
  const std::vector<LayerEntry>& entries() const { return entries_; }

  const LayerEntry* find(Role role) const;
  LayerEntry* find(Role role);
  /// Throws kMissingRole.
  const LayerEntry& at(Role role) const;
  LayerEntry& at(Role role);

  bool has_canonical_roles() const;
  /// Every pixel covered by exactly one mask.
  bool is_partition() const;

  /// Equality by role, independent of entry order.
  friend bool operator==(const Lwa& a, const Lwa& b);

 private:
  PixelDomain domain_;
  std::vector<LayerEntry> entries_;
};

struct DecomposeOptions {
  /// Reject semantic labels missing from the class table instead of
  /// routing them to the background. The void label is always accepted.
  bool strict = false;
};

/// Splits an annotated frame into the three canonical layers by semantic
/// class. `frame` must contain semantic and depth maps and may carry
/// instance and RGB. Each layer keeps its own pixels and the fill value
/// elsewhere, so masks partition the domain and compose() inverts this.
Lwa decompose(const ConditionStack& frame, const LayerSpec& spec,
              const DecomposeOptions& options = {});

/// Per pixel, takes values from the highest-priority layer whose mask
/// covers it. Uncovered pixels get the fill values (invalid depth, void
/// class, instance 0, black).
ConditionStack compose(const Lwa& lwa);

/// Composites a single modality; every layer must carry it.
ConditionMap extract_modality(const Lwa& lwa, Modality modality);

/// Moves `pixels` (a subset of `from`'s mask) and their condition values
/// into `to`. Values outside a layer's mask are assumed to be fill values,
/// which is what decompose() produces; under that assumption moving back
/// restores the original bit-exactly.
Lwa reassign_mask(const Lwa& lwa, const VisibilityMask& pixels, Role from, Role to);

void save_lwa(const std::filesystem::path& dir, const Lwa& lwa);
Lwa load_lwa(const std::filesystem::path& dir);

/// Stores one `<modality>.lwa1` file per map.
void save_stack(const std::filesystem::path& dir, const ConditionStack& stack);
/// Loads whichever canonical `<modality>.lwa1` files exist in `dir`.
ConditionStack load_stack(const std::filesystem::path& dir);

}  // namespace lwa
