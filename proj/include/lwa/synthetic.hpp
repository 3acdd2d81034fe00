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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lwa/layer_spec.hpp"
#include "lwa/lwa.hpp"
#include "lwa/raster.hpp"

namespace lwa {

/// A road-scene raster set with known ground truth, for tests and demos.
struct SceneObject {
  std::uint32_t instance_id = 0;
  std::uint32_t semantic_class = 0;
  std::int64_t projected_pixels = 0;
  std::int64_t visible_pixels = 0;
};

struct SceneOptions {
  int num_objects = 3;
  /// Draw fences over part of some objects so that their visible fraction
  /// drops below one.
  bool occluders = true;
};

struct SyntheticScene {
  /// Depth, semantic, instance and RGB of the rendered view.
  ConditionStack frame;
  /// Instance map with every object drawn unoccluded.
  ConditionMap full_instance;
  std::vector<SceneObject> objects;
};

SyntheticScene make_scene(PixelDomain domain, std::uint64_t seed, const LayerSpec& spec,
                          const SceneOptions& options = {});

struct TreeOptions {
  int scenarios = 3;
  int frames = 10;
  double rate_hz = 10.0;
  PixelDomain domain{144, 256};
  SceneOptions scene;
};

/// Writes `root/<scenario>/{sim,real}/<modality>/<timestamp>.lwa1` plus a
/// per-scenario camera.json. The sim side carries depth, semantic,
/// instance, instance_full and rgb; the real side depth, semantic and rgb.
void write_scenario_tree(const std::filesystem::path& root, const TreeOptions& options,
                         std::uint64_t seed, const LayerSpec& spec);

/// Stem used for the frame at `index` of a sequence sampled at `rate_hz`.
std::string frame_key(int index, double rate_hz);

}  // namespace lwa
