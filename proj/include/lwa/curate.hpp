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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lwa/layer_spec.hpp"
#include "lwa/lwa.hpp"
#include "lwa/raster.hpp"

namespace lwa {

inline constexpr int kManifestVersion = 1;

/// Extra sim-side modality holding an occlusion-free instance render.
inline constexpr std::string_view kFullInstanceModality = "instance_full";

enum class Split { kTrain, kValidation, kVideo };
std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

/// One paired sim/real frame. Paths are relative to the manifest root.
struct SampleManifest {
  std::string scenario_id;
  double timestamp = 0.0;
  /// File stem the timestamp was parsed from; names per-frame outputs.
  std::string key;
  std::map<std::string, std::string> sim_paths;
  std::map<std::string, std::string> real_paths;
  nlohmann::json camera;  // opaque, null when absent
  std::optional<std::string> prompt;

  // Set on derived validation variants only.
  std::optional<int> variant;
  std::optional<std::vector<std::uint32_t>> kept_instances;
  std::optional<std::vector<std::uint32_t>> removed_instances;

  nlohmann::json to_json() const;
  static SampleManifest from_json(const nlohmann::json& j);
};

struct DatasetManifest {
  std::string name;
  Split split = Split::kTrain;
  std::string root;
  double sample_rate = 0.0;
  std::uint64_t seed = 0;
  /// Every threshold and flag that shaped the manifest.
  nlohmann::json params = nlohmann::json::object();
  std::vector<SampleManifest> samples;

  /// Sorts by (scenario_id, timestamp, variant) and rejects duplicates.
  void normalize();
  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
  /// Canonical text form; identical manifests give identical bytes.
  std::string dump() const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

/// Resolves a manifest-relative path.
std::filesystem::path resolve(const DatasetManifest& manifest, const std::string& relative);

struct DroppedSample {
  std::string scenario_id;
  std::string key;
  std::vector<std::string> missing;
};

/// Scans `root/<scenario>/<sim|real>/<modality>/<timestamp>.{lwa1,png}`.
/// A frame is kept when every modality directory on both sides has it;
/// incomplete frames are logged and reported through `dropped`.
DatasetManifest build_manifest(const std::filesystem::path& root, Split split,
                               double sample_rate, const std::string& name = "d3sim",
                               std::vector<DroppedSample>* dropped = nullptr);

/// Keeps every (src_hz / dst_hz)-th sample of each scenario, starting at
/// its first sample. The ratio must be an integer.
DatasetManifest decimate(const DatasetManifest& manifest, double src_hz, double dst_hz);

struct ObjectRecord {
  std::uint32_t instance_id = 0;
  std::optional<std::uint32_t> semantic_class;
  std::int64_t projected_pixels = 0;
  std::int64_t visible_pixels = 0;

  double visible_fraction() const {
    return projected_pixels == 0 ? 0.0
                                 : static_cast<double>(visible_pixels) /
                                       static_cast<double>(projected_pixels);
  }
};

/// Per-instance visibility. Visible pixels come from `instance` (restricted
/// to valid depth when `depth` is given); projected pixels from the
/// occlusion-free `full_instance` render when given, else they equal the
/// visible count. The class is the majority semantic label of the visible
/// pixels. Records are sorted by instance id.
std::vector<ObjectRecord> object_visibility(const ConditionMap& instance,
                                            const ConditionMap* depth = nullptr,
                                            const ConditionMap* full_instance = nullptr,
                                            const ConditionMap* semantic = nullptr);

struct ValidationOptions {
  double tau_vis = 0.75;
  std::int64_t min_pixels = 64;
  int max_variants = 4;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Objects that pass both the visibility-fraction and pixel-count tests.
std::vector<std::uint32_t> eligible_objects(std::span<const ObjectRecord> records,
                                            double tau_vis, std::int64_t min_pixels);

/// Up to `max_variants` distinct nonempty subsets of `objects`, drawn
/// uniformly without replacement. Each subset is sorted ascending.
std::vector<std::vector<std::uint32_t>> sample_subsets(std::span<const std::uint32_t> objects,
                                                       int max_variants, std::uint64_t seed);

/// Derives validation variants for one frame. Throws kEmptyInput when no
/// object is eligible.
std::vector<SampleManifest> derive_variants(const SampleManifest& sample,
                                            std::span<const ObjectRecord> records,
                                            const ValidationOptions& options);

/// Runs derive_variants over every sample of a manifest, loading the sim
/// instance maps (and `instance_full`, semantic, depth when listed).
/// Frames without eligible objects are skipped and logged; zero variants
/// overall is an error.
DatasetManifest derive_validation(const DatasetManifest& manifest,
                                  const ValidationOptions& options);

/// Sim abstraction of a variant: removed objects move from the traffic
/// layer to the background with invalid depth, void class and instance 0.
Lwa apply_variant(const Lwa& lwa, const ConditionMap& instance,
                  std::span<const std::uint32_t> kept);

struct PromptSpec {
  std::map<std::string, std::vector<std::string>> pools;
  std::string template_text;
  std::uint64_t seed = 0;

  /// City, weather, time-of-day and street-type pools.
  static PromptSpec default_spec(std::uint64_t seed);
  static PromptSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Slot names of a `{slot}` template in order of first appearance.
std::vector<std::string> template_slots(const std::string& text);

/// n prompts, each slot drawn independently and uniformly from its pool.
std::vector<std::string> gen_prompts(const PromptSpec& spec, int n);

/// Distinct instances per class name over the manifest. Variants count
/// only their kept instances.
std::map<std::string, std::int64_t> object_histogram(const DatasetManifest& manifest,
                                                     const LayerSpec& spec, int jobs = 1);

/// Fixed-length clips of consecutive frames per scenario; the trailing
/// remainder is dropped. `lwa_root` is where per-frame abstractions live
/// (`<lwa_root>/<scenario>/<key>/`).
nlohmann::json pack_video_sequence(const DatasetManifest& manifest, int clip_len,
                                   const std::string& lwa_root);

}  // namespace lwa
