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

#include "lwa/backend.hpp"
#include "lwa/layer_spec.hpp"
#include "lwa/lwa.hpp"
#include "lwa/raster.hpp"

namespace lwa {

/// Default editor panel: 512 wide, 288 tall. Two stacked panels form the
/// 512 x 576 editor image.
inline constexpr PixelDomain kDefaultPanel{288, 512};
inline constexpr double kDefaultDepthMax = 80.0;
inline constexpr double kDefaultMaxOffPalette = 0.05;

/// Editable region: pixels outside the traffic and layout masks.
VisibilityMask derive_edit_mask(const Lwa& lwa);

/// Traffic-participant and map-layout entries of a source abstraction,
/// i.e. everything the editor must not change.
class PreservedAbstraction {
 public:
  explicit PreservedAbstraction(Lwa lwa);

  const Lwa& lwa() const { return lwa_; }
  const PixelDomain& domain() const { return lwa_.domain(); }
  /// Union of the preserved masks.
  VisibilityMask region() const;

 private:
  Lwa lwa_;
};

/// Drops the background entry. Requires the three canonical roles.
PreservedAbstraction assemble_preserved(const Lwa& lwa);

/// 8-bit depth code: round(255 * clamp(d, 0, d_max) / d_max). Invalid
/// depth encodes as 0, and code 0 decodes as invalid.
std::uint8_t quantize_depth(double meters, bool valid, double d_max);
double dequantize_depth(std::uint8_t code, double d_max);

ConditionMap resample_nearest(const ConditionMap& map, PixelDomain target);
/// Bilinear over valid neighbours only; a pixel with no valid neighbour
/// stays invalid.
ConditionMap resample_depth_bilinear(const ConditionMap& depth, PixelDomain target);
VisibilityMask resample_mask(const VisibilityMask& mask, PixelDomain target);

struct PackOptions {
  double d_max = kDefaultDepthMax;
  /// Largest relative aspect-ratio difference accepted before resampling.
  double aspect_tolerance = 0.02;
};

/// Stacks the depth panel (gray) over the semantic panel (class palette)
/// into one image of height 2 * panel.height.
PackedImage pack_for_editor(const ConditionMap& depth, const ConditionMap& semantic,
                            PixelDomain panel, const LayerSpec& spec,
                            const PackOptions& options = {});

struct UnpackOptions {
  double d_max = kDefaultDepthMax;
  double max_off_palette = kDefaultMaxOffPalette;
};

struct UnpackedPanels {
  ConditionMap depth;
  ConditionMap semantic;
  /// Fraction of semantic-panel pixels that had to snap to the palette.
  double off_palette_fraction = 0.0;
};

/// Inverse of pack_for_editor. Off-palette semantic pixels snap to the
/// nearest palette color; more than `max_off_palette` of them is an error.
UnpackedPanels unpack_from_editor(const PackedImage& packed, PixelDomain panel,
                                  const LayerSpec& spec,
                                  const UnpackOptions& options = {});

struct RefineOptions {
  bool hard_splice = true;
  PixelDomain panel = kDefaultPanel;
  double d_max = kDefaultDepthMax;
  double max_off_palette = kDefaultMaxOffPalette;
  /// Directory for request/response rasters.
  std::filesystem::path work_dir = std::filesystem::temp_directory_path();
  /// Request id; also the stem of the request files.
  std::string request_id = "edit-0";
  /// When set, this layer's values are drawn into the editable region of
  /// the request image instead of the blank fill, and its instance and RGB
  /// maps fill the same region of the rebuilt background.
  const LayerEntry* background_context = nullptr;
};

/// Sends the preserved abstraction to the editing backend and rebuilds a
/// three-role abstraction whose background comes from the editor. With
/// hard splice the preserved layers are copied from `preserved` untouched;
/// without it their depth and semantic values are taken from the editor
/// output.
Lwa refine(const PreservedAbstraction& preserved, const VisibilityMask& edit_mask,
           const std::string& instruction, BackendHandle& backend,
           const LayerSpec& spec, const RefineOptions& options = {});

/// Mean squared difference over `region` pixels and every channel of every
/// modality of the two background layers. Empty regions are an error.
double sim2real_loss(const WorldLayer& pred, const WorldLayer& target,
                     const VisibilityMask& region);

}  // namespace lwa
