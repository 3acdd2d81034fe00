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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lwa/raster.hpp"

namespace lwa {

/// Element type codes of the `LWA1` raster container.
enum class DType : std::uint8_t { kF32 = 0, kU8 = 1, kU16 = 2, kU32 = 3 };

/// Modality byte used for visibility masks, beyond the condition modalities.
inline constexpr std::uint8_t kMaskModalityCode = 4;
/// Modality byte for tensors that are not images (features, weights).
inline constexpr std::uint8_t kTensorModalityCode = 5;

inline constexpr std::size_t kRasterHeaderBytes = 4 + 4 * 3 + 1 + 1 + 6;

/// Raw numeric content of one container file.
struct Raster {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  DType dtype = DType::kF32;
  std::uint8_t modality = 0;
  PixelArray values;  // (height*width) x channels
};

std::vector<std::uint8_t> encode_raster(const Raster& raster);
Raster decode_raster(std::span<const std::uint8_t> bytes);

Raster read_raster(const std::filesystem::path& path);
void write_raster(const std::filesystem::path& path, const Raster& raster);

/// Optional `<file>.meta.json` describing how stored depth maps to meters.
struct DepthSidecar {
  double depth_scale = 1.0;
  double invalid_value = 0.0;
};

std::filesystem::path sidecar_path(const std::filesystem::path& raster_path);
std::optional<DepthSidecar> read_sidecar(const std::filesystem::path& raster_path);
void write_sidecar(const std::filesystem::path& raster_path,
                   const DepthSidecar& sidecar);

/// Loads a condition raster from an `.lwa1` container or a PNG (8-bit
/// indexed/gray or 16-bit gray). PNG carries no modality byte, so
/// `modality` is required for it; for containers it is checked when given.
ConditionMap load_condition(const std::filesystem::path& path,
                            std::optional<Modality> modality = std::nullopt);
void save_condition(const std::filesystem::path& path, const ConditionMap& map);

VisibilityMask load_mask(const std::filesystem::path& path);
void save_mask(const std::filesystem::path& path, const VisibilityMask& mask);

PackedImage load_packed(const std::filesystem::path& path);
void save_packed(const std::filesystem::path& path, const PackedImage& image);

/// Dense real tensor stored as an f32 container with h = rows, w = 1,
/// channels = cols (feature sets, projection weights).
Eigen::MatrixXd load_tensor(const std::filesystem::path& path);
void save_tensor(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Minimal PNG support for annotator outputs. `bit_depth` 8 writes an
/// 8-bit grayscale image, 16 writes 16-bit grayscale; `indexed` writes an
/// 8-bit palette image whose palette entries are all black.
void write_png(const std::filesystem::path& path, PixelDomain domain,
               std::span<const std::uint16_t> samples, int bit_depth,
               bool indexed = false);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text);

}  // namespace lwa
