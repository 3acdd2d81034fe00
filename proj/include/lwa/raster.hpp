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

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include <Eigen/Core>

namespace lwa {

/// Pixel domain of a frame. Every raster in one scene shares one domain.
struct PixelDomain {
  std::uint32_t height = 1;
  std::uint32_t width = 1;

  /// Throws kInvalidArgument unless both extents are at least one.
  static PixelDomain make(std::int64_t height, std::int64_t width);

  Eigen::Index pixels() const {
    return static_cast<Eigen::Index>(height) * static_cast<Eigen::Index>(width);
  }
  Eigen::Index index(Eigen::Index row, Eigen::Index col) const {
    return row * static_cast<Eigen::Index>(width) + col;
  }
  friend bool operator==(const PixelDomain&, const PixelDomain&) = default;
};

enum class Modality : std::uint8_t {
  kDepth = 0,
  kSemantic = 1,
  kInstance = 2,
  kRgb = 3,
};

/// Canonical ordering used for compositing output and latent concatenation.
inline constexpr std::array<Modality, 4> kCanonicalModalities = {
    Modality::kDepth, Modality::kSemantic, Modality::kInstance, Modality::kRgb};

std::string_view to_string(Modality modality);
Modality modality_from_string(std::string_view name);
int default_channels(Modality modality);
int canonical_rank(Modality modality);

/// Class index written where no layer covers a pixel or a semantic label is
/// unusable.
inline constexpr std::uint32_t kVoidClass = 255;

/// Row-major per-pixel values: one row per pixel, one column per channel.
using PixelArray =
    Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Row-major H x W boolean grid.
using MaskArray =
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Flat per-pixel flags, indexed like PixelArray rows.
using PixelFlags = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// One named modality raster.
///
/// Depth is metric (meters) with a per-pixel validity flag; invalid pixels
/// always hold 0. Semantic and instance maps hold integral labels in double
/// storage, which is exact for the full u32 range. RGB holds three channels
/// in [0, 1].
class ConditionMap {
 public:
  ConditionMap(Modality modality, PixelDomain domain, PixelArray values);
  ConditionMap(Modality modality, PixelDomain domain, PixelArray values,
               PixelFlags valid);

  /// Raster where every pixel carries the modality's fill value.
  static ConditionMap filled(Modality modality, PixelDomain domain,
                             int channels);
  static ConditionMap filled(Modality modality, PixelDomain domain) {
    return filled(modality, domain, default_channels(modality));
  }

  Modality modality() const { return modality_; }
  const PixelDomain& domain() const { return domain_; }
  int channels() const { return static_cast<int>(values_.cols()); }

  const PixelArray& values() const { return values_; }
  const PixelFlags& valid() const { return valid_; }

  double at(Eigen::Index row, Eigen::Index col, int channel = 0) const {
    return values_(domain_.index(row, col), channel);
  }
  bool valid_at(Eigen::Index pixel) const { return valid_(pixel); }

  /// Copies one pixel (all channels and the validity flag) from `other`.
  void copy_pixel_from(const ConditionMap& other, Eigen::Index pixel);
  /// Resets one pixel to the modality's fill value.
  void fill_pixel(Eigen::Index pixel);
  void set_pixel(Eigen::Index pixel, double value, bool valid = true);

  friend bool operator==(const ConditionMap& a, const ConditionMap& b);

 private:
  void check() const;

  Modality modality_;
  PixelDomain domain_;
  PixelArray values_;
  PixelFlags valid_;
};

double fill_value(Modality modality);

/// Binary H x W mask.
class VisibilityMask {
 public:
  explicit VisibilityMask(PixelDomain domain, bool value = false);
  VisibilityMask(PixelDomain domain, MaskArray data);

  const PixelDomain& domain() const { return domain_; }
  const MaskArray& data() const { return data_; }
  MaskArray& data() { return data_; }

  bool operator()(Eigen::Index row, Eigen::Index col) const {
    return data_(row, col);
  }
  bool at_pixel(Eigen::Index pixel) const { return data_.data()[pixel]; }
  void set_pixel(Eigen::Index pixel, bool v) { data_.data()[pixel] = v; }

  Eigen::Index count() const { return data_.count(); }
  bool empty() const { return count() == 0; }

  friend bool operator==(const VisibilityMask& a, const VisibilityMask& b) {
    return a.domain_ == b.domain_ && (a.data_ == b.data_).all();
  }

 private:
  PixelDomain domain_;
  MaskArray data_;
};

VisibilityMask operator|(const VisibilityMask& a, const VisibilityMask& b);
VisibilityMask operator&(const VisibilityMask& a, const VisibilityMask& b);
VisibilityMask operator!(const VisibilityMask& a);
/// True when every set pixel of `inner` is also set in `outer`.
bool is_subset(const VisibilityMask& inner, const VisibilityMask& outer);

/// 8-bit RGB image exchanged with editing backends.
struct PackedImage {
  using Pixels =
      Eigen::Array<std::uint8_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

  PixelDomain domain;
  Pixels rgb;

  explicit PackedImage(PixelDomain d) : domain(d), rgb(d.pixels(), 3) {
    rgb.setZero();
  }
  friend bool operator==(const PackedImage& a, const PackedImage& b) {
    return a.domain == b.domain && (a.rgb == b.rgb).all();
  }
};

}  // namespace lwa
