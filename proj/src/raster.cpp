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

#include "lwa/raster.hpp"

#include <cmath>
#include <string>

#include "lwa/error.hpp"

namespace lwa {

PixelDomain PixelDomain::make(std::int64_t height, std::int64_t width) {
  if (height < 1 || width < 1 || height > UINT32_MAX || width > UINT32_MAX) {
    throw Error(ErrorCode::kInvalidArgument,
                "pixel domain must be at least 1x1, got " +
                    std::to_string(height) + "x" + std::to_string(width));
  }
  return PixelDomain{static_cast<std::uint32_t>(height),
                     static_cast<std::uint32_t>(width)};
}

std::string_view to_string(Modality modality) {
  switch (modality) {
    case Modality::kDepth: return "depth";
    case Modality::kSemantic: return "semantic";
    case Modality::kInstance: return "instance";
    case Modality::kRgb: return "rgb";
  }
  return "unknown";
}

Modality modality_from_string(std::string_view name) {
  for (Modality m : kCanonicalModalities) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown modality '" + std::string(name) + "'");
}

int default_channels(Modality modality) {
  return modality == Modality::kRgb ? 3 : 1;
}

int canonical_rank(Modality modality) { return static_cast<int>(modality); }

double fill_value(Modality modality) {
  return modality == Modality::kSemantic ? static_cast<double>(kVoidClass) : 0.0;
}

ConditionMap::ConditionMap(Modality modality, PixelDomain domain,
                           PixelArray values)
    : modality_(modality),
      domain_(domain),
      values_(std::move(values)),
      valid_(PixelFlags::Constant(domain.pixels(), true)) {
  if (modality_ == Modality::kDepth && values_.rows() == domain_.pixels()) {
    // Depth without explicit flags: non-finite or negative samples are holes.
    for (Eigen::Index p = 0; p < values_.rows(); ++p) {
      const double d = values_(p, 0);
      if (!std::isfinite(d) || d < 0.0) {
        valid_(p) = false;
        values_(p, 0) = 0.0;
      }
    }
  }
  check();
}

ConditionMap::ConditionMap(Modality modality, PixelDomain domain,
                           PixelArray values, PixelFlags valid)
    : modality_(modality),
      domain_(domain),
      values_(std::move(values)),
      valid_(std::move(valid)) {
  check();
}

ConditionMap ConditionMap::filled(Modality modality, PixelDomain domain,
                                  int channels) {
  PixelArray values = PixelArray::Constant(domain.pixels(), channels,
                                           fill_value(modality));
  PixelFlags valid =
      PixelFlags::Constant(domain.pixels(), modality != Modality::kDepth);
  return ConditionMap(modality, domain, std::move(values), std::move(valid));
}

void ConditionMap::check() const {
  if (values_.rows() != domain_.pixels() || valid_.size() != domain_.pixels()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(to_string(modality_)) +
                    " raster does not match its pixel domain");
  }
  if (values_.cols() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "raster needs at least 1 channel");
  }
  if (modality_ == Modality::kDepth) {
    if (values_.cols() != 1) {
      throw Error(ErrorCode::kInvalidArgument, "depth must have 1 channel");
    }
    for (Eigen::Index p = 0; p < values_.rows(); ++p) {
      const double d = values_(p, 0);
      if (valid_(p) ? (!std::isfinite(d) || d < 0.0) : d != 0.0) {
        throw Error(ErrorCode::kInvalidArgument,
                    "depth pixel " + std::to_string(p) +
                        " is negative, non-finite, or a nonzero hole");
      }
    }
  } else if (!valid_.all()) {
    throw Error(ErrorCode::kInvalidArgument,
                "only depth rasters carry invalid pixels");
  }
}

void ConditionMap::copy_pixel_from(const ConditionMap& other,
                                   Eigen::Index pixel) {
  values_.row(pixel) = other.values_.row(pixel);
  valid_(pixel) = other.valid_(pixel);
}

void ConditionMap::fill_pixel(Eigen::Index pixel) {
  values_.row(pixel).setConstant(fill_value(modality_));
  valid_(pixel) = modality_ != Modality::kDepth;
}

void ConditionMap::set_pixel(Eigen::Index pixel, double value, bool valid) {
  if (modality_ == Modality::kDepth && !valid) value = 0.0;
  values_.row(pixel).setConstant(value);
  valid_(pixel) = modality_ == Modality::kDepth ? valid : true;
}

bool operator==(const ConditionMap& a, const ConditionMap& b) {
  return a.modality_ == b.modality_ && a.domain_ == b.domain_ &&
         a.values_.cols() == b.values_.cols() &&
         (a.values_ == b.values_).all() && (a.valid_ == b.valid_).all();
}

VisibilityMask::VisibilityMask(PixelDomain domain, bool value)
    : domain_(domain), data_(MaskArray::Constant(domain.height, domain.width, value)) {}

VisibilityMask::VisibilityMask(PixelDomain domain, MaskArray data)
    : domain_(domain), data_(std::move(data)) {
  if (data_.rows() != domain_.height || data_.cols() != domain_.width) {
    throw Error(ErrorCode::kDimensionMismatch,
                "mask does not match its pixel domain");
  }
}

namespace {
void require_same(const VisibilityMask& a, const VisibilityMask& b) {
  if (!(a.domain() == b.domain())) {
    throw Error(ErrorCode::kDimensionMismatch, "mask domains differ");
  }
}
}  // namespace

VisibilityMask operator|(const VisibilityMask& a, const VisibilityMask& b) {
  require_same(a, b);
  return VisibilityMask(a.domain(), a.data() || b.data());
}

VisibilityMask operator&(const VisibilityMask& a, const VisibilityMask& b) {
  require_same(a, b);
  return VisibilityMask(a.domain(), a.data() && b.data());
}

VisibilityMask operator!(const VisibilityMask& a) {
  return VisibilityMask(a.domain(), !a.data());
}

bool is_subset(const VisibilityMask& inner, const VisibilityMask& outer) {
  require_same(inner, outer);
  return !(inner.data() && !outer.data()).any();
}

}  // namespace lwa
