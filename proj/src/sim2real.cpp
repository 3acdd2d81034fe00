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

#include "lwa/sim2real.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "lwa/error.hpp"
#include "lwa/raster_io.hpp"

namespace lwa {

namespace fs = std::filesystem;

VisibilityMask derive_edit_mask(const Lwa& lwa) {
  const LayerEntry& traffic = lwa.at(Role::kTrafficParticipants);
  const LayerEntry& layout = lwa.at(Role::kMapLayout);
  lwa.at(Role::kBackground);
  return !(traffic.mask | layout.mask);
}

PreservedAbstraction::PreservedAbstraction(Lwa lwa) : lwa_(std::move(lwa)) {
  if (!lwa_.find(Role::kTrafficParticipants) || !lwa_.find(Role::kMapLayout) ||
      lwa_.find(Role::kBackground) || lwa_.entries().size() != 2) {
    throw Error(ErrorCode::kMissingRole,
                "preserved abstraction holds exactly the traffic and layout layers");
  }
}

VisibilityMask PreservedAbstraction::region() const {
  return lwa_.at(Role::kTrafficParticipants).mask | lwa_.at(Role::kMapLayout).mask;
}

PreservedAbstraction assemble_preserved(const Lwa& lwa) {
  if (!lwa.has_canonical_roles()) {
    throw Error(ErrorCode::kMissingRole, "abstraction lacks one of the three roles");
  }
  std::vector<LayerEntry> kept;
  for (const auto& e : lwa.entries()) {
    if (e.layer.role() != Role::kBackground) kept.push_back(e);
  }
  return PreservedAbstraction(Lwa(lwa.domain(), std::move(kept)));
}

std::uint8_t quantize_depth(double meters, bool valid, double d_max) {
  if (!valid) return 0;
  const double c = std::clamp(meters, 0.0, d_max);
  return static_cast<std::uint8_t>(std::lround(255.0 * c / d_max));
}

double dequantize_depth(std::uint8_t code, double d_max) {
  return static_cast<double>(code) * d_max / 255.0;
}

namespace {

Eigen::Index nearest_source(Eigen::Index dst, std::uint32_t src_extent,
                            std::uint32_t dst_extent) {
  const auto s = static_cast<Eigen::Index>(
      (static_cast<double>(dst) + 0.5) * src_extent / dst_extent);
  return std::min<Eigen::Index>(s, src_extent - 1);
}

}  // namespace

ConditionMap resample_nearest(const ConditionMap& map, PixelDomain target) {
  const PixelDomain& src = map.domain();
  if (src == target) return map;
  PixelArray values(target.pixels(), map.channels());
  PixelFlags valid(target.pixels());
  for (Eigen::Index y = 0; y < target.height; ++y) {
    const Eigen::Index sy = nearest_source(y, src.height, target.height);
    for (Eigen::Index x = 0; x < target.width; ++x) {
      const Eigen::Index sx = nearest_source(x, src.width, target.width);
      values.row(target.index(y, x)) = map.values().row(src.index(sy, sx));
      valid(target.index(y, x)) = map.valid()(src.index(sy, sx));
    }
  }
  return ConditionMap(map.modality(), target, std::move(values), std::move(valid));
}

ConditionMap resample_depth_bilinear(const ConditionMap& depth, PixelDomain target) {
  if (depth.modality() != Modality::kDepth) {
    throw Error(ErrorCode::kInvalidArgument, "bilinear resampling is for depth maps");
  }
  const PixelDomain& src = depth.domain();
  if (src == target) return depth;
  PixelArray values = PixelArray::Zero(target.pixels(), 1);
  PixelFlags valid = PixelFlags::Constant(target.pixels(), false);
  const double sy_scale = static_cast<double>(src.height) / target.height;
  const double sx_scale = static_cast<double>(src.width) / target.width;
  for (Eigen::Index y = 0; y < target.height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy_scale - 0.5, 0.0, src.height - 1.0);
    const auto y0 = static_cast<Eigen::Index>(std::floor(fy));
    const Eigen::Index y1 = std::min<Eigen::Index>(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (Eigen::Index x = 0; x < target.width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx_scale - 0.5, 0.0, src.width - 1.0);
      const auto x0 = static_cast<Eigen::Index>(std::floor(fx));
      const Eigen::Index x1 = std::min<Eigen::Index>(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      const std::array<std::pair<Eigen::Index, double>, 4> taps = {{
          {src.index(y0, x0), (1 - wy) * (1 - wx)},
          {src.index(y0, x1), (1 - wy) * wx},
          {src.index(y1, x0), wy * (1 - wx)},
          {src.index(y1, x1), wy * wx},
      }};
      double sum = 0.0;
      double weight = 0.0;
      for (const auto& [p, w] : taps) {
        if (w > 0.0 && depth.valid()(p)) {
          sum += w * depth.values()(p, 0);
          weight += w;
        }
      }
      if (weight > 0.0) {
        values(target.index(y, x), 0) = sum / weight;
        valid(target.index(y, x)) = true;
      }
    }
  }
  return ConditionMap(Modality::kDepth, target, std::move(values), std::move(valid));
}

VisibilityMask resample_mask(const VisibilityMask& mask, PixelDomain target) {
  const PixelDomain& src = mask.domain();
  if (src == target) return mask;
  VisibilityMask out(target);
  for (Eigen::Index y = 0; y < target.height; ++y) {
    const Eigen::Index sy = nearest_source(y, src.height, target.height);
    for (Eigen::Index x = 0; x < target.width; ++x) {
      out.data()(y, x) = mask(sy, nearest_source(x, src.width, target.width));
    }
  }
  return out;
}

namespace {

void check_aspect(PixelDomain src, PixelDomain panel, double tolerance) {
  const double a = static_cast<double>(src.width) / src.height;
  const double b = static_cast<double>(panel.width) / panel.height;
  if (std::abs(a / b - 1.0) > tolerance) {
    throw Error(ErrorCode::kInvalidArgument,
                "aspect ratio " + std::to_string(a) + " does not match panel aspect " +
                    std::to_string(b));
  }
}

std::map<std::uint32_t, Rgb8> palette_by_index(const LayerSpec& spec) {
  std::map<std::uint32_t, Rgb8> out;
  for (const auto& [idx, color] : spec.palette()) out.emplace(idx, color);
  return out;
}

}  // namespace

PackedImage pack_for_editor(const ConditionMap& depth, const ConditionMap& semantic,
                            PixelDomain panel, const LayerSpec& spec,
                            const PackOptions& options) {
  if (depth.modality() != Modality::kDepth || semantic.modality() != Modality::kSemantic) {
    throw Error(ErrorCode::kInvalidArgument, "pack expects a depth and a semantic map");
  }
  if (!(options.d_max > 0.0)) throw Error(ErrorCode::kInvalidArgument, "d_max must be > 0");
  check_aspect(depth.domain(), panel, options.aspect_tolerance);
  check_aspect(semantic.domain(), panel, options.aspect_tolerance);
  const ConditionMap d = resample_depth_bilinear(depth, panel);
  const ConditionMap s = resample_nearest(semantic, panel);
  const auto palette = palette_by_index(spec);

  PackedImage out(PixelDomain{2 * panel.height, panel.width});
  const Eigen::Index n = panel.pixels();
  for (Eigen::Index p = 0; p < n; ++p) {
    const std::uint8_t v = quantize_depth(d.values()(p, 0), d.valid()(p), options.d_max);
    out.rgb.row(p).setConstant(v);
    const double label = s.values()(p, 0);
    auto it = palette.find(static_cast<std::uint32_t>(label));
    const Rgb8& c = (it == palette.end() || std::floor(label) != label)
                        ? spec.void_color()
                        : it->second;
    out.rgb.row(n + p) << c[0], c[1], c[2];
  }
  return out;
}

UnpackedPanels unpack_from_editor(const PackedImage& packed, PixelDomain panel,
                                  const LayerSpec& spec, const UnpackOptions& options) {
  if (packed.domain.height != 2 * panel.height || packed.domain.width != panel.width) {
    throw Error(ErrorCode::kDimensionMismatch,
                "packed image is " + std::to_string(packed.domain.width) + "x" +
                    std::to_string(packed.domain.height) + ", expected " +
                    std::to_string(panel.width) + "x" + std::to_string(2 * panel.height));
  }
  std::map<Rgb8, std::uint32_t> by_color;
  for (const auto& [idx, color] : spec.palette()) by_color.emplace(color, idx);

  const Eigen::Index n = panel.pixels();
  PixelArray depth(n, 1);
  PixelFlags valid(n);
  PixelArray labels(n, 1);
  Eigen::Index off_palette = 0;
  for (Eigen::Index p = 0; p < n; ++p) {
    const auto top = packed.rgb.row(p).cast<int>();
    const auto code = static_cast<std::uint8_t>(
        std::lround((top(0) + top(1) + top(2)) / 3.0));
    valid(p) = code != 0;
    depth(p, 0) = dequantize_depth(code, options.d_max);

    const Rgb8 c = {packed.rgb(n + p, 0), packed.rgb(n + p, 1), packed.rgb(n + p, 2)};
    auto it = by_color.find(c);
    if (it != by_color.end()) {
      labels(p, 0) = it->second;
      continue;
    }
    ++off_palette;
    int best = std::numeric_limits<int>::max();
    std::uint32_t best_idx = kVoidClass;
    for (const auto& [color, idx] : by_color) {
      int dist = 0;
      for (int k = 0; k < 3; ++k) dist += (color[k] - c[k]) * (color[k] - c[k]);
      if (dist < best) {
        best = dist;
        best_idx = idx;
      }
    }
    labels(p, 0) = best_idx;
  }
  const double fraction = static_cast<double>(off_palette) / static_cast<double>(n);
  if (fraction > options.max_off_palette) {
    throw Error(ErrorCode::kOffPalette,
                std::to_string(off_palette) + " of " + std::to_string(n) +
                    " semantic pixels are off-palette");
  }
  return UnpackedPanels{
      ConditionMap(Modality::kDepth, panel, std::move(depth), std::move(valid)),
      ConditionMap(Modality::kSemantic, panel, std::move(labels)), fraction};
}

Lwa refine(const PreservedAbstraction& preserved, const VisibilityMask& edit_mask,
           const std::string& instruction, BackendHandle& backend, const LayerSpec& spec,
           const RefineOptions& options) {
  const PixelDomain domain = preserved.domain();
  const VisibilityMask keep = preserved.region();
  if (!(edit_mask.domain() == domain) || !(edit_mask == !keep)) {
    throw Error(ErrorCode::kInvalidArgument,
                "edit mask must be the complement of the preserved masks");
  }

  // What the editor sees: the preserved composite, plus optional background
  // context inside the editable region.
  ConditionStack shown = compose(preserved.lwa());
  ConditionMap depth = shown.at(Modality::kDepth);
  ConditionMap semantic = shown.at(Modality::kSemantic);
  if (options.background_context) {
    const auto& ctx = options.background_context->layer.conditions();
    const ConditionMap& cd = ctx.at(Modality::kDepth);
    const ConditionMap& cs = ctx.at(Modality::kSemantic);
    for (Eigen::Index p = 0; p < domain.pixels(); ++p) {
      if (!edit_mask.at_pixel(p)) continue;
      depth.copy_pixel_from(cd, p);
      semantic.copy_pixel_from(cs, p);
    }
  }

  const PackedImage request_image =
      pack_for_editor(depth, semantic, options.panel, spec, PackOptions{options.d_max});
  fs::create_directories(options.work_dir);
  EditRequest request;
  request.id = options.request_id;
  request.packed = options.work_dir / (options.request_id + ".packed.lwa1");
  request.mask = options.work_dir / (options.request_id + ".mask.lwa1");
  request.instruction = instruction;
  request.d_max = options.d_max;
  request.panel = options.panel;
  save_packed(request.packed, request_image);
  save_mask(request.mask, resample_mask(edit_mask, options.panel));

  const EditResponse response = backend.edit(request);
  PackedImage reply = load_packed(response.packed_out);
  if (!(reply.domain == request_image.domain)) {
    throw Error(ErrorCode::kProtocol,
                "backend returned a " + std::to_string(reply.domain.width) + "x" +
                    std::to_string(reply.domain.height) + " image for a " +
                    std::to_string(request_image.domain.width) + "x" +
                    std::to_string(request_image.domain.height) + " request");
  }
  UnpackedPanels panels =
      unpack_from_editor(reply, options.panel, spec,
                         UnpackOptions{options.d_max, options.max_off_palette});

  ConditionMap edited_depth = resample_depth_bilinear(panels.depth, domain);
  ConditionMap edited_semantic = resample_nearest(panels.semantic, domain);
  if (domain == options.panel) {
    // Pixels the editor left byte-identical keep their full-precision values.
    const Eigen::Index n = domain.pixels();
    for (Eigen::Index p = 0; p < n; ++p) {
      if ((reply.rgb.row(p) == request_image.rgb.row(p)).all()) {
        edited_depth.copy_pixel_from(depth, p);
      }
      if ((reply.rgb.row(n + p) == request_image.rgb.row(n + p)).all()) {
        edited_semantic.copy_pixel_from(semantic, p);
      }
    }
  }

  std::vector<LayerEntry> entries;
  for (Role role : {Role::kTrafficParticipants, Role::kMapLayout}) {
    LayerEntry e = preserved.lwa().at(role);
    if (!options.hard_splice) {
      ConditionStack& c = e.layer.conditions();
      for (Eigen::Index p = 0; p < domain.pixels(); ++p) {
        if (!e.mask.at_pixel(p)) continue;
        if (ConditionMap* d = c.find(Modality::kDepth)) d->copy_pixel_from(edited_depth, p);
        if (ConditionMap* s = c.find(Modality::kSemantic)) s->copy_pixel_from(edited_semantic, p);
      }
    }
    entries.push_back(std::move(e));
  }

  ConditionStack background;
  for (const auto& m : preserved.lwa().at(Role::kTrafficParticipants).layer.conditions().maps()) {
    ConditionMap out = ConditionMap::filled(m.modality(), domain, m.channels());
    const ConditionMap* src = nullptr;
    if (m.modality() == Modality::kDepth) src = &edited_depth;
    if (m.modality() == Modality::kSemantic) src = &edited_semantic;
    // Modalities the editor does not produce come from the context, if any.
    if (!src && options.background_context) {
      src = options.background_context->layer.conditions().find(m.modality());
      if (src && src->channels() != m.channels()) src = nullptr;
    }
    if (src) {
      for (Eigen::Index p = 0; p < domain.pixels(); ++p) {
        if (edit_mask.at_pixel(p)) out.copy_pixel_from(*src, p);
      }
    }
    background.insert(std::move(out));
  }
  entries.push_back(LayerEntry{WorldLayer(Role::kBackground, std::move(background)), edit_mask});
  return Lwa(domain, std::move(entries));
}

double sim2real_loss(const WorldLayer& pred, const WorldLayer& target,
                     const VisibilityMask& region) {
  if (!(pred.domain() == target.domain()) || !(region.domain() == pred.domain())) {
    throw Error(ErrorCode::kDimensionMismatch, "loss inputs span different domains");
  }
  const auto& pm = pred.conditions().maps();
  const auto& tm = target.conditions().maps();
  if (pm.size() != tm.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "layers carry different modalities");
  }
  const Eigen::Index pixels = region.count();
  if (pixels == 0) {
    throw Error(ErrorCode::kEmptyRegion, "sim2real loss over an empty region");
  }
  const Eigen::Map<const PixelFlags> in_region(region.data().data(), region.domain().pixels());
  double sum = 0.0;
  Eigen::Index channels = 0;
  for (std::size_t j = 0; j < pm.size(); ++j) {
    if (pm[j].modality() != tm[j].modality() || pm[j].channels() != tm[j].channels()) {
      throw Error(ErrorCode::kDimensionMismatch, "layers carry different channel layouts");
    }
    const PixelArray diff = pm[j].values() - tm[j].values();
    sum += (diff.square().rowwise().sum() * in_region.cast<double>()).sum();
    channels += pm[j].channels();
  }
  return sum / static_cast<double>(pixels * channels);
}

}  // namespace lwa
