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

#include "lwa/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "lwa/error.hpp"
#include "lwa/raster_io.hpp"
#include "lwa/rng.hpp"

namespace lwa {

namespace fs = std::filesystem;

namespace {

struct Canvas {
  PixelDomain domain;
  PixelArray depth;
  PixelFlags valid;
  PixelArray semantic;
  PixelArray instance;
  PixelArray full;

  explicit Canvas(PixelDomain d)
      : domain(d),
        depth(PixelArray::Zero(d.pixels(), 1)),
        valid(PixelFlags::Constant(d.pixels(), false)),
        semantic(PixelArray::Constant(d.pixels(), 1, kVoidClass)),
        instance(PixelArray::Zero(d.pixels(), 1)),
        full(PixelArray::Zero(d.pixels(), 1)) {}

  void paint(Eigen::Index r0, Eigen::Index c0, Eigen::Index r1, Eigen::Index c1,
             std::uint32_t cls, double meters, std::uint32_t id = 0) {
    r0 = std::max<Eigen::Index>(r0, 0);
    c0 = std::max<Eigen::Index>(c0, 0);
    r1 = std::min<Eigen::Index>(r1, domain.height);
    c1 = std::min<Eigen::Index>(c1, domain.width);
    for (Eigen::Index r = r0; r < r1; ++r) {
      for (Eigen::Index c = c0; c < c1; ++c) {
        const Eigen::Index p = domain.index(r, c);
        semantic(p) = cls;
        depth(p) = meters;
        valid(p) = true;
        instance(p) = id;
      }
    }
  }
};

}  // namespace

std::string frame_key(int index, double rate_hz) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", index / rate_hz);
  return buf;
}

SyntheticScene make_scene(PixelDomain domain, std::uint64_t seed, const LayerSpec& spec,
                          const SceneOptions& options) {
  if (domain.height < 16 || domain.width < 16) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic scenes need at least 16x16 pixels");
  }
  Rng rng(seed);
  auto pick = [&](std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
  };
  auto cls = [&](const char* name) { return spec.index_of(name); };

  const Eigen::Index h = domain.height;
  const Eigen::Index w = domain.width;
  const Eigen::Index horizon = h * 9 / 20;
  Canvas canvas(domain);

  // Sky stays invalid depth; ground depth falls off with distance below
  // the horizon.
  canvas.paint(0, 0, horizon, w, cls("SKY"), 0.0);
  for (Eigen::Index p = 0; p < horizon * w; ++p) canvas.valid(p) = false;
  auto ground_depth = [&](Eigen::Index r) {
    return std::clamp(2.0 * static_cast<double>(h) / static_cast<double>(r - horizon + 1), 2.0,
                      79.0);
  };
  for (Eigen::Index r = horizon; r < h; ++r) {
    const double t = static_cast<double>(r - horizon) / static_cast<double>(h - horizon);
    const auto half_road = static_cast<Eigen::Index>(w * (0.08 + 0.4 * t));
    const auto half_walk = half_road + static_cast<Eigen::Index>(w * (0.02 + 0.1 * t));
    const double d = ground_depth(r);
    canvas.paint(r, 0, r + 1, w, cls("TERRAIN"), d);
    canvas.paint(r, w / 2 - half_walk, r + 1, w / 2 + half_walk, cls("SIDEWALK"), d);
    canvas.paint(r, w / 2 - half_road, r + 1, w / 2 + half_road, cls("ROAD"), d);
  }
  const Eigen::Index cross_row = pick(horizon + (h - horizon) / 3, h - 4);
  for (Eigen::Index c = w / 2 - w / 4; c < w / 2 + w / 4; c += 6) {
    for (Eigen::Index r = cross_row; r < cross_row + 3; ++r) {
      canvas.paint(r, c, r + 1, c + 3, cls("CROSSWALK"), ground_depth(r));
    }
  }

  // Skyline.
  for (Eigen::Index c = 0; c < w;) {
    const Eigen::Index width = pick(w / 16, w / 6);
    const Eigen::Index top = pick(horizon / 5, horizon - 2);
    const bool tree = uniform_below(rng, 4) == 0;
    canvas.paint(top, c, horizon, c + width, cls(tree ? "VEGETATION" : "BUILDING"),
                 static_cast<double>(pick(40, 70)));
    c += width;
  }
  for (int k = 0; k < 2; ++k) {
    const Eigen::Index c = pick(0, w - 3);
    const Eigen::Index top = pick(horizon / 3, horizon);
    const Eigen::Index bottom = pick(horizon + 2, h - 1);
    const double d = ground_depth(bottom);
    canvas.paint(top, c, bottom, c + 2, cls("POLE"), d);
    canvas.paint(top - 4, c - 2, top, c + 4, cls(k == 0 ? "TRAFFIC_SIGN" : "TRAFFIC_LIGHT"), d);
  }

  // Traffic participants in disjoint column slots.
  static constexpr const char* kAgentClasses[] = {"CAR",     "TRUCK",   "BUS",
                                                  "PEDESTRIAN", "BICYCLE", "MOTORCYCLE"};
  std::vector<SceneObject> objects;
  struct Box {
    Eigen::Index r0, c0, r1, c1;
  };
  std::vector<Box> boxes;
  const int n = std::max(options.num_objects, 0);
  const Eigen::Index slot = n > 0 ? w / n : w;
  for (int i = 0; i < n; ++i) {
    const char* name = kAgentClasses[uniform_below(rng, std::size(kAgentClasses))];
    const bool person = std::string_view(name) == "PEDESTRIAN";
    const Eigen::Index bottom = pick(horizon + (h - horizon) / 4, h);
    const double d = ground_depth(bottom - 1);
    const double scale = std::min(1.0, 12.0 / d);
    Eigen::Index bw = std::max<Eigen::Index>(
        8, static_cast<Eigen::Index>(slot * (person ? 0.3 : 0.8) * scale));
    Eigen::Index bh = std::max<Eigen::Index>(8, static_cast<Eigen::Index>(
                                                    bw * (person ? 2.0 : 0.6)));
    bw = std::min(bw, slot - 2);
    bh = std::min(bh, bottom);
    const Eigen::Index c0 = i * slot + pick(1, std::max<Eigen::Index>(1, slot - bw - 1));
    const auto id = static_cast<std::uint32_t>(i + 1);
    canvas.paint(bottom - bh, c0, bottom, c0 + bw, cls(name), d, id);
    boxes.push_back({bottom - bh, c0, bottom, c0 + bw});
    objects.push_back({id, cls(name), bw * bh, bw * bh});
  }
  canvas.full = canvas.instance;

  if (options.occluders) {
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const int tenths = static_cast<int>(uniform_below(rng, 4)) * 2;  // 0, 2, 4 or 6
      if (tenths == 0) continue;
      const Box& b = boxes[i];
      const Eigen::Index cols = (b.c1 - b.c0) * tenths / 10;
      const double d = canvas.depth(domain.index(b.r1 - 1, b.c0)) * 0.5;
      canvas.paint(b.r0, b.c0, b.r1, b.c0 + cols, cls("FENCE"), d);
      objects[i].visible_pixels = (b.c1 - b.c0 - cols) * (b.r1 - b.r0);
    }
  }

  PixelArray rgb(domain.pixels(), 3);
  for (Eigen::Index p = 0; p < domain.pixels(); ++p) {
    const auto label = static_cast<std::uint32_t>(canvas.semantic(p));
    const ClassInfo* info = spec.find(label);
    const Rgb8 color = info ? info->color : spec.void_color();
    const double shade = canvas.valid(p) ? 1.0 - 0.4 * canvas.depth(p) / 80.0 : 1.0;
    for (int k = 0; k < 3; ++k) rgb(p, k) = std::round(color[k] * shade) / 255.0;
  }

  SyntheticScene scene{
      ConditionStack({ConditionMap(Modality::kDepth, domain, canvas.depth, canvas.valid),
                      ConditionMap(Modality::kSemantic, domain, canvas.semantic),
                      ConditionMap(Modality::kInstance, domain, canvas.instance),
                      ConditionMap(Modality::kRgb, domain, rgb)}),
      ConditionMap(Modality::kInstance, domain, canvas.full), std::move(objects)};
  return scene;
}

void write_scenario_tree(const fs::path& root, const TreeOptions& options, std::uint64_t seed,
                         const LayerSpec& spec) {
  if (options.scenarios < 1 || options.frames < 1 || !(options.rate_hz > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "scenario tree needs scenarios, frames and a rate");
  }
  for (int s = 0; s < options.scenarios; ++s) {
    char name[32];
    std::snprintf(name, sizeof name, "scenario_%03d", s);
    const fs::path dir = root / name;
    fs::create_directories(dir);
    const nlohmann::json camera = {
        {"width", options.domain.width},
        {"height", options.domain.height},
        {"fx", options.domain.width * 0.8},
        {"fy", options.domain.width * 0.8},
        {"cx", options.domain.width / 2.0},
        {"cy", options.domain.height / 2.0},
        {"extrinsics", {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 1.6}, {0, 0, 0, 1}}}};
    write_text_atomic(dir / "camera.json", camera.dump(2) + "\n");
    for (int f = 0; f < options.frames; ++f) {
      const std::string key = frame_key(f, options.rate_hz);
      const auto frame_seed = mix_seed(mix_seed(seed, static_cast<std::uint64_t>(s)),
                                       static_cast<std::uint64_t>(f));
      const SyntheticScene scene = make_scene(options.domain, frame_seed, spec, options.scene);
      const std::string file = key + ".lwa1";
      for (const auto& m : scene.frame.maps()) {
        const std::string mod(to_string(m.modality()));
        fs::create_directories(dir / "sim" / mod);
        save_condition(dir / "sim" / mod / file, m);
        if (m.modality() == Modality::kInstance) continue;
        fs::create_directories(dir / "real" / mod);
        save_condition(dir / "real" / mod / file, m);
      }
      fs::create_directories(dir / "sim" / "instance_full");
      save_condition(dir / "sim" / "instance_full" / file, scene.full_instance);
    }
  }
}

}  // namespace lwa
