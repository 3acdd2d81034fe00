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

#include "lwa/curate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_map>

#include "lwa/error.hpp"
#include "lwa/log.hpp"
#include "lwa/parallel.hpp"
#include "lwa/raster_io.hpp"
#include "lwa/rng.hpp"

namespace lwa {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kVideo: return "video";
  }
  return "train";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "video") return Split::kVideo;
  throw Error(ErrorCode::kInvalidArgument, "unknown split '" + std::string(name) + "'");
}

json SampleManifest::to_json() const {
  json j = {{"scenario_id", scenario_id},
            {"timestamp", timestamp},
            {"key", key},
            {"sim", sim_paths},
            {"real", real_paths},
            {"camera", camera},
            {"prompt", prompt ? json(*prompt) : json(nullptr)}};
  if (variant) j["variant"] = *variant;
  if (kept_instances) j["kept_instances"] = *kept_instances;
  if (removed_instances) j["removed_instances"] = *removed_instances;
  return j;
}

SampleManifest SampleManifest::from_json(const json& j) {
  SampleManifest s;
  s.scenario_id = j.at("scenario_id").get<std::string>();
  s.timestamp = j.at("timestamp").get<double>();
  s.key = j.at("key").get<std::string>();
  s.sim_paths = j.at("sim").get<std::map<std::string, std::string>>();
  s.real_paths = j.at("real").get<std::map<std::string, std::string>>();
  s.camera = j.value("camera", json(nullptr));
  if (j.contains("prompt") && !j["prompt"].is_null()) s.prompt = j["prompt"].get<std::string>();
  if (j.contains("variant")) s.variant = j["variant"].get<int>();
  if (j.contains("kept_instances")) {
    s.kept_instances = j["kept_instances"].get<std::vector<std::uint32_t>>();
  }
  if (j.contains("removed_instances")) {
    s.removed_instances = j["removed_instances"].get<std::vector<std::uint32_t>>();
  }
  return s;
}

namespace {
auto sample_key(const SampleManifest& s) {
  return std::make_tuple(std::cref(s.scenario_id), s.timestamp, s.variant.value_or(-1));
}
}  // namespace

void DatasetManifest::normalize() {
  std::stable_sort(samples.begin(), samples.end(),
                   [](const SampleManifest& a, const SampleManifest& b) {
                     return sample_key(a) < sample_key(b);
                   });
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (sample_key(samples[i - 1]) == sample_key(samples[i])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate sample " + samples[i].scenario_id + "@" + samples[i].key);
    }
  }
}

json DatasetManifest::to_json() const {
  json items = json::array();
  for (const auto& s : samples) items.push_back(s.to_json());
  return {{"d3sim_manifest_version", kManifestVersion},
          {"name", name},
          {"split", to_string(split)},
          {"root", root},
          {"sample_rate", sample_rate},
          {"seed", seed},
          {"params", params},
          {"samples", items}};
}

DatasetManifest DatasetManifest::from_json(const json& j) {
  try {
    if (j.at("d3sim_manifest_version").get<int>() != kManifestVersion) {
      throw Error(ErrorCode::kFormat, "unsupported manifest version");
    }
    DatasetManifest m;
    m.name = j.at("name").get<std::string>();
    m.split = split_from_string(j.at("split").get<std::string>());
    m.root = j.at("root").get<std::string>();
    m.sample_rate = j.at("sample_rate").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.params = j.value("params", json::object());
    for (const auto& s : j.at("samples")) m.samples.push_back(SampleManifest::from_json(s));
    m.normalize();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("manifest: ") + e.what());
  }
}

std::string DatasetManifest::dump() const { return to_json().dump(2) + "\n"; }

DatasetManifest load_manifest(const fs::path& path) {
  try {
    return DatasetManifest::from_json(json::parse(read_text(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

void save_manifest(const fs::path& path, const DatasetManifest& manifest) {
  write_text_atomic(path, manifest.dump());
}

fs::path resolve(const DatasetManifest& manifest, const std::string& relative) {
  return fs::path(manifest.root) / relative;
}

namespace {

std::optional<double> parse_timestamp(const std::string& stem) {
  double v = 0.0;
  const char* end = stem.data() + stem.size();
  auto [ptr, ec] = std::from_chars(stem.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_raster_file(const fs::path& p) {
  return p.extension() == ".lwa1" || p.extension() == ".png";
}

std::vector<fs::path> sorted_dirs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// modality -> key -> filename
using SideIndex = std::map<std::string, std::map<std::string, std::string>>;

SideIndex index_side(const fs::path& side_dir) {
  SideIndex index;
  for (const auto& mod_dir : sorted_dirs(side_dir)) {
    auto& files = index[mod_dir.filename().string()];
    for (const auto& e : fs::directory_iterator(mod_dir)) {
      if (!e.is_regular_file() || !is_raster_file(e.path())) continue;
      files.emplace(e.path().stem().string(), e.path().filename().string());
    }
  }
  return index;
}

}  // namespace

DatasetManifest build_manifest(const fs::path& root, Split split, double sample_rate,
                               const std::string& name, std::vector<DroppedSample>* dropped) {
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::kIo, root.string() + " is not a directory");
  }
  DatasetManifest manifest;
  manifest.name = name;
  manifest.split = split;
  manifest.root = root.string();
  manifest.sample_rate = sample_rate;
  manifest.params = {{"layout", "<scenario>/<sim|real>/<modality>/<timestamp>"}};

  for (const auto& scenario_dir : sorted_dirs(root)) {
    const std::string scenario = scenario_dir.filename().string();
    const SideIndex sim = index_side(scenario_dir / "sim");
    const SideIndex real = index_side(scenario_dir / "real");
    json camera = nullptr;
    if (fs::exists(scenario_dir / "camera.json")) {
      try {
        camera = json::parse(read_text(scenario_dir / "camera.json"));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kFormat, (scenario_dir / "camera.json").string() + ": " + e.what());
      }
    }

    std::set<std::string> keys;
    for (const SideIndex* side : {&sim, &real}) {
      for (const auto& [mod, files] : *side) {
        for (const auto& [key, file] : files) keys.insert(key);
      }
    }
    for (const auto& key : keys) {
      std::vector<std::string> missing;
      if (sim.empty()) missing.push_back("sim/*");
      if (real.empty()) missing.push_back("real/*");
      for (const auto& [side_name, side] : {std::pair{"sim", &sim}, std::pair{"real", &real}}) {
        for (const auto& [mod, files] : *side) {
          if (!files.contains(key)) missing.push_back(std::string(side_name) + "/" + mod);
        }
      }
      const auto ts = parse_timestamp(key);
      if (!ts) missing.push_back("timestamp");
      if (!missing.empty()) {
        log_event(LogLevel::kWarn, "sample_dropped",
                  {{"scenario_id", scenario}, {"key", key}, {"missing", missing}});
        if (dropped) dropped->push_back(DroppedSample{scenario, key, missing});
        continue;
      }
      SampleManifest s;
      s.scenario_id = scenario;
      s.timestamp = *ts;
      s.key = key;
      s.camera = camera;
      for (const auto& [mod, files] : sim) {
        s.sim_paths[mod] = scenario + "/sim/" + mod + "/" + files.at(key);
      }
      for (const auto& [mod, files] : real) {
        s.real_paths[mod] = scenario + "/real/" + mod + "/" + files.at(key);
      }
      manifest.samples.push_back(std::move(s));
    }
  }
  if (manifest.samples.empty()) {
    throw Error(ErrorCode::kEmptyInput, root.string() + " holds no complete sample");
  }
  manifest.normalize();
  return manifest;
}

DatasetManifest decimate(const DatasetManifest& manifest, double src_hz, double dst_hz) {
  if (!(src_hz > 0.0) || !(dst_hz > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sample rates must be positive");
  }
  const double ratio = src_hz / dst_hz;
  const double stride_f = std::round(ratio);
  if (stride_f < 1.0 || std::abs(ratio - stride_f) > 1e-9 * ratio) {
    throw Error(ErrorCode::kInvalidArgument,
                "target rate " + std::to_string(dst_hz) + " Hz does not divide " +
                    std::to_string(src_hz) + " Hz");
  }
  const auto stride = static_cast<std::size_t>(stride_f);
  DatasetManifest out = manifest;
  out.sample_rate = dst_hz;
  out.params["decimation"] = {{"src_hz", src_hz}, {"dst_hz", dst_hz}, {"stride", stride}};
  out.samples.clear();
  std::size_t position = 0;
  const std::string* scenario = nullptr;
  for (const auto& s : manifest.samples) {
    if (!scenario || *scenario != s.scenario_id) {
      scenario = &s.scenario_id;
      position = 0;
    }
    if (position++ % stride == 0) out.samples.push_back(s);
  }
  return out;
}

std::vector<ObjectRecord> object_visibility(const ConditionMap& instance, const ConditionMap* depth,
                                            const ConditionMap* full_instance,
                                            const ConditionMap* semantic) {
  for (const ConditionMap* m : {depth, full_instance, semantic}) {
    if (m && !(m->domain() == instance.domain())) {
      throw Error(ErrorCode::kDimensionMismatch, "visibility inputs span different domains");
    }
  }
  std::map<std::uint32_t, ObjectRecord> records;
  std::map<std::uint32_t, std::map<std::uint32_t, std::int64_t>> votes;
  for (Eigen::Index p = 0; p < instance.domain().pixels(); ++p) {
    const auto id = static_cast<std::uint32_t>(instance.values()(p, 0));
    if (id == 0) continue;
    auto& r = records[id];
    r.instance_id = id;
    if (depth && !depth->valid()(p)) continue;
    ++r.visible_pixels;
    if (semantic) ++votes[id][static_cast<std::uint32_t>(semantic->values()(p, 0))];
  }
  if (full_instance) {
    for (Eigen::Index p = 0; p < instance.domain().pixels(); ++p) {
      const auto id = static_cast<std::uint32_t>(full_instance->values()(p, 0));
      if (id == 0) continue;
      auto& r = records[id];
      r.instance_id = id;
      ++r.projected_pixels;
    }
  }
  std::vector<ObjectRecord> out;
  for (auto& [id, r] : records) {
    // Annotation noise can make the occluded render larger than the full one.
    r.projected_pixels =
        full_instance ? std::max(r.projected_pixels, r.visible_pixels) : r.visible_pixels;
    auto v = votes.find(id);
    if (v != votes.end()) {
      const auto best = std::max_element(
          v->second.begin(), v->second.end(),
          [](const auto& a, const auto& b) { return a.second < b.second; });
      r.semantic_class = best->first;
    }
    out.push_back(r);
  }
  return out;
}

std::vector<std::uint32_t> eligible_objects(std::span<const ObjectRecord> records,
                                            double tau_vis, std::int64_t min_pixels) {
  if (!(tau_vis > 0.0 && tau_vis <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tau_vis must be in (0, 1]");
  }
  std::vector<std::uint32_t> out;
  for (const auto& r : records) {
    if (r.projected_pixels > 0 && r.visible_fraction() >= tau_vis &&
        r.visible_pixels >= min_pixels) {
      out.push_back(r.instance_id);
    }
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> sample_subsets(std::span<const std::uint32_t> objects,
                                                       int max_variants, std::uint64_t seed) {
  if (objects.empty()) throw Error(ErrorCode::kEmptyInput, "no eligible objects");
  if (max_variants < 1) throw Error(ErrorCode::kInvalidArgument, "max_variants must be >= 1");
  std::vector<std::uint32_t> sorted(objects.begin(), objects.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  Rng rng(seed);
  std::vector<std::vector<bool>> picks;

  constexpr std::size_t kEnumerateLimit = 20;
  if (n <= kEnumerateLimit) {
    // Partial Fisher-Yates over the nonempty subset codes 1 .. 2^n - 1.
    const std::uint64_t total = (std::uint64_t{1} << n) - 1;
    const auto k = static_cast<std::size_t>(
        std::min<std::uint64_t>(static_cast<std::uint64_t>(max_variants), total));
    std::vector<std::uint64_t> codes(total);
    std::iota(codes.begin(), codes.end(), std::uint64_t{1});
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_below(rng, total - i));
      std::swap(codes[i], codes[j]);
      std::vector<bool> bits(n);
      for (std::size_t b = 0; b < n; ++b) bits[b] = (codes[i] >> b) & 1U;
      picks.push_back(std::move(bits));
    }
  } else {
    // 2^n - 1 dwarfs any practical max_variants: rejection sampling of
    // uniform random subsets.
    std::set<std::vector<bool>> seen;
    while (picks.size() < static_cast<std::size_t>(max_variants)) {
      std::vector<bool> bits(n);
      bool any = false;
      for (std::size_t b = 0; b < n; ++b) {
        bits[b] = uniform_below(rng, 2) == 1;
        any = any || bits[b];
      }
      if (any && seen.insert(bits).second) picks.push_back(std::move(bits));
    }
  }

  std::vector<std::vector<std::uint32_t>> out;
  for (const auto& bits : picks) {
    std::vector<std::uint32_t> subset;
    for (std::size_t b = 0; b < n; ++b) {
      if (bits[b]) subset.push_back(sorted[b]);
    }
    out.push_back(std::move(subset));
  }
  return out;
}

std::vector<SampleManifest> derive_variants(const SampleManifest& sample,
                                            std::span<const ObjectRecord> records,
                                            const ValidationOptions& options) {
  const auto eligible = eligible_objects(records, options.tau_vis, options.min_pixels);
  if (eligible.empty()) {
    throw Error(ErrorCode::kEmptyInput,
                "no eligible objects in " + sample.scenario_id + "@" + sample.key);
  }
  const std::uint64_t seed =
      mix_seed(options.seed, fnv1a(sample.scenario_id + "/" + sample.key));
  std::vector<SampleManifest> out;
  int index = 0;
  for (const auto& kept : sample_subsets(eligible, options.max_variants, seed)) {
    SampleManifest v = sample;
    v.variant = index++;
    v.kept_instances = kept;
    std::vector<std::uint32_t> removed;
    for (const auto& r : records) {
      if (!std::binary_search(kept.begin(), kept.end(), r.instance_id)) {
        removed.push_back(r.instance_id);
      }
    }
    v.removed_instances = std::move(removed);
    out.push_back(std::move(v));
  }
  return out;
}

namespace {

const ConditionMap* load_optional(const DatasetManifest& m, const SampleManifest& s,
                                  const std::string& key, Modality modality,
                                  std::optional<ConditionMap>& slot) {
  auto it = s.sim_paths.find(key);
  if (it == s.sim_paths.end()) return nullptr;
  slot.emplace(load_condition(resolve(m, it->second), modality));
  return &*slot;
}

std::vector<ObjectRecord> frame_records(const DatasetManifest& m, const SampleManifest& s,
                                        bool use_depth) {
  std::optional<ConditionMap> instance, full, semantic, depth;
  if (!load_optional(m, s, "instance", Modality::kInstance, instance)) {
    throw Error(ErrorCode::kMissingModality,
                s.scenario_id + "@" + s.key + " has no sim instance map");
  }
  const ConditionMap* f =
      load_optional(m, s, std::string(kFullInstanceModality), Modality::kInstance, full);
  const ConditionMap* sem = load_optional(m, s, "semantic", Modality::kSemantic, semantic);
  const ConditionMap* d =
      use_depth ? load_optional(m, s, "depth", Modality::kDepth, depth) : nullptr;
  return object_visibility(*instance, d, f, sem);
}

}  // namespace

DatasetManifest derive_validation(const DatasetManifest& manifest,
                                  const ValidationOptions& options) {
  DatasetManifest out = manifest;
  out.split = Split::kValidation;
  out.seed = options.seed;
  out.params["validation"] = {{"tau_vis", options.tau_vis},
                              {"min_pixels", options.min_pixels},
                              {"max_variants", options.max_variants},
                              {"seed", options.seed}};
  out.samples.clear();
  const auto per_sample = parallel_map(
      manifest.samples.size(), options.jobs, [&](std::size_t i) {
        const SampleManifest& s = manifest.samples[i];
        const auto records = frame_records(manifest, s, true);
        try {
          return derive_variants(s, records, options);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kEmptyInput) throw;
          log_event(LogLevel::kInfo, "no_eligible_objects",
                    {{"scenario_id", s.scenario_id}, {"key", s.key}});
          return std::vector<SampleManifest>{};
        }
      });
  for (const auto& variants : per_sample) {
    out.samples.insert(out.samples.end(), variants.begin(), variants.end());
  }
  if (out.samples.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no frame has an eligible object");
  }
  out.normalize();
  return out;
}

Lwa apply_variant(const Lwa& lwa, const ConditionMap& instance,
                  std::span<const std::uint32_t> kept) {
  if (!(instance.domain() == lwa.domain())) {
    throw Error(ErrorCode::kDimensionMismatch, "instance map does not match abstraction");
  }
  const std::set<std::uint32_t> keep(kept.begin(), kept.end());
  const VisibilityMask& traffic = lwa.at(Role::kTrafficParticipants).mask;
  VisibilityMask removed(lwa.domain());
  for (Eigen::Index p = 0; p < lwa.domain().pixels(); ++p) {
    const auto id = static_cast<std::uint32_t>(instance.values()(p, 0));
    if (id != 0 && !keep.contains(id) && traffic.at_pixel(p)) removed.set_pixel(p, true);
  }
  Lwa out = reassign_mask(lwa, removed, Role::kTrafficParticipants, Role::kBackground);
  for (auto& m : out.at(Role::kBackground).layer.conditions().maps()) {
    if (m.modality() == Modality::kRgb) continue;
    for (Eigen::Index p = 0; p < lwa.domain().pixels(); ++p) {
      if (removed.at_pixel(p)) m.fill_pixel(p);
    }
  }
  return out;
}

PromptSpec PromptSpec::default_spec(std::uint64_t seed) {
  PromptSpec spec;
  spec.seed = seed;
  spec.template_text =
      "A realistic driving scene on {street_type} in {city}, {weather} weather, at {time_of_day}.";
  spec.pools["city"] = {
      "Boston",    "Pittsburgh", "Las Vegas", "Singapore", "San Francisco", "New York",
      "Tokyo",     "London",     "Paris",     "Berlin",    "Munich",        "Amsterdam",
      "Rome",      "Madrid",     "Barcelona", "Lisbon",    "Vienna",        "Prague",
      "Stockholm", "Oslo",       "Helsinki",  "Copenhagen", "Seoul",        "Shanghai",
      "Beijing",   "Hong Kong",  "Sydney",    "Melbourne", "Toronto",       "Vancouver",
      "Chicago",   "Los Angeles", "Seattle",  "Mumbai",    "Dubai"};
  spec.pools["weather"] = {
      "sunny",     "clear",       "cloudy",     "overcast",   "partly cloudy", "rainy",
      "drizzling", "stormy",      "snowy",      "foggy",      "misty",         "hazy",
      "windy",     "sleeting",    "hailing",    "thundery",   "dusty",         "humid",
      "icy",       "light snow"};
  spec.pools["time_of_day"] = {"dawn", "noon", "dusk", "night"};
  spec.pools["street_type"] = {"a highway", "an urban street", "a residential road",
                               "an intersection", "a rural road"};
  return spec;
}

PromptSpec PromptSpec::from_json(const json& j) {
  try {
    PromptSpec spec;
    spec.template_text = j.at("template").get<std::string>();
    spec.pools = j.at("pools").get<std::map<std::string, std::vector<std::string>>>();
    spec.seed = j.value("seed", std::uint64_t{0});
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("prompt spec: ") + e.what());
  }
}

json PromptSpec::to_json() const {
  return {{"template", template_text}, {"pools", pools}, {"seed", seed}};
}

std::vector<std::string> template_slots(const std::string& text) {
  std::vector<std::string> slots;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string::npos) {
    const std::size_t end = text.find('}', pos);
    if (end == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "unterminated slot in prompt template");
    }
    std::string name = text.substr(pos + 1, end - pos - 1);
    if (std::find(slots.begin(), slots.end(), name) == slots.end()) slots.push_back(name);
    pos = end + 1;
  }
  return slots;
}

std::vector<std::string> gen_prompts(const PromptSpec& spec, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "prompt count must be >= 1");
  const auto slots = template_slots(spec.template_text);
  for (const auto& slot : slots) {
    auto it = spec.pools.find(slot);
    if (it == spec.pools.end() || it->second.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "prompt slot '" + slot + "' has no values");
    }
  }
  Rng rng(spec.seed);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::map<std::string, std::string> chosen;
    for (const auto& slot : slots) {
      const auto& pool = spec.pools.at(slot);
      chosen[slot] = pool[uniform_below(rng, pool.size())];
    }
    std::string text;
    std::size_t pos = 0;
    while (true) {
      const std::size_t open = spec.template_text.find('{', pos);
      if (open == std::string::npos) {
        text += spec.template_text.substr(pos);
        break;
      }
      const std::size_t close = spec.template_text.find('}', open);
      text += spec.template_text.substr(pos, open - pos);
      text += chosen.at(spec.template_text.substr(open + 1, close - open - 1));
      pos = close + 1;
    }
    out.push_back(std::move(text));
  }
  return out;
}

std::map<std::string, std::int64_t> object_histogram(const DatasetManifest& manifest,
                                                     const LayerSpec& spec, int jobs) {
  const auto per_sample = parallel_map(manifest.samples.size(), jobs, [&](std::size_t i) {
    const SampleManifest& s = manifest.samples[i];
    std::map<std::string, std::int64_t> counts;
    for (const auto& r : frame_records(manifest, s, true)) {
      if (s.kept_instances &&
          std::find(s.kept_instances->begin(), s.kept_instances->end(), r.instance_id) ==
              s.kept_instances->end()) {
        continue;
      }
      std::string name = "UNLABELED";
      if (r.semantic_class) {
        const ClassInfo* c = spec.find(*r.semantic_class);
        name = c ? c->name : "class_" + std::to_string(*r.semantic_class);
      }
      ++counts[name];
    }
    return counts;
  });
  std::map<std::string, std::int64_t> total;
  for (const auto& counts : per_sample) {
    for (const auto& [name, n] : counts) total[name] += n;
  }
  return total;
}

json pack_video_sequence(const DatasetManifest& manifest, int clip_len,
                         const std::string& lwa_root) {
  if (clip_len < 2) throw Error(ErrorCode::kInvalidArgument, "clip_len must be >= 2");
  std::map<std::string, std::vector<const SampleManifest*>> by_scenario;
  for (const auto& s : manifest.samples) by_scenario[s.scenario_id].push_back(&s);

  json clips = json::array();
  std::int64_t dropped = 0;
  for (const auto& [scenario, frames] : by_scenario) {
    if (frames.size() < static_cast<std::size_t>(clip_len)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "scenario " + scenario + " has " + std::to_string(frames.size()) +
                      " frames, shorter than clip_len " + std::to_string(clip_len));
    }
    const std::size_t count = frames.size() / static_cast<std::size_t>(clip_len);
    dropped += static_cast<std::int64_t>(frames.size() - count * clip_len);
    for (std::size_t c = 0; c < count; ++c) {
      json items = json::array();
      for (int k = 0; k < clip_len; ++k) {
        const SampleManifest& f = *frames[c * clip_len + static_cast<std::size_t>(k)];
        const std::string dir = lwa_root + "/" + scenario + "/" + f.key;
        items.push_back({{"timestamp", f.timestamp},
                         {"key", f.key},
                         {"lwa", dir},
                         {"edit_mask", dir + "/background.mask.lwa1"}});
      }
      clips.push_back({{"scenario_id", scenario}, {"clip_index", c}, {"frames", items}});
    }
  }
  return {{"d3sim_manifest_version", kManifestVersion},
          {"name", manifest.name},
          {"split", "video"},
          {"sample_rate", manifest.sample_rate},
          {"clip_len", clip_len},
          {"dropped_frames", dropped},
          {"clips", clips}};
}

}  // namespace lwa
