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

// Command-line front end: decompose, compose, refine, curate, derive-val,
// prompts, stats, eval, train-xi and the reference mock backend.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lwa/backend.hpp"
#include "lwa/curate.hpp"
#include "lwa/error.hpp"
#include "lwa/layer_spec.hpp"
#include "lwa/log.hpp"
#include "lwa/lwa.hpp"
#include "lwa/metrics.hpp"
#include "lwa/mixcond.hpp"
#include "lwa/parallel.hpp"
#include "lwa/raster_io.hpp"
#include "lwa/rng.hpp"
#include "lwa/sim2real.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string layer_spec;
  std::string log_level;

  // decompose / compose
  std::string input, depth, semantic, instance, rgb, lwa_dir, out, modality;
  bool strict = false;

  // refine
  std::string instruction = "make it look real";
  std::string backend;
  std::string mock;
  std::string work_dir;
  std::string request_id = "edit-0";
  bool no_hard_splice = false;
  bool with_context = false;
  int panel_width = 512;
  int panel_height = 288;
  double d_max = lwa::kDefaultDepthMax;
  double max_off_palette = lwa::kDefaultMaxOffPalette;
  int timeout_ms = 30000;

  // curate family
  std::string root, split = "train", name = "d3sim", manifest, prompt_spec;
  double sample_rate = 10.0;
  double target_rate = 0.0;
  bool with_prompts = false;
  double tau_vis = 0.75;
  std::int64_t min_pixels = 64;
  int max_variants = 4;
  int count = 10;
  int clip_len = 0;
  std::string lwa_root = "lwa";

  // eval
  std::vector<std::string> pred, sim;
  std::string region = "full";
  std::vector<std::string> classes;
  std::string features_a, features_b;
  double eps = 1e-6;

  // train-xi
  bool synthetic = false;
  int c_in = 192, c_out = 128, cells = 1000, samples = 1, steps = 500, patch = 1;
  double lr = 1e-2, noise = 0.01;

  // mock-backend
  std::string mode = "identity";
  std::string http;
  std::string fill_class = "BUILDING";
  double fill_depth = 40.0;
};

/// Options filled from the environment when absent from the command line.
const std::map<std::string, std::string> kEnvOptions = {{"backend", "LWA_BACKEND_ENDPOINT"},
                                                        {"log-level", "LWA_LOG_LEVEL"}};

void build(CLI::App& app, Options& o) {
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config, "JSON file of default option values");
  app.add_option("--seed", o.seed, "Seed for every random choice");
  app.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--layer-spec", o.layer_spec, "Class table and role mapping (JSON)");
  app.add_option("--log-level", o.log_level, "debug|info|warn|error");

  auto* dec = app.add_subcommand("decompose", "Split an annotated frame into world layers");
  dec->add_option("--input", o.input, "Directory of <modality>.lwa1 rasters");
  dec->add_option("--depth", o.depth);
  dec->add_option("--semantic", o.semantic);
  dec->add_option("--instance", o.instance);
  dec->add_option("--rgb", o.rgb);
  dec->add_option("--out", o.out, "Output directory");
  dec->add_option("--modality", o.modality, "Write only this composited modality");
  dec->add_flag("--strict", o.strict, "Reject labels missing from the class table");

  auto* com = app.add_subcommand("compose", "Composite a layered abstraction");
  com->add_option("--lwa", o.lwa_dir);
  com->add_option("--out", o.out);
  com->add_option("--modality", o.modality);

  auto* ref = app.add_subcommand("refine", "Replace the background layer through an editor");
  ref->add_option("--lwa", o.lwa_dir);
  ref->add_option("--out", o.out);
  ref->add_option("--instruction", o.instruction);
  ref->add_option("--backend", o.backend, "stdio:<command> or http://host:port");
  ref->add_option("--mock", o.mock, "In-process mock backend: identity|constant-fill");
  ref->add_option("--fill-class", o.fill_class);
  ref->add_option("--fill-depth", o.fill_depth);
  ref->add_option("--work-dir", o.work_dir);
  ref->add_option("--request-id", o.request_id);
  ref->add_flag("--no-hard-splice", o.no_hard_splice);
  ref->add_flag("--with-context", o.with_context, "Send the source background as context");
  ref->add_option("--panel-width", o.panel_width);
  ref->add_option("--panel-height", o.panel_height);
  ref->add_option("--d-max", o.d_max);
  ref->add_option("--max-off-palette", o.max_off_palette);
  ref->add_option("--timeout-ms", o.timeout_ms);

  auto* cur = app.add_subcommand("curate", "Build a dataset manifest from a scenario tree");
  cur->add_option("--root", o.root);
  cur->add_option("--out", o.out);
  cur->add_option("--split", o.split);
  cur->add_option("--name", o.name);
  cur->add_option("--sample-rate", o.sample_rate);
  cur->add_option("--target-rate", o.target_rate, "Decimate to this rate");
  cur->add_flag("--with-prompts", o.with_prompts, "Attach a generated prompt to each sample");
  cur->add_option("--prompt-spec", o.prompt_spec);
  cur->add_option("--clip-len", o.clip_len, "Also write <out>.video.json with clips");
  cur->add_option("--lwa-root", o.lwa_root);

  auto* val = app.add_subcommand("derive-val", "Derive the validation split");
  val->add_option("--manifest", o.manifest);
  val->add_option("--out", o.out);
  val->add_option("--tau-vis", o.tau_vis);
  val->add_option("--min-pixels", o.min_pixels);
  val->add_option("--max-variants", o.max_variants);

  auto* pro = app.add_subcommand("prompts", "Generate text prompts");
  pro->add_option("--count", o.count);
  pro->add_option("--prompt-spec", o.prompt_spec);
  pro->add_option("--manifest", o.manifest, "Attach prompts to this manifest's samples");
  pro->add_option("--out", o.out);

  auto* sta = app.add_subcommand("stats", "Per-class object histogram of a manifest");
  sta->add_option("--manifest", o.manifest);
  sta->add_option("--out", o.out);

  auto* ev = app.add_subcommand("eval", "Controllability and Frechet distance reports");
  ev->add_option("--pred", o.pred, "Annotation directories of generated frames");
  ev->add_option("--sim", o.sim, "Simulator abstraction directories, paired with --pred");
  ev->add_option("--region", o.region, "full|preserved");
  ev->add_option("--classes", o.classes, "Class names to score (default: whole table)")
      ->delimiter(',');
  ev->add_option("--features-a", o.features_a);
  ev->add_option("--features-b", o.features_b);
  ev->add_option("--eps", o.eps);
  ev->add_option("--out", o.out);

  auto* tr = app.add_subcommand("train-xi", "Fit the condition projection layer");
  tr->add_flag("--synthetic", o.synthetic, "Train on a generated linear task");
  tr->add_option("--manifest", o.manifest);
  tr->add_option("--out", o.out);
  tr->add_option("--steps", o.steps);
  tr->add_option("--lr", o.lr);
  tr->add_option("--c-in", o.c_in);
  tr->add_option("--c-out", o.c_out);
  tr->add_option("--cells", o.cells);
  tr->add_option("--samples", o.samples);
  tr->add_option("--noise", o.noise);
  tr->add_option("--patch", o.patch);

  auto* mb = app.add_subcommand("mock-backend", "Serve the reference editing backend");
  mb->add_option("--mode", o.mode, "identity|constant-fill");
  mb->add_option("--http", o.http, "Listen on host:port instead of stdio");
  mb->add_option("--fill-class", o.fill_class);
  mb->add_option("--fill-depth", o.fill_depth);
}

std::string option_key(const CLI::Option* opt) {
  const auto& names = opt->get_lnames();
  return names.empty() ? std::string() : names.front();
}

std::vector<std::string> config_args(const json& value, const CLI::Option* opt) {
  const std::string flag = "--" + option_key(opt);
  if (opt->get_type_size() == 0) {
    return value.is_boolean() && value.get<bool>() ? std::vector<std::string>{flag}
                                                   : std::vector<std::string>{};
  }
  std::vector<std::string> out;
  auto text = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  if (value.is_array()) {
    for (const auto& v : value) {
      out.push_back(flag);
      out.push_back(text(v));
    }
  } else {
    out.push_back(flag);
    out.push_back(text(value));
  }
  return out;
}

/// Arguments for options the command line left unset: environment first,
/// then the config file (section for the subcommand, then top level).
std::vector<std::string> implied_args(const CLI::App& app, const CLI::App& sub,
                                      const json& config) {
  std::vector<std::string> out;
  for (const CLI::App* scope : {&app, &sub}) {
    for (const CLI::Option* opt : scope->get_options()) {
      const std::string key = option_key(opt);
      if (key.empty() || key == "help" || key == "config" || opt->count() > 0) continue;
      auto env = kEnvOptions.find(key);
      if (env != kEnvOptions.end()) {
        if (const char* v = std::getenv(env->second.c_str()); v && *v) {
          out.push_back("--" + key);
          out.push_back(v);
          continue;
        }
      }
      const json* value = nullptr;
      const std::string section = sub.get_name();
      if (config.contains(section) && config[section].is_object() &&
          config[section].contains(key)) {
        value = &config[section][key];
      } else if (config.contains(key)) {
        value = &config[key];
      }
      if (value) {
        const auto args = config_args(*value, opt);
        out.insert(out.end(), args.begin(), args.end());
      }
    }
  }
  return out;
}

void emit(const json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    lwa::write_text_atomic(out, text);
  }
}

const std::string& need(const std::string& value, const char* flag) {
  if (value.empty()) {
    throw lwa::Error(lwa::ErrorCode::kInvalidArgument, std::string(flag) + " is required");
  }
  return value;
}

lwa::LayerSpec layer_spec(const Options& o) {
  return o.layer_spec.empty() ? lwa::LayerSpec::default_spec() : lwa::LayerSpec::load(o.layer_spec);
}

void write_modality(const fs::path& dir, const lwa::ConditionMap& map) {
  fs::create_directories(dir);
  lwa::save_condition(dir / (std::string(lwa::to_string(map.modality())) + ".lwa1"), map);
}

int cmd_decompose(const Options& o) {
  const lwa::LayerSpec spec = layer_spec(o);
  lwa::ConditionStack frame;
  if (!o.input.empty()) frame = lwa::load_stack(o.input);
  const std::pair<const std::string*, lwa::Modality> files[] = {
      {&o.depth, lwa::Modality::kDepth},
      {&o.semantic, lwa::Modality::kSemantic},
      {&o.instance, lwa::Modality::kInstance},
      {&o.rgb, lwa::Modality::kRgb}};
  for (const auto& [path, modality] : files) {
    if (!path->empty()) frame.insert(lwa::load_condition(*path, modality));
  }
  const lwa::Lwa lwa = lwa::decompose(frame, spec, {o.strict});
  const fs::path out = need(o.out, "--out");
  if (!o.modality.empty()) {
    write_modality(out, lwa::extract_modality(lwa, lwa::modality_from_string(o.modality)));
  } else {
    lwa::save_lwa(out, lwa);
  }
  lwa::log_event(lwa::LogLevel::kInfo, "decompose_done", {{"out", out.string()}});
  return 0;
}

int cmd_compose(const Options& o) {
  const lwa::Lwa lwa = lwa::load_lwa(need(o.lwa_dir, "--lwa"));
  const fs::path out = need(o.out, "--out");
  if (!o.modality.empty()) {
    write_modality(out, lwa::extract_modality(lwa, lwa::modality_from_string(o.modality)));
  } else {
    lwa::save_stack(out, lwa::compose(lwa));
  }
  return 0;
}

lwa::MockBackendConfig mock_config(const Options& o, const lwa::LayerSpec& spec) {
  lwa::MockBackendConfig cfg;
  if (o.mode == "identity") {
    cfg.mode = lwa::MockMode::kIdentity;
  } else if (o.mode == "constant-fill") {
    cfg.mode = lwa::MockMode::kConstantFill;
  } else {
    throw lwa::Error(lwa::ErrorCode::kInvalidArgument, "unknown mock mode '" + o.mode + "'");
  }
  cfg.fill_color = spec.find(spec.index_of(o.fill_class))->color;
  cfg.fill_depth = o.fill_depth;
  return cfg;
}

int cmd_refine(const Options& o) {
  const lwa::LayerSpec spec = layer_spec(o);
  const lwa::Lwa source = lwa::load_lwa(need(o.lwa_dir, "--lwa"));
  const fs::path out = need(o.out, "--out");

  std::optional<lwa::BackendHandle> backend;
  if (!o.mock.empty()) {
    Options mock = o;
    mock.mode = o.mock;
    const lwa::MockBackendConfig cfg = mock_config(mock, spec);
    backend.emplace(lwa::BackendHandle::in_process(
        [cfg](const std::string& line) { return lwa::mock_backend_reply(line, cfg); },
        "mock:" + o.mock));
  } else {
    backend.emplace(lwa::parse_backend_spec(
        need(o.backend, "--backend (or LWA_BACKEND_ENDPOINT)"),
        std::chrono::milliseconds(o.timeout_ms)));
  }

  lwa::RefineOptions options;
  options.hard_splice = !o.no_hard_splice;
  options.panel = lwa::PixelDomain::make(o.panel_height, o.panel_width);
  options.d_max = o.d_max;
  options.max_off_palette = o.max_off_palette;
  options.request_id = o.request_id;
  options.work_dir = o.work_dir.empty() ? out / "requests" : fs::path(o.work_dir);
  fs::create_directories(options.work_dir);
  if (o.with_context) options.background_context = &source.at(lwa::Role::kBackground);

  const lwa::Lwa refined = lwa::refine(lwa::assemble_preserved(source),
                                       lwa::derive_edit_mask(source), o.instruction, *backend,
                                       spec, options);
  lwa::save_lwa(out, refined);
  lwa::log_event(lwa::LogLevel::kInfo, "refine_done",
                 {{"backend", backend->identity()}, {"hard_splice", options.hard_splice}});
  return 0;
}

lwa::PromptSpec prompt_spec(const Options& o) {
  if (o.prompt_spec.empty()) return lwa::PromptSpec::default_spec(o.seed);
  lwa::PromptSpec spec = lwa::PromptSpec::from_json(json::parse(lwa::read_text(o.prompt_spec)));
  spec.seed = o.seed;
  return spec;
}

void attach_prompts(lwa::DatasetManifest& m, const Options& o) {
  if (m.samples.empty()) return;
  const lwa::PromptSpec spec = prompt_spec(o);
  const auto prompts = lwa::gen_prompts(spec, static_cast<int>(m.samples.size()));
  for (std::size_t i = 0; i < m.samples.size(); ++i) m.samples[i].prompt = prompts[i];
  m.params["prompts"] = {{"seed", spec.seed}, {"template", spec.template_text}};
}

int cmd_curate(const Options& o) {
  const fs::path out = need(o.out, "--out");
  lwa::DatasetManifest m = lwa::build_manifest(need(o.root, "--root"),
                                               lwa::split_from_string(o.split), o.sample_rate,
                                               o.name);
  m.seed = o.seed;
  if (o.target_rate > 0.0) m = lwa::decimate(m, o.sample_rate, o.target_rate);
  if (o.with_prompts) attach_prompts(m, o);
  lwa::save_manifest(out, m);
  if (o.clip_len > 0) {
    fs::path video = out;
    video.replace_extension(".video.json");
    emit(lwa::pack_video_sequence(m, o.clip_len, o.lwa_root), video.string());
  }
  lwa::log_event(lwa::LogLevel::kInfo, "curate_done",
                 {{"samples", m.samples.size()}, {"out", out.string()}});
  return 0;
}

int cmd_derive_val(const Options& o) {
  lwa::ValidationOptions v;
  v.tau_vis = o.tau_vis;
  v.min_pixels = o.min_pixels;
  v.max_variants = o.max_variants;
  v.seed = o.seed;
  v.jobs = o.jobs;
  const lwa::DatasetManifest m =
      lwa::derive_validation(lwa::load_manifest(need(o.manifest, "--manifest")), v);
  lwa::save_manifest(need(o.out, "--out"), m);
  lwa::log_event(lwa::LogLevel::kInfo, "derive_val_done", {{"variants", m.samples.size()}});
  return 0;
}

int cmd_prompts(const Options& o) {
  if (!o.manifest.empty()) {
    lwa::DatasetManifest m = lwa::load_manifest(o.manifest);
    attach_prompts(m, o);
    lwa::save_manifest(need(o.out, "--out"), m);
    return 0;
  }
  const lwa::PromptSpec spec = prompt_spec(o);
  emit({{"seed", spec.seed}, {"prompts", lwa::gen_prompts(spec, o.count)}}, o.out);
  return 0;
}

int cmd_stats(const Options& o) {
  const lwa::DatasetManifest m = lwa::load_manifest(need(o.manifest, "--manifest"));
  const auto histogram = lwa::object_histogram(m, layer_spec(o), o.jobs);
  std::int64_t total = 0;
  for (const auto& [name, n] : histogram) total += n;
  emit({{"metric", "object_histogram"},
        {"split", lwa::to_string(m.split)},
        {"n_samples", m.samples.size()},
        {"total", total},
        {"classes", histogram}},
       o.out);
  return 0;
}

int cmd_eval(const Options& o) {
  json reports = json::array();
  if (!o.features_a.empty() || !o.features_b.empty()) {
    const Eigen::MatrixXd a = lwa::load_tensor(need(o.features_a, "--features-a"));
    const Eigen::MatrixXd b = lwa::load_tensor(need(o.features_b, "--features-b"));
    reports.push_back({{"metric", "fid"},
                       {"value", lwa::frechet_distance(a, b, o.eps)},
                       {"n_samples", {a.rows(), b.rows()}},
                       {"region", "full"}});
  }
  if (!o.pred.empty() || !o.sim.empty()) {
    if (o.pred.size() != o.sim.size()) {
      throw lwa::Error(lwa::ErrorCode::kInvalidArgument,
                       "--pred and --sim must be given the same number of times");
    }
    const lwa::LayerSpec spec = layer_spec(o);
    std::vector<std::uint32_t> classes;
    if (o.classes.empty()) {
      for (const auto& c : spec.classes()) classes.push_back(c.index);
    } else {
      for (const auto& name : o.classes) classes.push_back(spec.index_of(name));
    }
    const auto restrict = lwa::region_restriction_from_string(o.region);
    const auto results = lwa::parallel_map(o.pred.size(), o.jobs, [&](std::size_t i) {
      return lwa::controllability_report(lwa::load_stack(o.pred[i]), lwa::load_lwa(o.sim[i]),
                                         restrict, classes);
    });
    double si = 0.0, mi = 0.0;
    std::map<std::uint32_t, std::pair<double, int>> per_class;
    for (const auto& r : results) {
      si += r.si_rmse;
      mi += r.miou.miou;
      for (const auto& [k, iou] : r.miou.per_class) {
        per_class[k].first += iou;
        ++per_class[k].second;
      }
    }
    const auto n = static_cast<double>(results.size());
    json classes_json = json::object();
    for (const auto& [k, acc] : per_class) {
      const lwa::ClassInfo* info = spec.find(k);
      classes_json[info ? info->name : std::to_string(k)] = acc.first / acc.second;
    }
    reports.push_back(
        {{"metric", "si_rmse"}, {"value", si / n}, {"n_samples", results.size()}, {"region", o.region}});
    reports.push_back({{"metric", "miou"},
                       {"value", mi / n},
                       {"n_samples", results.size()},
                       {"region", o.region},
                       {"per_class", classes_json}});
  }
  if (reports.empty()) {
    throw lwa::Error(lwa::ErrorCode::kInvalidArgument,
                     "give --pred/--sim pairs, --features-a/--features-b, or both");
  }
  emit(reports, o.out);
  return 0;
}

std::vector<lwa::TrainingSample<double>> manifest_samples(const Options& o) {
  const lwa::DatasetManifest m = lwa::load_manifest(o.manifest);
  const lwa::EncoderStub enc{o.patch, lwa::Reduction::kMean};
  auto stack_of = [&](const std::map<std::string, std::string>& paths) {
    lwa::ConditionStack stack;
    for (const lwa::Modality mod : lwa::kCanonicalModalities) {
      auto it = paths.find(std::string(lwa::to_string(mod)));
      if (it != paths.end()) stack.insert(lwa::load_condition(lwa::resolve(m, it->second), mod));
    }
    return stack;
  };
  return lwa::parallel_map(m.samples.size(), o.jobs, [&](std::size_t i) {
    const auto& s = m.samples[i];
    auto cond = lwa::encode_stack<double>(stack_of(s.sim_paths), enc);
    auto x0 = lwa::encode_stack<double>(stack_of(s.real_paths), enc);
    lwa::Rng rng(lwa::mix_seed(o.seed, i));
    Eigen::MatrixXd noise(x0.cells(), x0.channels());
    for (Eigen::Index k = 0; k < noise.size(); ++k) noise.data()[k] = lwa::standard_normal(rng);
    lwa::LatentGrid<double> x(x0.height(), x0.width(), std::move(noise), lwa::LatentSource::kNoise);
    return lwa::TrainingSample<double>{std::move(x), std::move(cond), std::move(x0)};
  });
}

int cmd_train_xi(const Options& o) {
  std::vector<lwa::TrainingSample<double>> data;
  json extra = json::object();
  if (o.synthetic) {
    auto task = lwa::make_linear_task(o.c_in, o.c_out, o.cells, o.noise, o.seed, o.samples);
    data = std::move(task.samples);
  } else {
    data = manifest_samples(o);
  }
  const lwa::ProjectionLayer<double> optimum = lwa::least_squares_projection(data);
  const double optimal_loss = lwa::batch_loss<double>(data, optimum);

  const lwa::TrainResult<double> result =
      lwa::train_xi<double>(data, {o.steps, o.lr, o.seed});
  const fs::path out = need(o.out, "--out");
  lwa::save_projection(out, result.xi,
                       {result.xi.c_in(), result.xi.c_out(), o.seed, o.steps, o.lr});
  emit({{"trace", result.trace},
        {"final_loss", result.final_loss},
        {"optimal_loss", optimal_loss},
        {"steps", o.steps},
        {"lr", o.lr},
        {"seed", o.seed}},
       (out / "loss_trace.json").string());
  lwa::log_event(lwa::LogLevel::kInfo, "train_xi_done",
                 {{"final_loss", result.final_loss}, {"optimal_loss", optimal_loss}});
  return 0;
}

int cmd_mock_backend(const Options& o) {
  const lwa::MockBackendConfig cfg = mock_config(o, layer_spec(o));
  if (o.http.empty()) {
    lwa::serve_mock_stdio(std::cin, std::cout, cfg);
    return 0;
  }
  const auto colon = o.http.rfind(':');
  if (colon == std::string::npos) {
    throw lwa::Error(lwa::ErrorCode::kInvalidArgument, "--http expects host:port");
  }
  lwa::serve_mock_http(o.http.substr(0, colon), std::stoi(o.http.substr(colon + 1)), cfg);
  return 0;
}

void report_error(std::string_view code, const std::string& message) {
  std::cerr << json{{"level", "error"}, {"event", "error"}, {"code", code}, {"message", message}}
                   .dump()
            << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Layered world abstraction toolkit"};
  build(app, o);
  try {
    app.parse(argc, argv);
    const CLI::App* sub = app.get_subcommands().front();
    json config = json::object();
    if (!o.config.empty()) config = json::parse(lwa::read_text(o.config));
    const std::vector<std::string> extra = implied_args(app, *sub, config);
    if (!extra.empty()) {
      std::vector<std::string> args(argv, argv + argc);
      args.insert(args.end(), extra.begin(), extra.end());
      std::vector<const char*> ptrs;
      for (const auto& a : args) ptrs.push_back(a.c_str());
      app.clear();
      o = Options{};
      app.parse(static_cast<int>(ptrs.size()), ptrs.data());
    }
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return 2;
  } catch (const std::exception& e) {
    report_error("config", e.what());
    return 2;
  }

  try {
    if (!o.log_level.empty()) {
      static const std::map<std::string, lwa::LogLevel> levels = {
          {"debug", lwa::LogLevel::kDebug},
          {"info", lwa::LogLevel::kInfo},
          {"warn", lwa::LogLevel::kWarn},
          {"error", lwa::LogLevel::kError}};
      auto it = levels.find(o.log_level);
      if (it == levels.end()) {
        throw lwa::Error(lwa::ErrorCode::kInvalidArgument, "unknown log level " + o.log_level);
      }
      lwa::set_log_threshold(it->second);
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "decompose") return cmd_decompose(o);
    if (cmd == "compose") return cmd_compose(o);
    if (cmd == "refine") return cmd_refine(o);
    if (cmd == "curate") return cmd_curate(o);
    if (cmd == "derive-val") return cmd_derive_val(o);
    if (cmd == "prompts") return cmd_prompts(o);
    if (cmd == "stats") return cmd_stats(o);
    if (cmd == "eval") return cmd_eval(o);
    if (cmd == "train-xi") return cmd_train_xi(o);
    if (cmd == "mock-backend") return cmd_mock_backend(o);
  } catch (const lwa::Error& e) {
    report_error(lwa::to_string(e.code()), e.what());
    return 1;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
  return 1;
}
