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

// Writes synthetic scenario trees and single annotated frames.

#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lwa/error.hpp"
#include "lwa/lwa.hpp"
#include "lwa/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic road-scene generator"};
  std::string out;
  std::uint64_t seed = 0;
  lwa::TreeOptions tree;
  int height = 144, width = 256;
  bool single = false;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--seed", seed);
  app.add_option("--scenarios", tree.scenarios);
  app.add_option("--frames", tree.frames);
  app.add_option("--rate", tree.rate_hz);
  app.add_option("--objects", tree.scene.num_objects);
  app.add_option("--height", height);
  app.add_option("--width", width);
  app.add_flag("--frame", single, "Write one frame as <modality>.lwa1 files instead");
  CLI11_PARSE(app, argc, argv);
  try {
    const lwa::LayerSpec spec = lwa::LayerSpec::default_spec();
    tree.domain = lwa::PixelDomain::make(height, width);
    if (single) {
      lwa::save_stack(out, lwa::make_scene(tree.domain, seed, spec, tree.scene).frame);
    } else {
      lwa::write_scenario_tree(out, tree, seed, spec);
    }
  } catch (const lwa::Error& e) {
    std::cerr << nlohmann::json{{"level", "error"},
                                {"event", "error"},
                                {"code", lwa::to_string(e.code())},
                                {"message", e.what()}}
                     .dump()
              << "\n";
    return 1;
  }
  return 0;
}
