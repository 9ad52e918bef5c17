// Copyright 2026 The mcland Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// mcland: generate instances, solve, scan the optimization landscape and
// run concentration sweeps from a JSON config.
//
//   mcland gen   --config exp.json --out results/
//   mcland solve --config exp.json --out results/
//   mcland scan  --config exp.json --out results/ --threads 8 --assert-clean
//   mcland conc  --config exp.json --out results/

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mcland/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Landscape analysis for regularized low-rank matrix completion"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  int threads = 1;
  bool assert_clean = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Experiment config (JSON)")
        ->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--threads", threads, "Worker threads")
        ->check(CLI::PositiveNumber);
  };
  auto* gen = app.add_subcommand("gen", "Write the instance record");
  auto* solve = app.add_subcommand("solve", "Solve once and certify");
  auto* scan = app.add_subcommand("scan", "Multi-start landscape scan");
  auto* conc = app.add_subcommand("conc", "Concentration sweep");
  for (auto* sub : {gen, solve, scan, conc}) add_common(sub);
  scan->add_flag("--assert-clean", assert_clean,
                 "Exit 1 if any spurious local minimum is found");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mcland::kExitConfig;
  }

  mcland::CommandContext ctx;
  ctx.out_dir = out_dir;
  ctx.threads = threads;
  ctx.assert_clean = assert_clean;
  ctx.log = &std::cout;
  try {
    const mcland::ExperimentConfig cfg = mcland::load_config(config_path);
    if (*gen) return mcland::cmd_gen(cfg, ctx);
    if (*solve) return mcland::cmd_solve(cfg, ctx);
    if (*scan) return mcland::cmd_scan(cfg, ctx);
    if (*conc) return mcland::cmd_conc(cfg, ctx);
  } catch (const mcland::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return mcland::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mcland::kExitInternal;
  }
  return mcland::kExitInternal;
}
