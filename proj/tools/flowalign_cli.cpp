// Command-line front end; talks to the library through the C interface only.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "flowalign/flowalign.h"

namespace {

int die(const char* what) {
  std::fprintf(stderr, "%s: %s\n", what, fa_last_error());
  return 1;
}

struct CtxDeleter {
  void operator()(fa_context* c) const { fa_context_destroy(c); }
};
using CtxPtr = std::unique_ptr<fa_context, CtxDeleter>;

CtxPtr make_ctx(const std::string& config_path) {
  fa_context* raw = nullptr;
  if (fa_context_create(config_path.c_str(), &raw) != FA_OK) {
    std::fprintf(stderr, "config: %s\n", fa_last_error());
    return nullptr;
  }
  return CtxPtr(raw);
}

bool apply(fa_context* ctx, const std::string& key, const std::string& value) {
  if (fa_context_set(ctx, key.c_str(), value.c_str()) == FA_OK) return true;
  std::fprintf(stderr, "config: %s\n", fa_last_error());
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flow-matching editing laboratory"};
  app.set_version_flag("--version", fa_version());
  app.require_subcommand(1);
  app.fallthrough();  // shared options may follow the subcommand name

  std::string config_path, out_dir = "out", method, seed_str, omega_str,
              zeta_str, steps_str, skip_str;
  app.add_option("--config", config_path, "config file (key = value)");
  app.add_option("--seed", seed_str, "override the active seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--method", method,
                 "editing method: flowalign|flowedit|ddib|sdedit|plain");
  app.add_option("--omega", omega_str, "guidance scale");
  app.add_option("--zeta", zeta_str, "source-consistency scale");
  app.add_option("--steps", steps_str, "editing grid steps");
  app.add_option("--skip", skip_str, "leading grid points to skip");

  auto* cmd_train = app.add_subcommand("train", "train the velocity model");
  int n_samples = 64;
  auto* cmd_gen = app.add_subcommand("generate", "sample from the model");
  cmd_gen->add_option("--samples", n_samples, "samples per class");
  auto* cmd_edit = app.add_subcommand("edit", "run the editing benchmark");
  auto* cmd_rev =
      app.add_subcommand("reverse-edit", "score the reconstruction direction");
  std::string axis = "omega", values = "1,2.5,5,7.5,10,15";
  auto* cmd_sweep = app.add_subcommand("sweep", "sweep one config axis");
  cmd_sweep->add_option("--axis", axis, "omega|zeta|method");
  cmd_sweep->add_option("--values", values, "comma-separated axis values");
  auto* cmd_oc = app.add_subcommand(
      "verify-oc", "closed-form vs brute-force control checks");
  auto* cmd_distill =
      app.add_subcommand("distill", "edit a toy generator's parameters");
  std::string metrics_csv;
  auto* cmd_plot = app.add_subcommand("export-plot", "metrics CSV to SVG");
  cmd_plot->add_option("--metrics", metrics_csv, "metrics.csv path")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (cmd_plot->parsed()) {
    std::string svg = out_dir + "/plot.svg";
    if (fa_export_plot(metrics_csv.c_str(), svg.c_str()) != FA_OK)
      return die("export-plot");
    std::printf("wrote %s\n", svg.c_str());
    return 0;
  }

  if (cmd_oc->parsed()) {
    int n_failed = 0;
    if (fa_verify_oc(out_dir.c_str(), &n_failed) != FA_OK)
      return die("verify-oc");
    std::ifstream report(out_dir + "/oc_report.csv");
    std::string line;
    while (std::getline(report, line)) std::cout << line << "\n";
    std::printf("%s (%d failing)\n", n_failed == 0 ? "ALL CHECKS PASS" : "CHECKS FAILED",
                n_failed);
    return n_failed == 0 ? 0 : 1;
  }

  CtxPtr ctx = make_ctx(config_path);
  if (!ctx) return 1;

  if (!method.empty() && !apply(ctx.get(), "edit.method", method)) return 1;
  if (!omega_str.empty() && !apply(ctx.get(), "edit.omega", omega_str)) return 1;
  if (!zeta_str.empty() && !apply(ctx.get(), "edit.zeta", zeta_str)) return 1;
  if (!steps_str.empty() && !apply(ctx.get(), "edit.steps", steps_str)) return 1;
  if (!skip_str.empty() && !apply(ctx.get(), "edit.skip", skip_str)) return 1;
  if (!seed_str.empty()) {
    const char* key = cmd_train->parsed()     ? "train.seed"
                      : cmd_distill->parsed() ? "distill.seed"
                                              : "edit.seed";
    if (!apply(ctx.get(), key, seed_str)) return 1;
  }

  if (cmd_train->parsed()) {
    if (fa_train(ctx.get(), out_dir.c_str()) != FA_OK) return die("train");
    std::printf("wrote %s/model.falb\n", out_dir.c_str());
  } else if (cmd_gen->parsed()) {
    if (fa_generate(ctx.get(), n_samples, out_dir.c_str()) != FA_OK)
      return die("generate");
    std::printf("wrote %s/samples.csv\n", out_dir.c_str());
  } else if (cmd_edit->parsed() || cmd_rev->parsed()) {
    if (fa_edit(ctx.get(), cmd_rev->parsed() ? 1 : 0, out_dir.c_str()) != FA_OK)
      return die(cmd_rev->parsed() ? "reverse-edit" : "edit");
    std::printf("wrote %s/metrics.csv\n", out_dir.c_str());
  } else if (cmd_sweep->parsed()) {
    if (fa_sweep(ctx.get(), axis.c_str(), values.c_str(), out_dir.c_str()) !=
        FA_OK)
      return die("sweep");
    std::printf("wrote %s/sweep.csv\n", out_dir.c_str());
  } else if (cmd_distill->parsed()) {
    if (fa_distill(ctx.get(), out_dir.c_str()) != FA_OK) return die("distill");
    std::printf("wrote %s/distill_result.csv\n", out_dir.c_str());
  }
  return 0;
}
