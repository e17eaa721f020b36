#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "distill.hpp"
#include "edit.hpp"
#include "mixture.hpp"
#include "net.hpp"
#include "oc.hpp"
#include "sampler.hpp"

namespace fa {

/// Flat key=value configuration with [section] grouping. Unknown keys are
/// rejected by name; serialization order is fixed so manifests are
/// byte-stable.
class Config {
 public:
  Config();  // defaults

  static Config parse(const std::string& text);
  static Config load_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  int get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  std::string to_text() const;
  std::uint64_t hash() const;  // FNV-1a of to_text()

 private:
  std::map<std::string, std::string> values_;
};

struct MetricRow {
  int task = 0;
  int seed = 0;
  std::string method;
  double omega = 0.0;
  double zeta = 0.0;
  double preserve_mse = 0.0;
  double preserve_psnr = 0.0;
  double edit_dist = 0.0;
  int target_hit = 0;
  double target_logdensity = 0.0;
  double roundtrip_mse = 0.0;
  long long nfe_forward = 0;
  double nfe_per_step = 0.0;
};

extern const char* kMetricsHeader;

struct RunOutput {
  std::vector<MetricRow> rows;
  double psnr_range = 1.0;
};

// Experiment context shared between subcommands: dataset plus velocity field.
// Not movable; the field points at the members.
struct Experiment {
  ConditionalMixture mix;
  std::optional<VelocityNet> net;        // absent when the field is analytic
  std::unique_ptr<CondField> field;
  std::vector<double> loss_curve;

  Experiment() = default;
  Experiment(const Experiment&) = delete;
  Experiment& operator=(const Experiment&) = delete;

  void init(const Config& cfg);
};

// Executes the configured method over the task suite; writes metrics.csv and
// manifest.txt into out_dir (created if needed) unless out_dir is empty.
// With reverse set, the reconstruction pass (edit, then edit back toward the
// source condition) is what gets scored: the reported sample is the
// round-tripped one and the target class is the source class.
RunOutput run(const Config& cfg, const std::string& out_dir,
              bool reverse = false);
RunOutput run_with(const Config& cfg, Experiment& exp,
                   const std::string& out_dir, bool reverse = false);

// One run() per axis value; writes sweep.csv and sweep.svg into out_dir.
struct SweepPoint {
  std::string value;
  double mean_preserve_mse = 0.0, std_preserve_mse = 0.0;
  double mean_preserve_psnr = 0.0;
  double mean_target_hit = 0.0;
  double mean_target_logdensity = 0.0;
  double mean_roundtrip_mse = 0.0;
  int n = 0;
};
std::vector<SweepPoint> sweep(const Config& cfg, const std::string& axis,
                              const std::vector<std::string>& values,
                              const std::string& out_dir);

// Optimal-control verification battery; one pass/fail entry per check.
struct OCCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};
std::vector<OCCheck> verify_oc(const std::string& out_dir);

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricRow>& rows, double psnr_range);
void write_manifest(const Config& cfg, const std::string& path);

// Scatter of semantic proxy vs preserve-PSNR from a metrics CSV.
void export_plot(const std::string& metrics_csv, const std::string& out_svg);

void train_to_dir(const Config& cfg, const std::string& out_dir);
void generate_to_dir(const Config& cfg, int n_samples,
                     const std::string& out_dir);
void distill_to_dir(const Config& cfg, const std::string& out_dir);

double spearman_rho(const std::vector<double>& xs,
                    const std::vector<double>& ys);

std::string format_g17(double v);

}  // namespace fa
