#include "bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fa {

namespace fs = std::filesystem;

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Config

namespace {

struct SchemaEntry {
  const char* key;
  const char* def;
};

// Serialization follows this order; section headers are emitted on prefix
// change.
const SchemaEntry kSchema[] = {
    {"dataset.n_classes", "2"},
    {"dataset.d", "8"},
    {"dataset.edit_dims", "2"},
    {"dataset.sigma", "0.15"},
    {"dataset.seed", "1"},
    {"train.steps", "3000"},
    {"train.batch", "64"},
    {"train.lr", "0.001"},
    {"train.p_drop", "0.1"},
    {"train.seed", "2"},
    {"model.source", "train"},
    {"model.checkpoint", ""},
    {"edit.method", "flowalign"},
    {"edit.omega", "7.5"},
    {"edit.zeta", "0.01"},
    {"edit.steps", "33"},
    {"edit.shift", "3"},
    {"edit.skip", "0"},
    {"edit.seed", "3"},
    {"edit.omega_src", "3"},
    {"edit.omega_tgt", "13.5"},
    {"edit.cfg_base", "null"},
    {"edit.sdedit_total", "50"},
    {"edit.sdedit_start_index", "17"},
    {"edit.ddib_steps", "17"},
    {"run.tasks", "20"},
    {"run.seeds", "5"},
    {"run.task_seed", "7"},
    {"run.trajectories", "false"},
    {"distill.generator", "identity"},
    {"distill.views", "2"},
    {"distill.steps", "600"},
    {"distill.lr", "0.05"},
    {"distill.omega", "7.5"},
    {"distill.gamma", "0.3"},
    {"distill.t_max", "0.98"},
    {"distill.t_min", "0.02"},
    {"distill.seed", "11"},
};

bool known_key(const std::string& key) {
  if (key.rfind("manifest.", 0) == 0) return true;
  for (const auto& e : kSchema)
    if (key == e.key) return true;
  return false;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::uint64_t fnv1a_str(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Config::Config() {
  for (const auto& e : kSchema) values_[e.key] = e.def;
}

void Config::set(const std::string& key, const std::string& value) {
  if (!known_key(key))
    throw std::invalid_argument("config: unknown key '" + key + "'");
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end())
    throw std::invalid_argument("config: unknown key '" + key + "'");
  return it->second;
}

int Config::get_int(const std::string& key) const {
  return std::stoi(get(key));
}
double Config::get_double(const std::string& key) const {
  return std::stod(get(key));
}
bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "': " + v);
}
std::uint64_t Config::get_u64(const std::string& key) const {
  return std::stoull(get(key));
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    if (s.front() == '[' && s.back() == ']') {
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not key=value: " + s);
    std::string key = trim(s.substr(0, eq));
    if (!section.empty() && key.find('.') == std::string::npos)
      key = section + "." + key;
    cfg.set(key, trim(s.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Config::to_text() const {
  std::string out;
  std::string section;
  auto emit = [&](const std::string& key, const std::string& value) {
    std::string sec = key.substr(0, key.find('.'));
    if (sec != section) {
      if (!out.empty()) out += "\n";
      out += "[" + sec + "]\n";
      section = sec;
    }
    out += key.substr(key.find('.') + 1) + " = " + value + "\n";
  };
  for (const auto& e : kSchema) emit(e.key, values_.at(e.key));
  for (const auto& [k, v] : values_)
    if (k.rfind("manifest.", 0) == 0) emit(k, v);
  return out;
}

std::uint64_t Config::hash() const { return fnv1a_str(to_text()); }

// ---------------------------------------------------------------------------
// Experiment

void Experiment::init(const Config& cfg) {
  mix = make_paired_mixture(cfg.get_int("dataset.n_classes"),
                            cfg.get_int("dataset.d"),
                            cfg.get_int("dataset.edit_dims"),
                            cfg.get_u64("dataset.seed"));
  mix.sigma = cfg.get_double("dataset.sigma");

  const std::string& source = cfg.get("model.source");
  if (source == "analytic") {
    field = std::make_unique<AnalyticField>(mix);
    return;
  }
  if (source == "checkpoint") {
    const std::string& path = cfg.get("model.checkpoint");
    if (path.empty() || !fs::exists(path))
      throw std::runtime_error("model checkpoint missing: '" + path + "'");
    net.emplace(VelocityNet::load(path));
  } else if (source == "train") {
    TrainConfig tc;
    tc.steps = cfg.get_int("train.steps");
    tc.batch = cfg.get_int("train.batch");
    tc.lr = cfg.get_double("train.lr");
    tc.p_drop = cfg.get_double("train.p_drop");
    tc.seed = cfg.get_u64("train.seed");
    net.emplace(train(mix, tc, &loss_curve));
  } else {
    throw std::invalid_argument("config: model.source must be train, checkpoint or analytic");
  }
  field = std::make_unique<NetField>(*net);
}

// ---------------------------------------------------------------------------
// Metrics

const char* kMetricsHeader =
    "task,seed,method,omega,zeta,preserve_mse,preserve_psnr,edit_dist,"
    "target_hit,target_logdensity,roundtrip_mse,nfe_forward,nfe_per_step";

namespace {

double preserve_mse_of(const ConditionalMixture& mix, const EditTask& task,
                       const Vec& x) {
  double s = 0.0;
  int n = 0;
  for (int j = 0; j < mix.d; ++j)
    if (task.preserve_mask[j]) {
      double df = x[j] - task.x_src[j];
      s += df * df;
      ++n;
    }
  return n > 0 ? s / n : 0.0;
}

double edit_dist_of(const ConditionalMixture& mix, int c_tgt, const Vec& x) {
  double best = 1e300;
  for (const Vec& mu : mix.means[c_tgt]) {
    double s = 0.0;
    for (int j = 0; j < mix.edit_dims; ++j) {
      double df = x[j] - mu[j];
      s += df * df;
    }
    best = std::min(best, s);
  }
  return std::sqrt(best);
}

double full_mse(const Vec& a, const Vec& b) {
  return sq_dist(a, b) / static_cast<double>(a.size());
}

std::uint64_t derive_seed(std::uint64_t base, int task, int seed_idx, int tag) {
  RandomStream master(base);
  return master.substream(static_cast<std::uint64_t>(task) * 8192 +
                          static_cast<std::uint64_t>(seed_idx) * 4 + tag)
      .next_u64();
}

struct MethodSetup {
  std::string method;
  TimeGrid grid;        // main editing grid
  TimeGrid ddib_grid;
  TimeGrid sdedit_grid;
  double sdedit_t_start = 0.0;
  double omega = 7.5, zeta = 0.01;
  double omega_src = 3.0, omega_tgt = 13.5;
  bool cfg_base_src = false;
};

MethodSetup method_setup(const Config& cfg) {
  MethodSetup ms;
  ms.method = cfg.get("edit.method");
  double shift = cfg.get_double("edit.shift");
  ms.grid = make_time_grid(cfg.get_int("edit.steps"), shift,
                           cfg.get_int("edit.skip"));
  ms.ddib_grid = make_time_grid(cfg.get_int("edit.ddib_steps"), shift, 0);
  int sdedit_total = cfg.get_int("edit.sdedit_total");
  ms.sdedit_grid = make_time_grid(sdedit_total, shift, 0);
  int start_idx = cfg.get_int("edit.sdedit_start_index");
  if (start_idx < 0 || start_idx > sdedit_total)
    throw std::invalid_argument("config: edit.sdedit_start_index out of range");
  ms.sdedit_t_start = ms.sdedit_grid.times[start_idx];
  ms.omega = cfg.get_double("edit.omega");
  ms.zeta = cfg.get_double("edit.zeta");
  ms.omega_src = cfg.get_double("edit.omega_src");
  ms.omega_tgt = cfg.get_double("edit.omega_tgt");
  const std::string& base = cfg.get("edit.cfg_base");
  if (base == "src") ms.cfg_base_src = true;
  else if (base != "null")
    throw std::invalid_argument("config: edit.cfg_base must be null or src");
  return ms;
}

// Forward edit plus NFE-normalizing step count; fills log for the
// two-trajectory methods.
Vec edit_forward(const MethodSetup& ms, const CondField& field,
                 const EditTask& task, std::uint64_t seed, int* steps,
                 TrajectoryLog* log) {
  if (ms.method == "flowalign" || ms.method == "plain") {
    EditParams p;
    p.mode = (ms.method == "plain") ? EditMode::Plain : EditMode::FlowAlign;
    p.omega = ms.omega;
    p.zeta = ms.zeta;
    p.grid = ms.grid;
    p.seed = seed;
    p.cfg_base_src = ms.cfg_base_src;
    auto [x, l] = flowalign_edit(field, task.x_src, task.c_src, task.c_tgt, p);
    *steps = ms.grid.n_steps - ms.grid.skip;
    if (log) *log = std::move(l);
    return x;
  }
  if (ms.method == "flowedit") {
    auto [x, l] = flowedit_edit(field, task.x_src, task.c_src, task.c_tgt,
                                ms.grid, ms.omega_src, ms.omega_tgt, seed);
    *steps = ms.grid.n_steps - ms.grid.skip;
    if (log) *log = std::move(l);
    return x;
  }
  if (ms.method == "ddib") {
    *steps = 2 * ms.ddib_grid.n_steps;
    return ddib_edit(field, task.x_src, task.c_src, task.c_tgt, ms.ddib_grid,
                     ms.omega);
  }
  if (ms.method == "sdedit") {
    RandomStream s(seed);
    Vec x = sdedit_edit(field, task.x_src, task.c_tgt, ms.sdedit_grid,
                        ms.sdedit_t_start, ms.omega, s);
    int below = 0;
    for (double t : ms.sdedit_grid.times)
      if (t < ms.sdedit_t_start) ++below;
    *steps = below + 1;
    return x;
  }
  throw std::invalid_argument("config: unknown edit.method '" + ms.method + "'");
}

Vec edit_backward(const MethodSetup& ms, const CondField& field,
                  const EditTask& task, const Vec& x_edit,
                  std::uint64_t seed) {
  if (ms.method == "flowalign" || ms.method == "plain") {
    EditParams p;
    p.mode = (ms.method == "plain") ? EditMode::Plain : EditMode::FlowAlign;
    p.omega = ms.omega;
    p.zeta = ms.zeta;
    p.grid = ms.grid;
    p.seed = seed;
    p.cfg_base_src = ms.cfg_base_src;
    return backward_edit(field, x_edit, task.c_src, task.c_tgt, p);
  }
  if (ms.method == "flowedit")
    return flowedit_edit(field, x_edit, task.c_tgt, task.c_src, ms.grid,
                         ms.omega_src, ms.omega_tgt, seed)
        .first;
  if (ms.method == "ddib")
    return ddib_edit(field, x_edit, task.c_tgt, task.c_src, ms.ddib_grid,
                     ms.omega);
  if (ms.method == "sdedit") {
    RandomStream s(seed);
    return sdedit_edit(field, x_edit, task.c_src, ms.sdedit_grid,
                       ms.sdedit_t_start, ms.omega, s);
  }
  throw std::invalid_argument("config: unknown edit.method '" + ms.method + "'");
}

}  // namespace

RunOutput run_with(const Config& cfg, Experiment& exp,
                   const std::string& out_dir, bool reverse) {
  MethodSetup ms = method_setup(cfg);
  RunOutput out;
  out.psnr_range = coordinate_span(exp.mix);

  int n_tasks = cfg.get_int("run.tasks");
  int n_seeds = cfg.get_int("run.seeds");
  std::uint64_t edit_seed = cfg.get_u64("edit.seed");
  bool dump_traj = cfg.get_bool("run.trajectories");
  std::vector<EditTask> tasks =
      make_tasks(exp.mix, n_tasks, cfg.get_u64("run.task_seed"));

  if (!out_dir.empty()) fs::create_directories(out_dir);

  for (int i = 0; i < n_tasks; ++i) {
    for (int j = 0; j < n_seeds; ++j) {
      const EditTask& task = tasks[i];
      TrajectoryLog log;
      int steps = 1;
      long long nfe0 = exp.field->n_evals;
      Vec x_edit = edit_forward(ms, *exp.field, task,
                                derive_seed(edit_seed, i, j, 0), &steps,
                                dump_traj ? &log : nullptr);
      long long nfe = exp.field->n_evals - nfe0;
      Vec x_rec = edit_backward(ms, *exp.field, task, x_edit,
                                derive_seed(edit_seed, i, j, 1));
      if (reverse) nfe = exp.field->n_evals - nfe0;

      // reverse scores the round-tripped sample against the source class
      const Vec& scored = reverse ? x_rec : x_edit;
      int c_score = reverse ? task.c_src : task.c_tgt;

      MetricRow row;
      row.task = i;
      row.seed = j;
      row.method = ms.method;
      row.omega = ms.omega;
      row.zeta = (ms.method == "flowalign") ? ms.zeta : 0.0;
      row.preserve_mse = preserve_mse_of(exp.mix, task, scored);
      row.preserve_psnr =
          10.0 * std::log10(out.psnr_range * out.psnr_range /
                            std::max(row.preserve_mse, 1e-30));
      row.edit_dist = edit_dist_of(exp.mix, c_score, scored);
      row.target_hit = classify(exp.mix, scored) == c_score ? 1 : 0;
      row.target_logdensity = log_density(exp.mix, c_score, scored);
      row.roundtrip_mse = full_mse(x_rec, task.x_src);
      row.nfe_forward = nfe;
      row.nfe_per_step = static_cast<double>(nfe) / steps;
      out.rows.push_back(std::move(row));

      if (dump_traj && !out_dir.empty() && !log.rows.empty())
        log.to_csv(out_dir + "/trajectory_task" + std::to_string(i) + "_seed" +
                   std::to_string(j) + ".csv");
    }
  }

  if (!out_dir.empty()) {
    write_metrics_csv(out_dir + "/metrics.csv", out.rows, out.psnr_range);
    write_manifest(cfg, out_dir + "/manifest.txt");
  }
  return out;
}

RunOutput run(const Config& cfg, const std::string& out_dir, bool reverse) {
  Experiment exp;
  exp.init(cfg);
  return run_with(cfg, exp, out_dir, reverse);
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricRow>& rows, double psnr_range) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("metrics: cannot write " + path);
  out << "# flowalign metrics v1\n";
  out << "# psnr_range=" << format_g17(psnr_range)
      << " (dataset coordinate span; psnr = 10*log10(range^2/mse))\n";
  out << kMetricsHeader << "\n";
  for (const MetricRow& r : rows) {
    out << r.task << "," << r.seed << "," << r.method << ","
        << format_g17(r.omega) << "," << format_g17(r.zeta) << ","
        << format_g17(r.preserve_mse) << "," << format_g17(r.preserve_psnr)
        << "," << format_g17(r.edit_dist) << "," << r.target_hit << ","
        << format_g17(r.target_logdensity) << ","
        << format_g17(r.roundtrip_mse) << "," << r.nfe_forward << ","
        << format_g17(r.nfe_per_step) << "\n";
  }
}

void write_manifest(const Config& cfg, const std::string& path) {
  Config copy = cfg;
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(cfg.hash()));
  copy.set("manifest.config_hash", hex);
  copy.set("manifest.format_version", "1");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("manifest: cannot write " + path);
  out << "# flowalign manifest; loadable as a config to reproduce the run\n";
  out << copy.to_text();
}

// ---------------------------------------------------------------------------
// Sweep + plotting

namespace {

struct PlotPoint {
  double x, y;
  std::string label;
};

void write_scatter_svg(const std::string& path,
                       const std::vector<PlotPoint>& pts,
                       const std::string& xlabel, const std::string& ylabel) {
  const int W = 640, H = 480, ml = 70, mr = 30, mt = 30, mb = 60;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : pts) {
    xmin = std::min(xmin, p.x); xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y); ymax = std::max(ymax, p.y);
  }
  if (pts.empty()) { xmin = 0; xmax = 1; ymin = 0; ymax = 1; }
  if (xmax - xmin < 1e-12) { xmin -= 0.5; xmax += 0.5; }
  if (ymax - ymin < 1e-12) { ymin -= 0.5; ymax += 0.5; }
  auto sx = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  auto sy = [&](double y) {
    return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb);
  };

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("plot: cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
      << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n";
  char buf[64];
  auto text = [&](double x, double y, const std::string& s,
                  const char* anchor) {
    out << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"12\" "
        << "text-anchor=\"" << anchor << "\" font-family=\"sans-serif\">" << s
        << "</text>\n";
  };
  std::snprintf(buf, sizeof(buf), "%.4g", xmin);
  text(ml, H - mb + 18, buf, "middle");
  std::snprintf(buf, sizeof(buf), "%.4g", xmax);
  text(W - mr, H - mb + 18, buf, "middle");
  std::snprintf(buf, sizeof(buf), "%.4g", ymin);
  text(ml - 8, H - mb, buf, "end");
  std::snprintf(buf, sizeof(buf), "%.4g", ymax);
  text(ml - 8, mt + 6, buf, "end");
  text((ml + W - mr) / 2.0, H - 15, xlabel, "middle");
  out << "<text x=\"18\" y=\"" << (mt + H - mb) / 2.0
      << "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " transform=\"rotate(-90 18 " << (mt + H - mb) / 2.0 << ")\">"
      << ylabel << "</text>\n";

  // connecting polyline in x order, then labelled points
  std::vector<PlotPoint> sorted = pts;
  std::sort(sorted.begin(), sorted.end(),
            [](const PlotPoint& a, const PlotPoint& b) { return a.x < b.x; });
  if (sorted.size() > 1) {
    out << "<polyline fill=\"none\" stroke=\"#4477aa\" points=\"";
    for (const auto& p : sorted) out << sx(p.x) << "," << sy(p.y) << " ";
    out << "\"/>\n";
  }
  for (const auto& p : pts) {
    out << "<circle cx=\"" << sx(p.x) << "\" cy=\"" << sy(p.y)
        << "\" r=\"4\" fill=\"#cc3311\"/>\n";
    if (!p.label.empty()) text(sx(p.x) + 6, sy(p.y) - 6, p.label, "start");
  }
  out << "</svg>\n";
}

}  // namespace

std::vector<SweepPoint> sweep(const Config& cfg, const std::string& axis,
                              const std::vector<std::string>& values,
                              const std::string& out_dir) {
  if (values.empty()) throw std::invalid_argument("sweep: empty axis");
  std::string key;
  if (axis == "omega") key = "edit.omega";
  else if (axis == "zeta") key = "edit.zeta";
  else if (axis == "method") key = "edit.method";
  else throw std::invalid_argument("sweep: axis must be omega, zeta or method");

  // one dataset/model build shared across the sweep
  Experiment exp;
  exp.init(cfg);

  std::vector<SweepPoint> points;
  for (const std::string& v : values) {
    Config c = cfg;
    c.set(key, v);
    RunOutput ro = run_with(c, exp, "");
    SweepPoint p;
    p.value = v;
    p.n = static_cast<int>(ro.rows.size());
    double s_mse = 0, s_mse2 = 0, s_psnr = 0, s_hit = 0, s_ld = 0, s_rt = 0;
    for (const MetricRow& r : ro.rows) {
      s_mse += r.preserve_mse;
      s_mse2 += r.preserve_mse * r.preserve_mse;
      s_psnr += r.preserve_psnr;
      s_hit += r.target_hit;
      s_ld += r.target_logdensity;
      s_rt += r.roundtrip_mse;
    }
    if (p.n > 0) {
      p.mean_preserve_mse = s_mse / p.n;
      p.std_preserve_mse = std::sqrt(
          std::max(0.0, s_mse2 / p.n - p.mean_preserve_mse * p.mean_preserve_mse));
      p.mean_preserve_psnr = s_psnr / p.n;
      p.mean_target_hit = s_hit / p.n;
      p.mean_target_logdensity = s_ld / p.n;
      p.mean_roundtrip_mse = s_rt / p.n;
    }
    points.push_back(std::move(p));
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir + "/sweep.csv", std::ios::trunc);
    if (!out) throw std::runtime_error("sweep: cannot write sweep.csv");
    out << "# flowalign sweep axis=" << axis << "\n";
    out << "value,mean_preserve_mse,std_preserve_mse,mean_preserve_psnr,"
           "mean_target_hit,mean_target_logdensity,mean_roundtrip_mse,n\n";
    for (const SweepPoint& p : points)
      out << p.value << "," << format_g17(p.mean_preserve_mse) << ","
          << format_g17(p.std_preserve_mse) << ","
          << format_g17(p.mean_preserve_psnr) << ","
          << format_g17(p.mean_target_hit) << ","
          << format_g17(p.mean_target_logdensity) << ","
          << format_g17(p.mean_roundtrip_mse) << "," << p.n << "\n";

    std::vector<PlotPoint> pts;
    for (const SweepPoint& p : points)
      pts.push_back({p.mean_preserve_psnr, p.mean_target_hit,
                     axis + "=" + p.value});
    write_scatter_svg(out_dir + "/sweep.svg", pts, "preserve PSNR",
                      "target-mode accuracy");
    write_manifest(cfg, out_dir + "/manifest.txt");
  }
  return points;
}

void export_plot(const std::string& metrics_csv, const std::string& out_svg) {
  std::ifstream in(metrics_csv);
  if (!in) throw std::runtime_error("export-plot: cannot open " + metrics_csv);
  std::string line;
  bool have_header = false;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
      groups;  // label -> (psnrs, hits)
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      if (line != kMetricsHeader)
        throw std::runtime_error("export-plot: unrecognized metrics header");
      have_header = true;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() < 13)
      throw std::runtime_error("export-plot: short row in " + metrics_csv);
    std::string label = cols[2] + " w=" + cols[3] + " z=" + cols[4];
    groups[label].first.push_back(std::stod(cols[6]));
    groups[label].second.push_back(std::stod(cols[8]));
  }
  std::vector<PlotPoint> pts;
  for (const auto& [label, data] : groups) {
    double mp = std::accumulate(data.first.begin(), data.first.end(), 0.0) /
                data.first.size();
    double mh = std::accumulate(data.second.begin(), data.second.end(), 0.0) /
                data.second.size();
    pts.push_back({mp, mh, label});
  }
  write_scatter_svg(out_svg, pts, "preserve PSNR", "target-mode accuracy");
}

// ---------------------------------------------------------------------------
// Optimal-control verification battery

namespace {

// State-independent-per-path field for point-mass classes: the velocity at a
// point on a class path equals eps - mean, making the drift exactly constant.
class PointMassField : public CondField {
 public:
  PointMassField(std::vector<Vec> means, Vec null_mean)
      : means_(std::move(means)), null_mean_(std::move(null_mean)) {}
  int null_label() const override { return static_cast<int>(means_.size()); }
  int dim() const override { return static_cast<int>(null_mean_.size()); }

 protected:
  Vec eval(const Vec& x, double t, int label) const override {
    const Vec& mu = (label == null_label()) ? null_mean_ : means_.at(label);
    Vec r(x.size());
    for (size_t i = 0; i < x.size(); ++i) r[i] = (x[i] - mu[i]) / t;
    return r;
  }

 private:
  std::vector<Vec> means_;
  Vec null_mean_;
};

OCProblem random_problem(int d, int n, double eta, RandomStream& s) {
  OCProblem prob;
  TimeGrid g = make_time_grid(n, 1.0, 0);
  prob.times = g.times;
  prob.eta = eta;
  prob.a.assign(n, Vec(d));
  for (auto& ai : prob.a)
    for (auto& v : ai) v = s.normal();
  prob.x_start = s.normal_vec(d);
  prob.x_src = s.normal_vec(d);
  return prob;
}

double max_control_diff(const ControlSeq& a, const ControlSeq& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.u.size(); ++i)
    m = std::max(m, max_abs(sub(a.u[i], b.u[i])));
  return m;
}

}  // namespace

std::vector<OCCheck> verify_oc(const std::string& out_dir) {
  std::vector<OCCheck> checks;
  auto report = [&](const std::string& name, bool pass, const std::string& detail) {
    checks.push_back({name, pass, detail});
  };

  RandomStream stream(20240601);
  const double etas[] = {0.5, 2.0, 10.0};
  double worst_ctrl = 0.0, worst_obj = 0.0, worst_costate = 0.0,
         worst_boundary = 0.0;
  for (int i = 0; i < 20; ++i) {
    OCProblem prob = random_problem(2, 64, etas[i % 3], stream);
    ControlSeq closed = closed_form_control(prob);
    OCSolveResult solved = discrete_oc_solve(prob, 200000);
    worst_ctrl = std::max(worst_ctrl, max_control_diff(closed, solved.control));
    worst_obj = std::max(worst_obj,
                         std::fabs(oc_objective(prob, closed) -
                                   oc_objective(prob, solved.control)));
    auto costate = reconstruct_costate(prob, solved.control);
    Vec mean(costate.front().size(), 0.0);
    for (const Vec& p : costate) axpy(1.0 / costate.size(), p, mean);
    for (const Vec& p : costate)
      worst_costate = std::max(worst_costate, max_abs(sub(p, mean)));
    Vec boundary = scaled(sub(oc_terminal(prob, closed), prob.x_src), prob.eta);
    worst_boundary = std::max(
        worst_boundary, max_abs(sub(sub(closed.u[0], prob.a[0]), boundary)));
  }
  report("closed-form-vs-brute-force-control", worst_ctrl <= 1e-4,
      "max |u_closed - u_solver| = " + format_g17(worst_ctrl));
  report("closed-form-vs-brute-force-objective", worst_obj <= 1e-8,
      "max objective gap = " + format_g17(worst_obj));
  report("costate-constancy", worst_costate <= 1e-6,
      "max deviation from mean = " + format_g17(worst_costate));
  report("terminal-boundary-condition", worst_boundary <= 1e-8,
      "max |(u-a) - eta(x0-x_src)| = " + format_g17(worst_boundary));

  {
    // scalar hand case: constant drift c, t0 = 1, x_start = x_src = 0
    double c = 1.3, eta = 2.0;
    OCProblem prob;
    prob.times = make_time_grid(64, 1.0, 0).times;
    prob.eta = eta;
    prob.a.assign(64, Vec{c});
    prob.x_start = Vec{0.0};
    prob.x_src = Vec{0.0};
    ControlSeq closed = closed_form_control(prob);
    double u_expect = c / (1.0 + eta);
    double x0_expect = -c / (1.0 + eta);
    double err = std::max(std::fabs(closed.u[0][0] - u_expect),
                          std::fabs(oc_terminal(prob, closed)[0] - x0_expect));
    report("hand-worked-scalar-case", err <= 1e-12,
        "max deviation = " + format_g17(err));
  }

  {
    // local optimality probe on one problem
    OCProblem prob = random_problem(2, 32, 2.0, stream);
    ControlSeq closed = closed_form_control(prob);
    double J = oc_objective(prob, closed);
    bool ok = true;
    double min_gap = 1e300;
    for (int k = 0; k < 100; ++k) {
      ControlSeq pert = closed;
      for (auto& u : pert.u)
        for (auto& v : u) v += 0.05 * stream.normal();
      double gap = oc_objective(prob, pert) - J;
      min_gap = std::min(min_gap, gap);
      if (gap < 0.0) ok = false;
    }
    report("local-optimality-probe", ok,
        "min perturbed-cost gap = " + format_g17(min_gap));
  }

  std::vector<double> residuals;
  {
    // point-mass classes: the Tweedie approximation is exact
    int d = 2;
    Vec mu_src{-1.0, 0.5}, mu_tgt{1.0, -0.5};
    Vec mu_null = scaled(add(mu_src, mu_tgt), 0.5);
    PointMassField field({mu_src, mu_tgt}, mu_null);
    EditParams p;
    p.mode = EditMode::Plain;
    p.grid = make_time_grid(16, 1.0, 0);
    p.seed = 5;
    auto [x, log] = flowalign_edit(field, mu_src, 0, 1, p);
    (void)x;
    residuals = prop1_residual(log);
    double worst = 0.0;
    for (double r : residuals) worst = std::max(worst, r);
    report("point-mass-residual-zero", worst <= 1e-9,
        "max residual = " + format_g17(worst));
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream out(out_dir + "/oc_report.csv", std::ios::trunc);
    out << "check,pass,detail\n";
    for (const OCCheck& c : checks)
      out << c.name << "," << (c.pass ? 1 : 0) << "," << c.detail << "\n";
    std::ofstream res(out_dir + "/oc_pointmass_residual.csv", std::ios::trunc);
    res << "step,residual\n";
    for (size_t i = 0; i < residuals.size(); ++i)
      res << i << "," << format_g17(residuals[i]) << "\n";
  }
  return checks;
}

// ---------------------------------------------------------------------------
// Subcommand helpers

void train_to_dir(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  Config c = cfg;
  c.set("model.source", "train");
  Experiment exp;
  exp.init(c);
  exp.net->save(out_dir + "/model.falb");
  std::ofstream out(out_dir + "/loss_curve.csv", std::ios::trunc);
  out << "step,loss\n";
  for (size_t i = 0; i < exp.loss_curve.size(); ++i)
    out << i << "," << format_g17(exp.loss_curve[i]) << "\n";
  write_manifest(c, out_dir + "/manifest.txt");
}

void generate_to_dir(const Config& cfg, int n_samples,
                     const std::string& out_dir) {
  fs::create_directories(out_dir);
  Experiment exp;
  exp.init(cfg);
  TimeGrid grid =
      make_time_grid(cfg.get_int("edit.steps"), cfg.get_double("edit.shift"), 0);
  RandomStream master(cfg.get_u64("edit.seed"));
  std::ofstream out(out_dir + "/samples.csv", std::ios::trunc);
  out << "class,sample";
  for (int j = 0; j < exp.mix.d; ++j) out << ",x" << j;
  out << "\n";
  for (int c = 0; c < exp.mix.n_classes; ++c)
    for (int i = 0; i < n_samples; ++i) {
      RandomStream s = master.substream(
          static_cast<std::uint64_t>(c) * 1000003 + i);
      Vec x = generate(*exp.field, c, grid, s);
      out << c << "," << i;
      for (double v : x) out << "," << format_g17(v);
      out << "\n";
    }
  write_manifest(cfg, out_dir + "/manifest.txt");
}

void distill_to_dir(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  Experiment exp;
  exp.init(cfg);

  LinearGenerator gen;
  const std::string& kind = cfg.get("distill.generator");
  int n_views = cfg.get_int("distill.views");
  if (kind == "identity") {
    gen = LinearGenerator::identity(exp.mix.d);
  } else if (kind == "linear") {
    gen.d = exp.mix.d;
    gen.m = exp.mix.d;
    RandomStream gs(cfg.get_u64("distill.seed") ^ 0xabcdefULL);
    for (int v = 0; v < n_views; ++v) {
      LinearGenerator::View view;
      view.A.assign(gen.d, Vec(gen.m, 0.0));
      for (int i = 0; i < gen.d; ++i) {
        view.A[i][i] = 1.0;
        for (int j = 0; j < gen.m; ++j) view.A[i][j] += 0.2 * gs.normal();
      }
      view.b.assign(gen.d, 0.0);
      gen.views.push_back(std::move(view));
    }
  } else {
    throw std::invalid_argument("config: distill.generator must be identity or linear");
  }

  std::vector<EditTask> tasks = make_tasks(exp.mix, 1, cfg.get_u64("run.task_seed"));
  const EditTask& task = tasks.front();
  // identity-style start: parameters that render the source in view 0
  Vec psi_src = task.x_src;

  DistillConfig dc;
  dc.steps = cfg.get_int("distill.steps");
  dc.lr = cfg.get_double("distill.lr");
  dc.omega = cfg.get_double("distill.omega");
  dc.gamma_w = cfg.get_double("distill.gamma");
  dc.t_max = cfg.get_double("distill.t_max");
  dc.t_min = cfg.get_double("distill.t_min");
  dc.seed = cfg.get_u64("distill.seed");
  DistillResult res = distill_optimize(*exp.field, exp.mix, gen, psi_src,
                                       psi_src, task.c_src, task.c_tgt, dc);

  std::ofstream trace(out_dir + "/distill_trace.csv", std::ios::trunc);
  trace << "step,target_logdensity\n";
  for (size_t i = 0; i < res.trace.size(); ++i)
    trace << i << "," << format_g17(res.trace[i]) << "\n";
  std::ofstream out(out_dir + "/distill_result.csv", std::ios::trunc);
  out << "view";
  for (int j = 0; j < exp.mix.d; ++j) out << ",x" << j;
  out << ",target_mode\n";
  for (size_t v = 0; v < gen.views.size(); ++v) {
    Vec r = gen.render(res.psi, static_cast<int>(v));
    out << v;
    for (double x : r) out << "," << format_g17(x);
    out << "," << assign_mode(exp.mix, task.c_tgt, r) << "\n";
  }
  write_manifest(cfg, out_dir + "/manifest.txt");
}

double spearman_rho(const std::vector<double>& xs,
                    const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("spearman_rho: need matched series, n >= 2");
  auto ranks = [](const std::vector<double>& v) {
    size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
      double avg = (i + j) / 2.0 + 1.0;  // average rank for ties
      for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  std::vector<double> rx = ranks(xs), ry = ranks(ys);
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace fa
