/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include "study.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "container.hpp"
#include "error.hpp"
#include "rom_offline.hpp"
#include "snapshots.hpp"
#include "trajectory_io.hpp"

namespace vrom {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json rule_to_json(const TruncationRule& r) {
  if (r.mode == TruncationRule::Mode::FixedCount) return {{"fixed", r.n_fixed}};
  if (r.mode == TruncationRule::Mode::SingularValueRatio) return {{"sv_ratio", r.ratio}, {"max", r.n_fixed}};
  return {{"energy", r.energy}};
}

TruncationRule rule_from_json(const json& j) {
  if (j.contains("fixed")) return TruncationRule::fixed(j.at("fixed").get<std::size_t>());
  if (j.contains("energy")) return TruncationRule::energy_fraction(j.at("energy").get<double>());
  if (j.contains("sv_ratio")) return TruncationRule::sv_ratio(j.at("sv_ratio").get<double>(), j.value("max", std::size_t{0}));
  fail(ErrorCode::Config, "truncation rule needs \"fixed\", \"energy\" or \"sv_ratio\"");
}

json points_to_json(const std::vector<ParamPoint>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.T, p.alpha, p.v0});
  return a;
}

std::vector<ParamPoint> points_from_json(const json& j) {
  std::vector<ParamPoint> out;
  for (const auto& p : j) out.push_back(mu_from_json(p));
  return out;
}

bool same_point(const ParamPoint& a, const ParamPoint& b) {
  return std::abs(a.T - b.T) < 1e-9 && std::abs(a.alpha - b.alpha) < 1e-12 && std::abs(a.v0 - b.v0) < 1e-9;
}

bool contains_point(const std::vector<ParamPoint>& pts, const ParamPoint& mu) {
  return std::any_of(pts.begin(), pts.end(), [&](const ParamPoint& p) { return same_point(p, mu); });
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string csv_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

fs::path training_path(const fs::path& workspace, const ParamPoint& mu) {
  return workspace / "fom" / ("train_" + mu_label(mu) + ".vrom");
}

json training_key(const StudyConfig& c) {
  return {{"nx", c.nx}, {"nv", c.nv}, {"v0", c.v0}, {"dt", c.dt}, {"t_final", c.t_final}};
}

json model_key(const StudyConfig& c) {
  json k = training_key(c);
  k["windows"] = c.n_windows;
  k["pod_f"] = rule_to_json(c.rule_f);
  k["pod_phi"] = rule_to_json(c.rule_phi);
  k["max_tensor_bytes"] = c.max_tensor_bytes;
  return k;
}

json run_key(const StudyConfig& c, bool has_fom, bool recon) {
  json k = model_key(c);
  k["rom_dt"] = c.rom_dt;
  k["phi_per_stage"] = c.phi_per_stage;
  k["has_fom"] = has_fom;
  k["recon_times"] = recon ? json(c.recon_times) : json::array();
  return k;
}

bool training_run_complete(const fs::path& path, const StudyConfig& config, const ParamPoint& mu) {
  const auto side = sidecar_path(path);
  if (!fs::exists(path) || !fs::exists(side)) return false;
  try {
    const auto j = read_json(side);
    if (!same_point(mu_from_json(j.at("mu")), mu)) return false;
    if (!(grid_from_json(j.at("grid")) == config.grid())) return false;
    if (j.at("n_snapshots").get<std::size_t>() != stored_snapshot_count(config.fom_config())) return false;
    if (std::abs(j.at("dt").get<double>() - config.dt) > 1e-15) return false;
    return file_checksum(path) == j.at("checksum").get<std::string>();
  } catch (const std::exception&) {
    return false;
  }
}

// Final FOM state and max|E| history of a comparison run, kept across model rebuilds.
fs::path reference_path(const fs::path& workspace, const ParamPoint& mu) {
  return workspace / "fom" / ("ref_" + mu_label(mu) + ".vrom");
}

void save_reference(const StudyConfig& config, const ParamPoint& mu, const fs::path& workspace,
                    const Eigen::VectorXd& f_final, const std::vector<double>& max_e, double seconds) {
  const auto path = reference_path(workspace, mu);
  fs::create_directories(path.parent_path());
  write_fields(path, config.grid(), mu, {config.t_final}, {f_final});
  write_json(sidecar_path(path), {{"key", training_key(config)},
                                  {"mu", mu_to_json(mu)},
                                  {"wall_seconds", seconds},
                                  {"max_e", max_e},
                                  {"checksum", file_checksum(path)}});
}

bool load_reference(const StudyConfig& config, const ParamPoint& mu, const fs::path& workspace,
                    Eigen::VectorXd& f_final, std::vector<double>& max_e, double& seconds) {
  const auto path = reference_path(workspace, mu);
  const auto side = sidecar_path(path);
  if (!fs::exists(path) || !fs::exists(side)) return false;
  try {
    const auto j = read_json(side);
    if (j.at("key") != training_key(config) || !same_point(mu_from_json(j.at("mu")), mu)) return false;
    if (file_checksum(path) != j.at("checksum").get<std::string>()) return false;
    ContainerReader reader(path);
    if (reader.header().kind != ContainerKind::Fields || reader.header().record_len != config.grid().size()) {
      return false;
    }
    f_final.resize(static_cast<Eigen::Index>(config.grid().size()));
    reader.read(0, std::span<double>(f_final.data(), config.grid().size()));
    max_e = j.at("max_e").get<std::vector<double>>();
    seconds = j.at("wall_seconds").get<double>();
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

struct PointTask {
  ParamPoint mu;
  std::string role;
  std::size_t lattice_index = 0;
  bool training = false;
  bool has_fom = false;
  bool recon = false;
};

PointResult run_point(const StudyConfig& config, const RomModel& model, const PointTask& task,
                      const fs::path& workspace) {
  PointResult r;
  r.mu = task.mu;
  r.role = task.role;
  r.lattice_index = task.lattice_index;
  r.training = task.training;
  r.has_fom = task.has_fom;

  RomOptions opts;
  opts.dt = config.rom_dt;
  opts.t_final = config.t_final;
  opts.phi_per_stage = config.phi_per_stage;
  const auto rom = rom_run(model, task.mu, opts);
  r.rom_seconds = rom.wall_seconds;
  r.rom_full_order_ops = rom.full_order_ops_in_loop;
  r.times = rom.times;
  r.rom_max_e = rom.max_e;

  if (task.recon) {
    for (double t : config.recon_times) {
      const auto field = reconstruct(rom, model, t);
      const std::string name = "recon_" + mu_label(task.mu) + "_" + format_number(t) + ".bin";
      write_fields(workspace / "runs" / name, model.grid(), task.mu, {t}, {field.values});
      r.recon_files.push_back("runs/" + name);
    }
  }

  if (task.has_fom) {
    Eigen::VectorXd f_final;
    if (task.training) {
      const auto path = training_path(workspace, task.mu);
      TrajectoryFile traj(path);
      f_final = traj.f(traj.size() - 1);
      r.fom_max_e = traj.max_e();
      r.fom_seconds = read_json(sidecar_path(path)).at("wall_seconds").get<double>();
    } else if (!load_reference(config, task.mu, workspace, f_final, r.fom_max_e, r.fom_seconds)) {
      FomTrajectory traj;
      traj.grid = model.grid();
      traj.mu = task.mu;
      TrajectoryRecorder rec(traj, false);
      const auto start = std::chrono::steady_clock::now();
      fom_run(config.fom_config(), task.mu, rec);
      r.fom_seconds = seconds_since(start);
      f_final = traj.snapshots_f.back();
      r.fom_max_e = traj.max_e;
      save_reference(config, task.mu, workspace, f_final, r.fom_max_e, r.fom_seconds);
    }
    if (r.fom_max_e.size() != r.rom_max_e.size()) {
      fail(ErrorCode::Config, "FOM and ROM histories have different lengths at " + mu_label(task.mu));
    }
    const auto f_rom = reconstruct(rom, model, config.t_final);
    r.epsilon = relative_error(f_final, f_rom.values);
  }
  return r;
}

std::vector<GrowthResult> compute_growth(const StudyConfig& config, const std::vector<PointResult>& points) {
  std::vector<GrowthResult> out;
  for (const auto& mu : config.growth_points) {
    auto it = std::find_if(points.begin(), points.end(),
                           [&](const PointResult& p) { return p.has_fom && same_point(p.mu, mu); });
    if (it == points.end()) continue;
    GrowthResult g;
    g.mu = mu;
    const auto fit = growth_interval(it->times, it->fom_max_e);
    g.t_lo = fit.t_lo;
    g.t_hi = fit.t_hi;
    g.fom_slope = fit.slope;
    g.rom_slope = log_slope(it->times, it->rom_max_e, fit.t_lo, fit.t_hi);
    g.relative_difference = std::abs(g.rom_slope - g.fom_slope) / std::abs(g.fom_slope);
    out.push_back(g);
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed on " + path.string());
}

}  // namespace

// ---- config ------------------------------------------------------------------

StudyConfig StudyConfig::from_json(const json& j) {
  StudyConfig c;
  if (j.contains("grid")) {
    c.nx = j["grid"].value("nx", c.nx);
    c.nv = j["grid"].value("nv", c.nv);
  }
  c.v0 = j.value("v0", c.v0);
  if (j.contains("fom")) {
    c.dt = j["fom"].value("dt", c.dt);
    c.t_final = j["fom"].value("t_final", c.t_final);
  }
  c.n_windows = j.value("windows", c.n_windows);
  if (j.contains("pod")) {
    if (j["pod"].contains("f")) c.rule_f = rule_from_json(j["pod"]["f"]);
    if (j["pod"].contains("phi")) c.rule_phi = rule_from_json(j["pod"]["phi"]);
  }
  if (j.contains("rom")) {
    c.rom_dt = j["rom"].value("dt", c.rom_dt);
    c.phi_per_stage = j["rom"].value("phi_per_stage", c.phi_per_stage);
  }
  if (j.contains("domain")) {
    const auto& d = j["domain"];
    if (d.contains("T")) {
      c.t_min = d["T"].at(0).get<double>();
      c.t_max = d["T"].at(1).get<double>();
    }
    if (d.contains("alpha")) {
      c.alpha_min = d["alpha"].at(0).get<double>();
      c.alpha_max = d["alpha"].at(1).get<double>();
    }
    c.n_t = d.value("n_T", c.n_t);
    c.n_alpha = d.value("n_alpha", c.n_alpha);
  }
  if (j.contains("extras")) c.extras = points_from_json(j["extras"]);
  if (j.contains("recon")) {
    if (j["recon"].contains("points")) c.recon_points = points_from_json(j["recon"]["points"]);
    if (j["recon"].contains("times")) c.recon_times = j["recon"]["times"].get<std::vector<double>>();
  }
  if (j.contains("growth_points")) c.growth_points = points_from_json(j["growth_points"]);
  if (j.contains("fast_points")) c.fast_points = points_from_json(j["fast_points"]);
  c.fast = j.value("fast", c.fast);
  c.jobs = j.value("jobs", c.jobs);
  c.max_tensor_bytes = j.value("max_tensor_bytes", c.max_tensor_bytes);
  return c;
}

json StudyConfig::to_json() const {
  return {
      {"grid", {{"nx", nx}, {"nv", nv}}},
      {"v0", v0},
      {"fom", {{"dt", dt}, {"t_final", t_final}}},
      {"windows", n_windows},
      {"pod", {{"f", rule_to_json(rule_f)}, {"phi", rule_to_json(rule_phi)}}},
      {"rom", {{"dt", rom_dt}, {"phi_per_stage", phi_per_stage}}},
      {"domain", {{"T", {t_min, t_max}}, {"alpha", {alpha_min, alpha_max}}, {"n_T", n_t}, {"n_alpha", n_alpha}}},
      {"extras", points_to_json(extras)},
      {"recon", {{"points", points_to_json(recon_points)}, {"times", recon_times}}},
      {"growth_points", points_to_json(growth_points)},
      {"fast_points", points_to_json(fast_points)},
      {"fast", fast},
      {"jobs", jobs},
      {"max_tensor_bytes", max_tensor_bytes},
  };
}

void StudyConfig::validate() const {
  (void)grid();
  fom_config().validate();
  if (n_windows == 0) fail(ErrorCode::Config, "at least one time window is required");
  rule_f.validate();
  rule_phi.validate();
  if (!(rom_dt > 0.0)) fail(ErrorCode::Config, "ROM time step must be positive");
  if (n_t < 2 || n_alpha < 2) fail(ErrorCode::Config, "the test lattice needs at least 2 points per axis");
  if (!(t_max > t_min) || !(alpha_max > alpha_min)) fail(ErrorCode::Config, "empty parameter domain");
  if (jobs == 0) fail(ErrorCode::Config, "jobs must be at least 1");
  for (const auto& p : corners()) p.validate();
  for (const auto& p : extras) p.validate();
  for (double t : recon_times) {
    if (t < 0.0 || t > t_final) fail(ErrorCode::Config, "reconstruction time outside [0, t_final]");
  }
}

FomConfig StudyConfig::fom_config(std::size_t stride) const {
  FomConfig f;
  f.grid = grid();
  f.dt = dt;
  f.t_final = t_final;
  f.snapshot_stride = stride;
  return f;
}

std::vector<ParamPoint> StudyConfig::corners() const {
  return {{t_min, alpha_min, v0}, {t_min, alpha_max, v0}, {t_max, alpha_min, v0}, {t_max, alpha_max, v0}};
}

std::vector<ParamPoint> StudyConfig::lattice() const {
  std::vector<ParamPoint> out;
  for (std::size_t i = 0; i < n_t; ++i) {
    for (std::size_t k = 0; k < n_alpha; ++k) {
      const double T = i + 1 == n_t ? t_max : t_min + (t_max - t_min) * static_cast<double>(i) / (n_t - 1);
      const double a = k + 1 == n_alpha ? alpha_max
                                        : alpha_min + (alpha_max - alpha_min) * static_cast<double>(k) / (n_alpha - 1);
      out.push_back({T, a, v0});
    }
  }
  return out;
}

// ---- metrics -------------------------------------------------------------------

double relative_error(const Eigen::VectorXd& f, const Eigen::VectorXd& f_rom) {
  if (f.size() != f_rom.size()) fail(ErrorCode::Config, "fields have different sizes");
  const double denom = f.norm();
  if (denom == 0.0) fail(ErrorCode::UndefinedError, "relative error of a zero reference field");
  return (f - f_rom).norm() / denom;
}

double relative_error(const DistributionField& f, const DistributionField& f_rom) {
  if (!(f.grid == f_rom.grid)) fail(ErrorCode::Config, "fields live on different grids");
  if (std::abs(f.time - f_rom.time) > 1e-9) fail(ErrorCode::Config, "fields are at different times");
  return relative_error(f.values, f_rom.values);
}

std::string mu_label(const ParamPoint& mu) {
  return format_number(mu.T) + "_" + format_number(mu.alpha) + "_" + format_number(mu.v0);
}

double log_slope(const std::vector<double>& times, const std::vector<double>& max_e, double t_lo, double t_hi) {
  if (times.size() != max_e.size()) fail(ErrorCode::Config, "series lengths differ");
  double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_lo - 1e-12 || times[i] > t_hi + 1e-12) continue;
    if (!(max_e[i] > 0.0)) fail(ErrorCode::UndefinedError, "non-positive max|E| inside the fit interval");
    const double y = std::log(max_e[i]);
    n += 1;
    st += times[i];
    sy += y;
    stt += times[i] * times[i];
    sty += times[i] * y;
  }
  const double den = n * stt - st * st;
  if (n < 3 || den <= 0.0) fail(ErrorCode::UndefinedError, "too few samples in the growth interval");
  return (n * sty - st * sy) / den;
}

GrowthFit growth_interval(const std::vector<double>& times, const std::vector<double>& max_e) {
  if (times.size() != max_e.size() || times.size() < 8) fail(ErrorCode::Config, "series too short for a growth fit");
  const auto peak = static_cast<std::size_t>(std::max_element(max_e.begin(), max_e.end()) - max_e.begin());
  const auto low = static_cast<std::size_t>(std::min_element(max_e.begin(), max_e.begin() + peak + 1) -
                                            max_e.begin());
  if (peak <= low || !(max_e[low] > 0.0)) fail(ErrorCode::UndefinedError, "no growth stage in the series");
  const double y0 = std::log(max_e[low]), y1 = std::log(max_e[peak]);
  const double lo = y0 + 0.25 * (y1 - y0), hi = y0 + 0.75 * (y1 - y0);
  std::size_t a = low;
  while (a < peak && std::log(max_e[a]) < lo) ++a;
  std::size_t b = a;
  while (b < peak && std::log(max_e[b]) < hi) ++b;
  GrowthFit g;
  g.t_lo = times[a];
  g.t_hi = times[b];
  g.slope = log_slope(times, max_e, g.t_lo, g.t_hi);
  return g;
}

// ---- serialization -----------------------------------------------------------------

json PointResult::to_json() const {
  return {{"mu", mu_to_json(mu)},
          {"role", role},
          {"lattice_index", lattice_index},
          {"training", training},
          {"has_fom", has_fom},
          {"epsilon", epsilon},
          {"fom_seconds", fom_seconds},
          {"rom_seconds", rom_seconds},
          {"rom_full_order_ops", rom_full_order_ops},
          {"times", times},
          {"fom_max_e", fom_max_e},
          {"rom_max_e", rom_max_e},
          {"recon_files", recon_files}};
}

PointResult PointResult::from_json(const json& j) {
  PointResult r;
  r.mu = mu_from_json(j.at("mu"));
  r.role = j.at("role").get<std::string>();
  r.lattice_index = j.at("lattice_index").get<std::size_t>();
  r.training = j.at("training").get<bool>();
  r.has_fom = j.at("has_fom").get<bool>();
  r.epsilon = j.at("epsilon").get<double>();
  r.fom_seconds = j.at("fom_seconds").get<double>();
  r.rom_seconds = j.at("rom_seconds").get<double>();
  r.rom_full_order_ops = j.at("rom_full_order_ops").get<std::size_t>();
  r.times = j.at("times").get<std::vector<double>>();
  r.fom_max_e = j.at("fom_max_e").get<std::vector<double>>();
  r.rom_max_e = j.at("rom_max_e").get<std::vector<double>>();
  r.recon_files = j.at("recon_files").get<std::vector<std::string>>();
  return r;
}

json TrainingSummary::to_json() const {
  return {{"model_dir", model_dir.string()},
          {"offline_seconds", offline_seconds},
          {"n_f", n_f},
          {"n_phi", n_phi},
          {"tensor_bytes", tensor_bytes},
          {"max_orthonormality_defect", max_orthonormality_defect},
          {"warnings", warnings}};
}

void write_fields(const fs::path& path, const PhaseGrid& grid, const ParamPoint& mu, const std::vector<double>& times,
                  const std::vector<Eigen::VectorXd>& fields) {
  if (times.size() != fields.size()) fail(ErrorCode::Config, "one time per field is required");
  ContainerHeader h;
  h.kind = ContainerKind::Fields;
  h.nx = static_cast<std::uint32_t>(grid.nx);
  h.nv = static_cast<std::uint32_t>(grid.nv);
  h.mu = mu;
  h.n_records = fields.size();
  h.record_len = grid.size();
  h.aux = {fields.size(), 0, 0, 0};
  ContainerWriter w(path, h);
  for (const auto& f : fields) {
    if (static_cast<std::size_t>(f.size()) != grid.size()) fail(ErrorCode::Config, "field size does not match grid");
    w.write(std::span<const double>(f.data(), grid.size()));
  }
  w.write(times);  // trailing block: the time of each record
  w.close();
}

// ---- pipeline ----------------------------------------------------------------------

std::vector<fs::path> run_training_foms(const StudyConfig& config, const fs::path& workspace,
                                        const ProgressFn& progress) {
  config.validate();
  fs::create_directories(workspace / "fom");
  std::vector<fs::path> out;
  for (const auto& mu : config.corners()) {
    const auto path = training_path(workspace, mu);
    out.push_back(path);
    if (training_run_complete(path, config, mu)) {
      if (progress) progress("training run " + mu_label(mu) + " already complete");
      continue;
    }
    if (progress) progress("training run " + mu_label(mu));
    const auto start = std::chrono::steady_clock::now();
    TrajectoryWriter writer(path, config.fom_config(), mu);
    fom_run(config.fom_config(), mu, writer);
    writer.finish(seconds_since(start));
  }
  return out;
}

TrainingSummary train_model(const StudyConfig& config, const std::vector<fs::path>& trajectories,
                            const fs::path& model_dir, const ProgressFn& progress) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::unique_ptr<TrajectoryFile>> files;
  std::vector<TrajectorySource*> runs;
  for (const auto& p : trajectories) {
    files.push_back(std::make_unique<TrajectoryFile>(p, true));
    runs.push_back(files.back().get());
  }
  if (runs.empty()) fail(ErrorCode::Config, "no training trajectories");
  const PhaseGrid grid = runs.front()->grid();
  const auto partition = partition_uniform(runs.front()->times().back(), config.n_windows);
  const auto groups = group_snapshots(runs, partition);
  fs::create_directories(model_dir);

  TrainingSummary s;
  s.model_dir = model_dir;
  OfflineOptions offline;
  offline.max_tensor_bytes = config.max_tensor_bytes;
  std::vector<json> windows;
  std::optional<WindowBasis> prev;
  std::optional<WindowOperators> prev_ops;

  auto flush_prev = [&](const WindowBasis* next) {
    if (next) {
      const auto tr = build_transitions({*prev, *next}, &s.warnings);
      prev_ops->t_next = tr.front().t_f;
      prev_ops->t_next_phi = tr.front().t_phi;
      prev_ops->has_next = true;
    }
    const std::size_t m = prev->window_index;
    json w = {{"index", m}, {"n_f", prev->n_f()}, {"n_phi", prev->n_phi()}};
    w.update(write_basis_file(model_dir / model_window_file("basis", m), grid, *prev));
    w.update(write_operators_file(model_dir / model_window_file("operators", m), grid, *prev_ops));
    s.tensor_bytes += w.at("tensor_bytes").get<std::size_t>();
    windows.push_back(std::move(w));
  };

  for (const auto& g : groups) {
    if (g.columns() == 0) fail(ErrorCode::NoBasis, "window " + std::to_string(g.window_index) + " has no snapshots");
    const auto snaps = assemble_group(g, runs);
    auto basis = build_window_basis(g.window_index, snaps, grid, config.rule_f, config.rule_phi);
    s.max_orthonormality_defect = std::max(
        {s.max_orthonormality_defect, orthonormality_defect(basis.phi_f), orthonormality_defect(basis.phi_phi)});
    s.n_f.push_back(basis.n_f());
    s.n_phi.push_back(basis.n_phi());
    auto ops = build_operators_for(basis, grid, offline);
    if (prev) flush_prev(&basis);
    prev = std::move(basis);
    prev_ops = std::move(ops);
    if (progress && (g.window_index % 10 == 0 || g.window_index + 1 == groups.size())) {
      progress("window " + std::to_string(g.window_index) + ": n_f=" + std::to_string(prev->n_f()) +
               " n_phi=" + std::to_string(prev->n_phi()));
    }
  }
  flush_prev(nullptr);
  s.offline_seconds = seconds_since(start);

  json build = model_key(config);
  build["offline_seconds"] = s.offline_seconds;
  build["max_orthonormality_defect"] = s.max_orthonormality_defect;
  build["warnings"] = s.warnings;
  build["training"] = points_to_json(config.corners());
  write_model_manifest(model_dir, grid, partition, windows, build);
  return s;
}

StudyReport load_report(const fs::path& workspace) {
  const auto cfg_path = workspace / "study.json";
  if (!fs::exists(cfg_path)) fail(ErrorCode::Io, "no study checkpoint in " + workspace.string());
  StudyReport rep;
  rep.workspace = workspace;
  rep.config = StudyConfig::from_json(read_json(cfg_path));
  const auto manifest = workspace / "model" / "manifest.json";
  if (fs::exists(manifest)) {
    const auto m = read_json(manifest);
    json t = m.at("build");
    std::vector<std::size_t> nf, np;
    for (const auto& w : m.at("windows")) {
      nf.push_back(w.at("n_f").get<std::size_t>());
      np.push_back(w.at("n_phi").get<std::size_t>());
    }
    t["n_f"] = nf;
    t["n_phi"] = np;
    t["tensor_bytes"] = m.at("tensor_bytes");
    rep.training = t;
  }
  std::vector<PointResult> lattice, extras;
  const auto lat = rep.config.lattice();
  const auto key_of = [&](const ParamPoint& mu) { return workspace / "runs" / (mu_label(mu) + ".json"); };
  for (const auto& mu : lat) {
    const auto p = key_of(mu);
    if (fs::exists(p)) rep.points.push_back(PointResult::from_json(read_json(p).at("result")));
  }
  for (const auto& mu : rep.config.extras) {
    if (contains_point(lat, mu)) continue;
    const auto p = key_of(mu);
    if (fs::exists(p)) rep.points.push_back(PointResult::from_json(read_json(p).at("result")));
  }
  rep.growth = compute_growth(rep.config, rep.points);
  return rep;
}

StudyReport run_study(const StudyConfig& config, const fs::path& workspace, const ProgressFn& progress) {
  config.validate();
  fs::create_directories(workspace / "runs");
  write_json(workspace / "study.json", config.to_json());

  // Stage 1: training trajectories.
  const auto trajectories = run_training_foms(config, workspace, progress);

  // Stage 2: offline build, skipped when a model for the same settings exists.
  const auto model_dir = workspace / "model";
  bool have_model = false;
  if (fs::exists(model_dir / "manifest.json")) {
    try {
      json build = read_json(model_dir / "manifest.json").at("build");
      const json key = model_key(config);
      have_model = std::all_of(key.items().begin(), key.items().end(),
                               [&](const auto& kv) { return build.contains(kv.key()) && build[kv.key()] == kv.value(); });
      if (have_model) (void)RomModel::load(model_dir, true);
    } catch (const std::exception&) {
      have_model = false;
    }
  }
  if (!have_model) {
    if (progress) progress("training model");
    fs::remove_all(model_dir);
    train_model(config, trajectories, model_dir, progress);
  } else if (progress) {
    progress("model already built");
  }
  const auto model = RomModel::load(model_dir, true);

  // Stage 3: sweep.
  const auto lat = config.lattice();
  const auto corners = config.corners();
  std::vector<PointTask> tasks;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    PointTask t;
    t.mu = lat[i];
    t.role = "lattice";
    t.lattice_index = i;
    t.training = contains_point(corners, lat[i]);
    t.has_fom = !config.fast || t.training || contains_point(config.fast_points, lat[i]) ||
                contains_point(config.growth_points, lat[i]);
    t.recon = contains_point(config.recon_points, lat[i]);
    tasks.push_back(t);
  }
  for (std::size_t i = 0; i < config.extras.size(); ++i) {
    if (contains_point(lat, config.extras[i])) continue;
    PointTask t;
    t.mu = config.extras[i];
    t.role = "extra";
    t.lattice_index = i;
    t.has_fom = !config.fast || contains_point(config.growth_points, t.mu);
    t.recon = contains_point(config.recon_points, t.mu);
    tasks.push_back(t);
  }

  std::vector<std::optional<PointResult>> results(tasks.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto path = workspace / "runs" / (mu_label(tasks[i].mu) + ".json");
    if (fs::exists(path)) {
      try {
        const auto j = read_json(path);
        if (j.at("key") == run_key(config, tasks[i].has_fom, tasks[i].recon)) {
          results[i] = PointResult::from_json(j.at("result"));
          continue;
        }
      } catch (const std::exception&) {
      }
    }
    pending.push_back(i);
  }
  if (progress) {
    progress(std::to_string(pending.size()) + " of " + std::to_string(tasks.size()) + " parameter points to run");
  }

  std::atomic<std::size_t> next{0};
  std::mutex mtx;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= pending.size()) return;
      {
        std::lock_guard lock(mtx);
        if (first_error) return;
      }
      const auto& task = tasks[pending[k]];
      try {
        auto r = run_point(config, model, task, workspace);
        write_json(workspace / "runs" / (mu_label(task.mu) + ".json"),
                   {{"key", run_key(config, task.has_fom, task.recon)}, {"result", r.to_json()}});
        std::lock_guard lock(mtx);
        if (progress) {
          std::ostringstream os;
          os << mu_label(task.mu) << ": rom " << std::fixed << std::setprecision(3) << r.rom_seconds << " s";
          if (r.has_fom) os << ", fom " << r.fom_seconds << " s, eps " << std::setprecision(5) << r.epsilon;
          progress(os.str());
        }
        results[pending[k]] = std::move(r);
      } catch (...) {
        std::lock_guard lock(mtx);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const std::size_t n_workers = std::min<std::size_t>(config.jobs, std::max<std::size_t>(pending.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  StudyReport rep = load_report(workspace);
  return rep;
}

// ---- reports ------------------------------------------------------------------------

json emit_reports(const StudyReport& report, const fs::path& outdir) {
  if (report.empty()) fail(ErrorCode::Config, "empty study report");
  const auto& c = report.config;
  fs::create_directories(outdir);

  std::vector<const PointResult*> lattice(c.n_t * c.n_alpha, nullptr);
  for (const auto& p : report.points) {
    if (p.role != "lattice") continue;
    if (p.lattice_index >= lattice.size() || lattice[p.lattice_index]) {
      fail(ErrorCode::Config, "duplicate or out-of-range lattice point in report");
    }
    lattice[p.lattice_index] = &p;
  }
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    if (!lattice[i]) fail(ErrorCode::Config, "report misses lattice point " + mu_label(c.lattice()[i]));
  }

  std::ostringstream err;
  err << "T,alpha,epsilon,training,fom_run\r\n";
  for (const auto* p : lattice) {
    err << format_number(p->mu.T) << ',' << format_number(p->mu.alpha) << ',' << (p->has_fom ? csv_number(p->epsilon) : "")
        << ',' << (p->training ? 1 : 0) << ',' << (p->has_fom ? 1 : 0) << "\r\n";
  }
  write_text(outdir / "errors.csv", err.str());

  std::ostringstream timing;
  timing << "T,alpha,v0,fom_seconds,rom_seconds,speedup,fom_source\r\n";
  std::vector<double> speedups, speedups_fresh, rom_secs;
  std::size_t max_ops = 0;
  json corner_eps = json::array();
  double corner_max = 0.0, lattice_max = 0.0;
  ParamPoint lattice_argmax{};
  std::size_t n_with_fom = 0;
  for (const auto& p : report.points) {
    rom_secs.push_back(p.rom_seconds);
    max_ops = std::max(max_ops, p.rom_full_order_ops);
    const bool series = p.has_fom || p.role == "extra" || contains_point(c.growth_points, p.mu);
    if (series) {
      std::ostringstream s;
      s << "t,fom,rom\r\n";
      for (std::size_t i = 0; i < p.times.size(); ++i) {
        s << format_number(p.times[i]) << ',' << (p.has_fom ? csv_number(p.fom_max_e[i]) : "") << ','
          << csv_number(p.rom_max_e[i]) << "\r\n";
      }
      write_text(outdir / ("maxE_" + mu_label(p.mu) + ".csv"), s.str());
    }
    for (const auto& rel : p.recon_files) {
      fs::copy_file(report.workspace / rel, outdir / fs::path(rel).filename(), fs::copy_options::overwrite_existing);
    }
    if (!p.has_fom) continue;
    const double sp = p.fom_seconds / p.rom_seconds;
    timing << format_number(p.mu.T) << ',' << format_number(p.mu.alpha) << ',' << format_number(p.mu.v0) << ','
           << csv_number(p.fom_seconds) << ',' << csv_number(p.rom_seconds) << ',' << csv_number(sp) << ','
           << (p.training ? "training" : "comparison") << "\r\n";
    speedups.push_back(sp);
    if (!p.training) speedups_fresh.push_back(sp);
    if (p.role != "lattice") continue;
    ++n_with_fom;
    if (p.epsilon >= lattice_max) {
      lattice_max = p.epsilon;
      lattice_argmax = p.mu;
    }
    if (p.training) {
      corner_eps.push_back({{"mu", mu_to_json(p.mu)}, {"epsilon", p.epsilon}});
      corner_max = std::max(corner_max, p.epsilon);
    }
  }
  write_text(outdir / "timing.csv", timing.str());

  auto median = [](std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  const auto& basis_speedups = speedups_fresh.empty() ? speedups : speedups_fresh;
  json growth = json::array();
  double growth_max = 0.0;
  for (const auto& g : report.growth) {
    growth.push_back({{"mu", mu_to_json(g.mu)},
                      {"t_lo", g.t_lo},
                      {"t_hi", g.t_hi},
                      {"fom_slope", g.fom_slope},
                      {"rom_slope", g.rom_slope},
                      {"relative_difference", g.relative_difference}});
    growth_max = std::max(growth_max, g.relative_difference);
  }
  json summary = {
      {"config", c.to_json()},
      {"n_points", report.points.size()},
      {"lattice_points", lattice.size()},
      {"lattice_points_with_fom", n_with_fom},
      {"training", report.training},
      {"corner_epsilon", corner_eps},
      {"corner_max_epsilon", corner_max},
      {"lattice_max_epsilon", lattice_max},
      {"lattice_max_point", mu_to_json(lattice_argmax)},
      {"growth", growth},
      {"growth_max_relative_difference", growth_max},
      {"speedup",
       {{"median", median(basis_speedups)},
        {"min", basis_speedups.empty() ? 0.0 : *std::min_element(basis_speedups.begin(), basis_speedups.end())},
        {"pairs", speedups.size()},
        {"comparison_pairs", speedups_fresh.size()},
        {"rom_seconds_median", median(rom_secs)}}},
      {"rom_full_order_ops_in_loop_max", max_ops},
  };
  write_json(outdir / "summary.json", summary);
  return summary;
}

}  // namespace vrom
