/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

#include "vrom/vrom.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <new>
#include <string>

#include "container.hpp"
#include "error.hpp"
#include "fom.hpp"
#include "rom_online.hpp"
#include "study.hpp"
#include "trajectory_io.hpp"

struct vrom_model {
  vrom::RomModel model;
};

struct vrom_rom_trajectory {
  vrom::RomTrajectory traj;
  vrom::ParamPoint mu;
  double dt = 0.0;
};

namespace {

namespace fs = std::filesystem;

thread_local std::string g_last_error;

std::mutex g_log_mutex;
vrom_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

void log_message(const std::string& msg) {
  std::lock_guard lock(g_log_mutex);
  if (g_log_fn) g_log_fn(msg.c_str(), g_log_user);
}

template <class F>
vrom_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return VROM_OK;
  } catch (const vrom::Error& e) {
    g_last_error = e.what();
    return static_cast<vrom_status>(static_cast<int>(e.code()));
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("configuration: ") + e.what();
    return VROM_ERR_CONFIG;
  } catch (const fs::filesystem_error& e) {
    g_last_error = e.what();
    return VROM_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return VROM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return VROM_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw vrom::Error(vrom::ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void hand_out(const nlohmann::json& j, char** out) {
  if (out) *out = dup_string(j.dump(2));
}

nlohmann::json parse_config(const char* text) {
  if (!text || !*text) return nlohmann::json::object();
  return nlohmann::json::parse(text);
}

vrom::ParamPoint to_point(vrom_param p) { return {p.T, p.alpha, p.v0}; }

}  // namespace

extern "C" {

const char* vrom_version(void) { return "1.0.0"; }

const char* vrom_status_name(vrom_status status) {
  switch (status) {
    case VROM_OK: return "ok";
    case VROM_ERR_CONFIG: return "config-error";
    case VROM_ERR_NUMERICAL_BLOWUP: return "numerical-blowup";
    case VROM_ERR_IO: return "io-error";
    case VROM_ERR_FORMAT: return "format-error";
    case VROM_ERR_SINGULAR_REDUCED_POISSON: return "singular-reduced-poisson";
    case VROM_ERR_MODEL_INTEGRITY: return "model-integrity";
    case VROM_ERR_NO_BASIS: return "no-basis";
    case VROM_ERR_OUT_OF_RANGE: return "out-of-range";
    case VROM_ERR_UNDEFINED: return "undefined-error";
    case VROM_ERR_MEMORY_CAP: return "memory-cap";
    case VROM_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case VROM_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* vrom_last_error(void) { return g_last_error.c_str(); }

void vrom_string_free(char* s) { std::free(s); }

void vrom_set_log(vrom_log_fn fn, void* user) {
  std::lock_guard lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

vrom_status vrom_grid(size_t nx, size_t nv, double v0, vrom_grid_info* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    const auto g = vrom::build_grid(nx, nv, v0);
    *out = {g.nx, g.nv, g.x_min, g.x_max, g.v_min, g.v_max, g.dx, g.dv};
  });
}

vrom_status vrom_initial_condition(size_t nx, size_t nv, vrom_param mu, double* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    const auto f = vrom::initial_condition(vrom::build_grid(nx, nv, mu.v0), to_point(mu));
    std::memcpy(out, f.values.data(), sizeof(double) * f.values.size());
  });
}

vrom_status vrom_poisson_solve(const double* rho, size_t nx, double length, double* phi_out) {
  return guarded([&] {
    require(rho && phi_out, "null argument");
    const auto phi = vrom::poisson_solve(std::span<const double>(rho, nx), length);
    std::memcpy(phi_out, phi.values.data(), sizeof(double) * nx);
  });
}

vrom_status vrom_electric_field(const double* phi, size_t nx, double length, double* e_out) {
  return guarded([&] {
    require(phi && e_out, "null argument");
    const auto e = vrom::electric_field(std::span<const double>(phi, nx), length);
    std::memcpy(e_out, e.values.data(), sizeof(double) * nx);
  });
}

vrom_status vrom_velocity_moment(size_t nx, size_t nv, double v0, const double* f, double* rho_out) {
  return guarded([&] {
    require(f && rho_out, "null argument");
    const auto g = vrom::build_grid(nx, nv, v0);
    const auto rho = vrom::velocity_moment(g, std::span<const double>(f, g.size()));
    std::memcpy(rho_out, rho.data(), sizeof(double) * nx);
  });
}

vrom_status vrom_fom_run(const char* config_json, const char* workspace, char** summary_json) {
  return guarded([&] {
    require(workspace != nullptr, "null workspace");
    const auto j = parse_config(config_json);
    const auto config = vrom::StudyConfig::from_json(j);
    config.validate();
    if (!j.contains("mu")) vrom::fail(vrom::ErrorCode::Config, "the fom command needs \"mu\" in its configuration");
    const auto mu = vrom::mu_from_json(j.at("mu"));
    mu.validate();
    const auto fom = config.fom_config(j.value("stride", std::size_t{1}));
    const fs::path dir = fs::path(workspace) / "fom";
    fs::create_directories(dir);
    const auto path = dir / (vrom::mu_label(mu) + ".vrom");
    log_message("fom run " + vrom::mu_label(mu) + " -> " + path.string());
    const auto start = std::chrono::steady_clock::now();
    vrom::TrajectoryWriter writer(path, fom, mu);
    vrom::fom_run(fom, mu, writer);
    hand_out(writer.finish(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()),
             summary_json);
  });
}

vrom_status vrom_train(const char* config_json, const char* workspace, char** summary_json) {
  return guarded([&] {
    require(workspace != nullptr, "null workspace");
    const auto config = vrom::StudyConfig::from_json(parse_config(config_json));
    const auto runs = vrom::run_training_foms(config, workspace, log_message);
    const fs::path model_dir = fs::path(workspace) / "model";
    fs::remove_all(model_dir);
    const auto s = vrom::train_model(config, runs, model_dir, log_message);
    hand_out(s.to_json(), summary_json);
  });
}

vrom_status vrom_study_run(const char* config_json, const char* workspace, char** summary_json) {
  return guarded([&] {
    require(workspace != nullptr, "null workspace");
    const auto config = vrom::StudyConfig::from_json(parse_config(config_json));
    const auto report = vrom::run_study(config, workspace, log_message);
    hand_out(vrom::emit_reports(report, fs::path(workspace) / "report"), summary_json);
  });
}

vrom_status vrom_report(const char* workspace, const char* outdir, char** summary_json) {
  return guarded([&] {
    require(workspace != nullptr, "null workspace");
    const auto report = vrom::load_report(workspace);
    const fs::path out = outdir ? fs::path(outdir) : fs::path(workspace) / "report";
    hand_out(vrom::emit_reports(report, out), summary_json);
  });
}

vrom_status vrom_model_load(const char* dir, int verify_checksums, vrom_model_t** out) {
  return guarded([&] {
    require(dir && out, "null argument");
    *out = new vrom_model{vrom::RomModel::load(dir, verify_checksums != 0)};
  });
}

void vrom_model_free(vrom_model_t* model) { delete model; }

vrom_status vrom_model_info(const vrom_model_t* model, char** info_json) {
  return guarded([&] {
    require(model != nullptr, "null model");
    const auto& m = model->model;
    std::vector<std::size_t> nf, np;
    for (std::size_t w = 0; w < m.n_windows(); ++w) {
      nf.push_back(m.ops(w).n_f);
      np.push_back(m.ops(w).n_phi);
    }
    hand_out({{"grid", vrom::grid_to_json(m.grid())},
              {"n_windows", m.n_windows()},
              {"boundaries", m.partition().boundaries},
              {"n_f", nf},
              {"n_phi", np}},
             info_json);
  });
}

vrom_status vrom_rom_run(const vrom_model_t* model, vrom_param mu, double dt, double t_final,
                         vrom_rom_trajectory_t** out) {
  return guarded([&] {
    require(model && out, "null argument");
    vrom::RomOptions opts;
    opts.dt = dt;
    opts.t_final = t_final;
    auto p = to_point(mu);
    p.validate();
    *out = new vrom_rom_trajectory{vrom::rom_run(model->model, p, opts), p, dt};
  });
}

void vrom_rom_trajectory_free(vrom_rom_trajectory_t* traj) { delete traj; }

size_t vrom_rom_trajectory_length(const vrom_rom_trajectory_t* traj) { return traj ? traj->traj.times.size() : 0; }

vrom_status vrom_rom_trajectory_series(const vrom_rom_trajectory_t* traj, double* times, double* max_e) {
  return guarded([&] {
    require(traj != nullptr, "null trajectory");
    const auto& t = traj->traj;
    if (times) std::memcpy(times, t.times.data(), sizeof(double) * t.times.size());
    if (max_e) std::memcpy(max_e, t.max_e.data(), sizeof(double) * t.max_e.size());
  });
}

vrom_status vrom_rom_trajectory_info(const vrom_rom_trajectory_t* traj, char** info_json) {
  return guarded([&] {
    require(traj != nullptr, "null trajectory");
    const auto& t = traj->traj;
    hand_out({{"mu", vrom::mu_to_json(traj->mu)},
              {"dt", traj->dt},
              {"length", t.times.size()},
              {"wall_seconds", t.wall_seconds},
              {"handoff_times", t.handoff_times},
              {"full_order_ops_in_loop", t.full_order_ops_in_loop}},
             info_json);
  });
}

vrom_status vrom_rom_reconstruct(const vrom_model_t* model, const vrom_rom_trajectory_t* traj, double t, double* out) {
  return guarded([&] {
    require(model && traj && out, "null argument");
    const auto f = vrom::reconstruct(traj->traj, model->model, t);
    std::memcpy(out, f.values.data(), sizeof(double) * f.values.size());
  });
}

vrom_status vrom_rom_write(const vrom_model_t* model, const vrom_rom_trajectory_t* traj, const char* bin_path,
                           const char* csv_path) {
  return guarded([&] {
    require(model && traj && bin_path && csv_path, "null argument");
    vrom::write_rom_trajectory(bin_path, csv_path, traj->traj, model->model.grid(), traj->mu, traj->dt);
  });
}

}  // extern "C"
