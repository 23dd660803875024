/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

/*! \file vrom.h
 *  C interface to the vrom library: Vlasov-Poisson full-order solver and
 *  time-windowed POD-Galerkin reduced-order models.
 *
 *  Every fallible call returns a vrom_status; on failure vrom_last_error()
 *  describes the problem (per thread). Strings handed out by the library
 *  are released with vrom_string_free.
 */

#ifndef VROM_VROM_H
#define VROM_VROM_H

#include <stddef.h>

#if defined(_WIN32)
#define VROM_API __declspec(dllexport)
#else
#define VROM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vrom_status {
  VROM_OK = 0,
  VROM_ERR_CONFIG = 1,
  VROM_ERR_NUMERICAL_BLOWUP = 2,
  VROM_ERR_IO = 3,
  VROM_ERR_FORMAT = 4,
  VROM_ERR_SINGULAR_REDUCED_POISSON = 5,
  VROM_ERR_MODEL_INTEGRITY = 6,
  VROM_ERR_NO_BASIS = 7,
  VROM_ERR_OUT_OF_RANGE = 8,
  VROM_ERR_UNDEFINED = 9,
  VROM_ERR_MEMORY_CAP = 10,
  VROM_ERR_INVALID_ARGUMENT = 11,
  VROM_ERR_INTERNAL = 99
} vrom_status;

typedef struct vrom_param {
  double T;
  double alpha;
  double v0;
} vrom_param;

typedef struct vrom_grid_info {
  size_t nx, nv;
  double x_min, x_max;
  double v_min, v_max;
  double dx, dv;
} vrom_grid_info;

typedef struct vrom_model vrom_model_t;
typedef struct vrom_rom_trajectory vrom_rom_trajectory_t;

typedef void (*vrom_log_fn)(const char* message, void* user);

VROM_API const char* vrom_version(void);
VROM_API const char* vrom_status_name(vrom_status status);
/// Message of the last failure on the calling thread; empty when none.
VROM_API const char* vrom_last_error(void);
VROM_API void vrom_string_free(char* s);
/// Progress messages from long-running calls; NULL disables them.
VROM_API void vrom_set_log(vrom_log_fn fn, void* user);

/* ---- phase space --------------------------------------------------------- */

VROM_API vrom_status vrom_grid(size_t nx, size_t nv, double v0, vrom_grid_info* out);
/// Writes nx*nv values, x-major (index ix*nv + iv).
VROM_API vrom_status vrom_initial_condition(size_t nx, size_t nv, vrom_param mu, double* out);
/// d2phi/dx2 = rho - mean(rho) on a periodic domain of the given length, zero-mean phi.
VROM_API vrom_status vrom_poisson_solve(const double* rho, size_t nx, double length, double* phi_out);
VROM_API vrom_status vrom_electric_field(const double* phi, size_t nx, double length, double* e_out);
VROM_API vrom_status vrom_velocity_moment(size_t nx, size_t nv, double v0, const double* f, double* rho_out);

/* ---- pipeline -------------------------------------------------------------
 * Configuration is a JSON document (see the README for its keys). Summaries
 * are returned as JSON strings owned by the caller.
 */

/// Full-order run at config "mu"; writes <workspace>/fom/<label>.vrom and its JSON sidecar.
VROM_API vrom_status vrom_fom_run(const char* config_json, const char* workspace, char** summary_json);
/// Corner training runs (reused when complete) and the model build into <workspace>/model.
VROM_API vrom_status vrom_train(const char* config_json, const char* workspace, char** summary_json);
/// Complete study with checkpoints under the workspace; reports go to <workspace>/report.
VROM_API vrom_status vrom_study_run(const char* config_json, const char* workspace, char** summary_json);
/// Rebuilds the reports of an existing workspace into outdir (NULL: <workspace>/report).
VROM_API vrom_status vrom_report(const char* workspace, const char* outdir, char** summary_json);

/* ---- online ROM ------------------------------------------------------------ */

VROM_API vrom_status vrom_model_load(const char* dir, int verify_checksums, vrom_model_t** out);
VROM_API void vrom_model_free(vrom_model_t* model);
VROM_API vrom_status vrom_model_info(const vrom_model_t* model, char** info_json);

/// t_final < 0 runs to the end of the last window.
VROM_API vrom_status vrom_rom_run(const vrom_model_t* model, vrom_param mu, double dt, double t_final,
                                  vrom_rom_trajectory_t** out);
VROM_API void vrom_rom_trajectory_free(vrom_rom_trajectory_t* traj);
VROM_API size_t vrom_rom_trajectory_length(const vrom_rom_trajectory_t* traj);
/// Copies the stored times and max|E| values (length vrom_rom_trajectory_length); either may be NULL.
VROM_API vrom_status vrom_rom_trajectory_series(const vrom_rom_trajectory_t* traj, double* times, double* max_e);
/// Wall time, window hand-offs and full-order operation count as JSON.
VROM_API vrom_status vrom_rom_trajectory_info(const vrom_rom_trajectory_t* traj, char** info_json);
/// Lifts the state at a stored time t into out (nx*nv values).
VROM_API vrom_status vrom_rom_reconstruct(const vrom_model_t* model, const vrom_rom_trajectory_t* traj, double t,
                                          double* out);
/// Reduced trajectory container plus a (t, max_e) CSV.
VROM_API vrom_status vrom_rom_write(const vrom_model_t* model, const vrom_rom_trajectory_t* traj, const char* bin_path,
                                    const char* csv_path);

#ifdef __cplusplus
}
#endif

#endif  // VROM_VROM_H
