/******************************************************************************
 *
 * Copyright (c) 2026, vrom project developers.
 *
 * SPDX-License-Identifier: Apache-2.0
 *
 *****************************************************************************/

// Command-line front end; everything goes through the C API.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vrom/vrom.h"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string workspace = ".";
  std::vector<std::size_t> grid;
  std::size_t windows = 0;
  double energy = -1.0;
  bool fast = false;
  std::size_t jobs = 0;
  std::vector<double> mu;
  std::string outdir;
  bool quiet = false;
};

std::string label(double T, double alpha, double v0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.10g_%.10g_%.10g", T, alpha, v0);
  return buf;
}

nlohmann::json load_config(const Options& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config.empty()) {
    fs::path p = o.config;
    if (p.is_relative() && !fs::exists(p) && fs::exists(fs::path(o.workspace) / p)) p = fs::path(o.workspace) / p;
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot open config " + p.string());
    j = nlohmann::json::parse(in);
  }
  if (!o.grid.empty()) j["grid"] = {{"nx", o.grid.at(0)}, {"nv", o.grid.at(1)}};
  if (o.windows > 0) j["windows"] = o.windows;
  if (o.energy >= 0.0) j["pod"] = {{"f", {{"energy", o.energy}}}, {"phi", {{"energy", o.energy}}}};
  if (o.fast) j["fast"] = true;
  if (o.jobs > 0) j["jobs"] = o.jobs;
  if (!o.mu.empty()) j["mu"] = o.mu;
  return j;
}

int check(vrom_status s) {
  if (s != VROM_OK) std::cerr << "error (" << vrom_status_name(s) << "): " << vrom_last_error() << "\n";
  return static_cast<int>(s);
}

template <class Call>
int print_result(Call&& call) {
  char* text = nullptr;
  const vrom_status s = call(&text);
  if (s == VROM_OK && text) std::cout << text << "\n";
  vrom_string_free(text);
  return check(s);
}

int run_rom(const Options& o, const nlohmann::json& cfg) {
  if (!cfg.contains("mu")) {
    std::cerr << "error: rom needs --mu T ALPHA V0 or \"mu\" in the config\n";
    return VROM_ERR_CONFIG;
  }
  const auto m = cfg["mu"];
  vrom_param mu{m.at(0).get<double>(), m.at(1).get<double>(), m.size() > 2 ? m.at(2).get<double>() : 1.0};
  const double dt = cfg.contains("rom") ? cfg["rom"].value("dt", 0.0025) : 0.0025;
  const fs::path model_dir = fs::path(o.workspace) / "model";
  vrom_model_t* model = nullptr;
  if (int rc = check(vrom_model_load(model_dir.c_str(), 1, &model))) return rc;
  vrom_rom_trajectory_t* traj = nullptr;
  int rc = check(vrom_rom_run(model, mu, dt, -1.0, &traj));
  if (rc == 0) {
    const fs::path dir = fs::path(o.workspace) / "rom";
    fs::create_directories(dir);
    const std::string name = label(mu.T, mu.alpha, mu.v0);
    const auto bin = dir / (name + ".vrom");
    const auto csv = dir / ("maxE_" + name + ".csv");
    rc = check(vrom_rom_write(model, traj, bin.c_str(), csv.c_str()));
    if (rc == 0) rc = print_result([&](char** out) { return vrom_rom_trajectory_info(traj, out); });
  }
  vrom_rom_trajectory_free(traj);
  vrom_model_free(model);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vrom: Vlasov-Poisson full-order solver and time-windowed reduced-order models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(vrom_version()));

  Options o;
  app.add_option("--config", o.config, "JSON configuration file");
  app.add_option("--workspace", o.workspace, "workspace directory (all outputs go here)");
  app.add_option("--grid", o.grid, "grid size NX NV")->expected(2);
  app.add_option("--windows", o.windows, "number of time windows");
  app.add_option("--energy", o.energy, "POD energy fraction for both bases")->check(CLI::Range(0.0, 1.0));
  app.add_flag("--fast", o.fast, "compare against the FOM at corners and a few interior points only");
  app.add_option("--jobs", o.jobs, "parallel workers for the parameter sweep")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", o.quiet, "no progress messages");

  auto* fom = app.add_subcommand("fom", "full-order run at one parameter point");
  fom->add_option("--mu", o.mu, "T ALPHA V0")->expected(3);
  auto* train = app.add_subcommand("train", "corner training runs and the offline model build");
  auto* rom = app.add_subcommand("rom", "online reduced run at one parameter point");
  rom->add_option("--mu", o.mu, "T ALPHA V0")->expected(3);
  auto* study = app.add_subcommand("study", "full parameter study with reports");
  auto* report = app.add_subcommand("report", "rebuild reports from a study workspace");
  report->add_option("--out", o.outdir, "output directory (default <workspace>/report)");
  for (auto* sub : {fom, train, rom, study, report}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  if (!o.quiet) {
    vrom_set_log([](const char* msg, void*) { std::cerr << "[vrom] " << msg << std::endl; }, nullptr);
  }

  nlohmann::json cfg;
  try {
    fs::create_directories(o.workspace);
    cfg = load_config(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return VROM_ERR_CONFIG;
  }
  const std::string text = cfg.dump();
  const char* ws = o.workspace.c_str();

  if (*fom) return print_result([&](char** out) { return vrom_fom_run(text.c_str(), ws, out); });
  if (*train) return print_result([&](char** out) { return vrom_train(text.c_str(), ws, out); });
  if (*rom) return run_rom(o, cfg);
  if (*study) return print_result([&](char** out) { return vrom_study_run(text.c_str(), ws, out); });
  if (*report) {
    const char* dir = o.outdir.empty() ? nullptr : o.outdir.c_str();
    return print_result([&](char** out) { return vrom_report(ws, dir, out); });
  }
  return 0;
}
