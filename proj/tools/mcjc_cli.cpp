// Command-line front end over the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcjc/mcjc.h"

namespace {

enum Exit { kOk = 0, kJobsFailed = 1, kConfigError = 2, kIoError = 3, kInternalError = 4 };

struct CString {
  char* p = nullptr;
  ~CString() { mcjc_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

int exit_code(int status) {
  switch (status) {
    case MCJC_OK: return kOk;
    case MCJC_ERR_JOB_FAILED: return kJobsFailed;
    case MCJC_ERR_CONFIG:
    case MCJC_ERR_INVALID_ARGUMENT:
    case MCJC_ERR_DIMENSION: return kConfigError;
    case MCJC_ERR_IO: return kIoError;
    default: return kInternalError;
  }
}

int report(const char* cmd, int status) {
  if (status != MCJC_OK) std::fprintf(stderr, "mcjc %s: %s\n", cmd, mcjc_last_error());
  return exit_code(status);
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ground states of coupled Jaynes-Cummings chains"};
  app.set_version_flag("--version", std::string(mcjc_version()));
  app.require_subcommand(1);

  std::string config, out;
  int jobs = 1;
  bool resume = false;

  auto* run = app.add_subcommand("run", "Run a single job and write its record");
  run->add_option("--config", config, "Job JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory")->required();
  run->add_flag("--resume", resume, "Reuse an existing record with the same config hash");

  auto* sweep = app.add_subcommand("sweep", "Run a coupling-ratio by size grid and aggregate it");
  sweep->add_option("--config", config, "Sweep JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Concurrent jobs")->check(CLI::PositiveNumber);
  sweep->add_flag("--resume", resume, "Skip jobs whose record already exists");

  auto* ed = app.add_subcommand("ed", "Exact diagonalization of one charge sector");
  ed->add_option("--config", config, "JSON {\"params\": {...}, \"N\": n}")->required()->check(CLI::ExistingFile);
  ed->add_option("--out", out, "Also write the record to <out>/ed/");

  auto* analyze = app.add_subcommand("analyze", "Re-run fits over the records of a sweep");
  analyze->add_option("--out", out, "Sweep output directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  std::string text;
  if (!config.empty() && !read_file(config, text)) {
    std::fprintf(stderr, "mcjc: cannot read %s\n", config.c_str());
    return kIoError;
  }

  if (*run) {
    CString rec;
    const int st = mcjc_run_job(text.c_str(), out.c_str(), resume ? 1 : 0, &rec.p);
    if (st != MCJC_OK && st != MCJC_ERR_JOB_FAILED) return report("run", st);
    const auto j = nlohmann::json::parse(rec.str());
    std::printf("%s energy=%.15g converged=%s\n", j.value("config_hash", "").c_str(), j.value("energy", 0.0),
                j.value("converged", false) ? "true" : "false");
    if (j.contains("error")) std::fprintf(stderr, "mcjc run: %s\n", j["error"].get<std::string>().c_str());
    // a recorded solver failure is not a process failure
    return kOk;
  }
  if (*sweep) {
    CString outcome;
    const int st = mcjc_run_sweep(text.c_str(), out.c_str(), jobs, resume ? 1 : 0, &outcome.p);
    if (outcome.p) std::printf("%s\n", outcome.str().c_str());
    return report("sweep", st);
  }
  if (*ed) {
    CString rec;
    const int st = mcjc_ed_record(text.c_str(), out.empty() ? nullptr : out.c_str(), &rec.p);
    if (st == MCJC_OK) std::printf("%s\n", rec.str().c_str());
    return report("ed", st);
  }
  if (*analyze) {
    CString rows;
    const int st = mcjc_analyze(out.c_str(), &rows.p);
    if (st == MCJC_OK) {
      const auto j = nlohmann::json::parse(rows.str());
      std::printf("%zu grid points; summary.csv, summary.json and plots/ written to %s\n", j.size(), out.c_str());
    }
    return report("analyze", st);
  }
  return kOk;
}
