// nlmg: command-line driver for the multilevel nonlinear eigensolver.
#include "nlmg/nlmg.h"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitCheck = 4;

bool quiet() {
  const char* v = std::getenv("NLMG_LOG");
  if (!v) return false;
  const std::string s(v);
  return s == "quiet" || s == "off" || s == "0";
}

int exit_code(nlmg_status s) {
  switch (s) {
    case NLMG_OK: return kExitOk;
    case NLMG_ERR_CONFIG: return kExitConfig;
    case NLMG_ERR_CHECK: return kExitCheck;
    default: return kExitSolver;
  }
}

struct Owned {
  char* p = nullptr;
  ~Owned() { nlmg_string_free(p); }
};

std::string fmt(double v, const char* spec = "%.12g") {
  if (!std::isfinite(v)) return "-";
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void print_summary(const std::string& name, const nlmg_report* rep, std::ostream& os) {
  os << name << "\n";
  os << "  k     n_dofs         lambda  varpi  v-cycles   err_lambda   rate_lambda  rate_h1\n";
  for (size_t i = 0; i < nlmg_report_level_count(rep); ++i) {
    nlmg_level_row r;
    if (nlmg_report_level(rep, i, &r) != NLMG_OK) continue;
    const double lam = std::isfinite(r.lambda) ? r.lambda : r.lambda_direct;
    char line[256];
    std::snprintf(line, sizeof line, "%3d %10d %16s %6d %9d %12s %12s %9s\n", r.k, r.n_dofs, fmt(lam).c_str(),
                  r.varpi, r.v_cycles, fmt(r.err_lambda, "%.3e").c_str(), fmt(r.rate_lambda, "%.4f").c_str(),
                  fmt(r.rate_h1, "%.4f").c_str());
    os << line;
  }
  for (size_t i = 0; i < nlmg_report_warning_count(rep); ++i) os << "  warning: " << nlmg_report_warning(rep, i) << "\n";
  os << "  wall time: " << fmt(nlmg_report_wall_time(rep), "%.3f") << " s\n";
}

// Runs one configured study; returns the exit code. Output goes to `log`.
int run_one(nlmg_config* cfg, const std::string& name, bool check, std::ostream& log) {
  nlmg_report* rep = nullptr;
  const nlmg_status st = nlmg_run(cfg, &rep);
  if (st != NLMG_OK) {
    log << name << ": solver failure: " << nlmg_last_error() << "\n";
    return exit_code(st);
  }
  int code = kExitOk;
  const std::string out = nlmg_config_output(cfg);
  if (nlmg_report_write(rep, out.c_str()) != NLMG_OK) {
    log << name << ": " << nlmg_last_error() << "\n";
    code = kExitSolver;
  }
  if (!quiet()) print_summary(name + " -> " + out, rep, log);
  if (code == kExitOk && check) {
    Owned failures;
    if (nlmg_report_check(rep, &failures.p) != NLMG_OK) {
      log << name << ": check failed\n" << (failures.p ? failures.p : "");
      code = kExitCheck;
    } else if (!quiet()) {
      log << name << ": check passed\n";
    }
  }
  nlmg_report_free(rep);
  return code;
}

nlmg_config* load(const std::string& path, const std::string& mode, std::ostream& err) {
  nlmg_config* cfg = nullptr;
  if (nlmg_config_load(path.c_str(), &cfg) != NLMG_OK) {
    err << path << ": config error: " << nlmg_last_error() << "\n";
    return nullptr;
  }
  if (!mode.empty() && nlmg_config_set_mode(cfg, mode.c_str()) != NLMG_OK) {
    err << path << ": config error: " << nlmg_last_error() << "\n";
    nlmg_config_free(cfg);
    return nullptr;
  }
  return cfg;
}

int cmd_run(const std::string& path, const std::string& mode, bool check, const std::string& out) {
  nlmg_config* cfg = load(path, mode, std::cerr);
  if (!cfg) return kExitConfig;
  if (!out.empty()) nlmg_config_set_output(cfg, out.c_str());
  std::ostringstream log;
  const int code = run_one(cfg, path, check, log);
  (code == kExitOk ? std::cout : std::cerr) << log.str();
  nlmg_config_free(cfg);
  return code;
}

int cmd_sweep(const std::string& dir, const std::string& mode, bool check, const std::string& out_root, int jobs) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(dir, ec))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  if (ec) {
    std::cerr << dir << ": " << ec.message() << "\n";
    return kExitConfig;
  }
  if (files.empty()) {
    std::cerr << dir << ": no .json configs found\n";
    return kExitConfig;
  }
  std::sort(files.begin(), files.end());

  // validate everything before running anything
  std::vector<nlmg_config*> cfgs;
  bool bad = false;
  for (const fs::path& f : files) {
    nlmg_config* c = load(f.string(), mode, std::cerr);
    if (!c) bad = true;
    cfgs.push_back(c);
  }
  if (bad) {
    for (nlmg_config* c : cfgs) nlmg_config_free(c);
    return kExitConfig;
  }
  for (size_t i = 0; i < files.size(); ++i) {
    const std::string o = (fs::path(out_root) / files[i].stem()).string();
    nlmg_config_set_output(cfgs[i], o.c_str());
  }

  std::vector<int> codes(files.size(), kExitOk);
  std::vector<std::string> logs(files.size());
  std::atomic<size_t> next{0};
  std::mutex io;
  const auto worker = [&] {
    for (size_t i; (i = next.fetch_add(1)) < files.size();) {
      std::ostringstream log;
      codes[i] = run_one(cfgs[i], files[i].filename().string(), check, log);
      std::lock_guard<std::mutex> lock(io);
      (codes[i] == kExitOk ? std::cout : std::cerr) << log.str() << std::flush;
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const size_t n_workers = std::min<size_t>(files.size(), jobs > 0 ? static_cast<size_t>(jobs) : hw);
  std::vector<std::thread> pool;
  for (size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  for (nlmg_config* c : cfgs) nlmg_config_free(c);

  int code = kExitOk;
  for (int c : codes)
    if (c == kExitSolver || (c == kExitCheck && code == kExitOk)) code = c;
  return code;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int cmd_rates(const std::string& path, int beta) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << path << ": cannot open\n";
    return kExitConfig;
  }
  std::string line;
  if (!std::getline(in, line)) {
    std::cerr << path << ": empty file\n";
    return kExitConfig;
  }
  const std::vector<std::string> header = split(line);
  std::vector<size_t> cols;
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i].rfind("err_", 0) == 0) cols.push_back(i);
  const auto k_col = std::find(header.begin(), header.end(), "k");
  if (cols.empty() || k_col == header.end()) {
    std::cerr << path << ": no k or err_* columns\n";
    return kExitConfig;
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line))
    if (!line.empty()) rows.push_back(split(line));

  std::cout << "column            k   rate\n";
  for (size_t c : cols) {
    std::vector<double> errs;
    std::vector<std::string> ks;
    for (const auto& r : rows) {
      if (c >= r.size() || r[c].empty()) continue;
      errs.push_back(std::strtod(r[c].c_str(), nullptr));
      ks.push_back(r[static_cast<size_t>(k_col - header.begin())]);
    }
    if (errs.size() < 2) continue;
    std::vector<double> rates(errs.size() - 1);
    if (nlmg_compute_rates(errs.data(), errs.size(), beta, rates.data()) != NLMG_OK) {
      std::cerr << path << ": " << header[c] << ": " << nlmg_last_error() << "\n";
      return kExitConfig;
    }
    for (size_t i = 0; i < rates.size(); ++i) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "%-16s %2s  %.6f\n", header[c].c_str(), ks[i + 1].c_str(), rates[i]);
      std::cout << buf;
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilevel correction solver for nonlinear eigenvalue problems"};
  app.set_version_flag("--version", std::string(nlmg_version()));
  app.require_subcommand(1);

  std::string config, mode, out, configs_dir, csv;
  bool check = false;
  int beta = 2, jobs = 0;
  const auto modes = CLI::IsMember({"scheme", "direct", "both"});

  CLI::App* run = app.add_subcommand("run", "Run one configured study");
  run->add_option("--config", config, "JSON config file")->required();
  run->add_option("--mode", mode, "scheme, direct or both")->check(modes);
  run->add_flag("--check", check, "Verify rates, varpi and scheme/direct gaps");
  run->add_option("--out", out, "Output directory (overrides the config)");

  CLI::App* sweep = app.add_subcommand("sweep", "Run every *.json config in a directory concurrently");
  sweep->add_option("--configs", configs_dir, "Directory of JSON configs")->required();
  sweep->add_option("--mode", mode, "scheme, direct or both")->check(modes);
  sweep->add_flag("--check", check, "Verify each report");
  std::string sweep_out = "sweep_out";
  sweep->add_option("--out", sweep_out, "Root directory; each config writes to <root>/<name>");
  sweep->add_option("--jobs", jobs, "Concurrent runs (default: hardware threads)");

  CLI::App* rates = app.add_subcommand("rates", "Convergence rates from a table.csv");
  rates->add_option("--csv", csv, "table.csv from a previous run")->required();
  rates->add_option("--beta", beta, "Refinement factor")->check(CLI::Range(2, 16));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*run) return cmd_run(config, mode, check, out);
  if (*sweep) return cmd_sweep(configs_dir, mode, check, sweep_out, jobs);
  return cmd_rates(csv, beta);
}
