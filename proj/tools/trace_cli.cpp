#include <clocale>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trace/engine.hpp"
#include "trace/io.hpp"
#include "trace/metrics.hpp"
#include "trace/prox_oracle.hpp"
#include "trace/version.hpp"

namespace fs = std::filesystem;

namespace {

struct RunArgs {
  trace::RunManifest m;
  std::string out_dir = "run_out";
  std::string from_manifest;
};

void add_run_flags(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--task", a.m.task,
                  "inpaint50|inpaint70|sr2|sr4|motion|nonlinear|ct_sparse|ct_limited");
  cmd->add_option("--input", a.m.input, "image path, or builtin 'synth'/'shepp'");
  cmd->add_option("--size", a.m.size, "side length for builtin inputs");
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--T", a.m.T, "trajectory states");
  cmd->add_option("--K", a.m.K, "inner optimizer steps per state");
  cmd->add_option("--lr", a.m.lr, "Adam learning rate");
  cmd->add_option("--beta-hi", a.m.beta_hi, "coupling weight at t=T-1");
  cmd->add_option("--beta-lo", a.m.beta_lo, "coupling weight at t=0");
  cmd->add_option("--eta", a.m.eta, "perturbation scale");
  cmd->add_option("--seed", a.m.seed, "master seed");
  cmd->add_option("--depth", a.m.depth, "network levels");
  cmd->add_option("--width", a.m.width, "network channels");
  cmd->add_option("--views", a.m.views, "CT view count override");
  cmd->add_option("--snapshot-every", a.m.snapshot_every, "state snapshot cadence");
  cmd->add_flag("--no-coupling", a.m.no_coupling, "drop the temporal coupling term");
  cmd->add_flag("--no-perturb", a.m.no_perturb, "disable state perturbation");
  cmd->add_flag("--no-inherit", a.m.no_inherit, "fresh weights at every step");
}

int do_run(const RunArgs& a) {
  trace::RunManifest m = a.m;
  if (!a.from_manifest.empty()) m = trace::read_manifest(a.from_manifest);
  const trace::TrajectoryRecord rec = trace::execute_manifest(m, a.out_dir);
  const trace::StepLog& last = rec.steps.back();
  std::printf("recon written to %s\n", a.out_dir.c_str());
  std::printf("final: psnr=%.4f ssim=%.5f delta=%.6e loss_data=%.6e\n", last.psnr, last.ssim,
              last.delta, last.loss_data);
  return 0;
}

int do_verify(int n, int trials, uint64_t seed, bool force_fail, const std::string& csv_path) {
  std::vector<trace::CertRow> rows = trace::run_theorem_certificates(n, trials, seed);
  if (force_fail)
    rows.push_back({"sabotage", "forced-failure", 1.0, 0.0, false});

  std::string csv = "instance,bound,lhs,rhs,pass\n";
  const trace::CertRow* first_fail = nullptr;
  int passed = 0;
  for (const trace::CertRow& r : rows) {
    char buf[64];
    csv += r.instance + "," + r.bound + ",";
    std::snprintf(buf, sizeof buf, "%.12e", r.lhs);
    csv += buf;
    csv += ",";
    std::snprintf(buf, sizeof buf, "%.12e", r.rhs);
    csv += buf;
    csv += r.pass ? ",1\n" : ",0\n";
    if (r.pass)
      ++passed;
    else if (!first_fail)
      first_fail = &r;
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::binary);
    out << csv;
    if (!out) {
      std::fprintf(stderr, "cannot write %s\n", csv_path.c_str());
      return 1;
    }
  } else {
    std::fputs(csv.c_str(), stdout);
  }
  std::fprintf(stderr, "certificates: %d/%zu passed\n", passed, rows.size());
  if (first_fail) {
    std::fprintf(stderr, "FAILED %s %s: lhs=%.12e rhs=%.12e\n", first_fail->instance.c_str(),
                 first_fail->bound.c_str(), first_fail->lhs, first_fail->rhs);
    return 1;
  }
  return 0;
}

struct SweepArgs {
  RunArgs base;
  int budget = 6000;
  std::vector<int> t_list{10, 20, 30, 40, 50, 60};
  std::vector<std::string> betas;  // "hi:lo" entries; "0:0" means no coupling
  bool plan_only = false;
};

int do_sweep(const SweepArgs& s) {
  struct Row {
    trace::RunManifest m;
    std::string label;
  };
  std::vector<Row> rows;
  if (!s.betas.empty()) {
    for (const std::string& spec : s.betas) {
      const size_t colon = spec.find(':');
      if (colon == std::string::npos)
        throw CLI::ValidationError("--betas", "expected hi:lo, got " + spec);
      trace::RunManifest m = s.base.m;
      m.beta_hi = std::stod(spec.substr(0, colon));
      m.beta_lo = std::stod(spec.substr(colon + 1));
      if (m.beta_hi == 0.0 && m.beta_lo == 0.0) {
        m.no_coupling = true;
      } else if (m.beta_hi < m.beta_lo || m.beta_lo <= 0.0) {
        throw CLI::ValidationError("--betas", "need hi >= lo > 0 (or 0:0): " + spec);
      }
      rows.push_back({m, "beta:" + spec});
    }
  } else {
    for (int t : s.t_list) {
      if (t <= 0 || s.budget % t)
        throw CLI::ValidationError("--T-list",
                                   "budget " + std::to_string(s.budget) +
                                       " not divisible by T=" + std::to_string(t));
      trace::RunManifest m = s.base.m;
      m.T = t;
      m.K = s.budget / t;
      rows.push_back({m, "budget:" + std::to_string(t) + "x" + std::to_string(s.budget / t)});
    }
  }

  fs::create_directories(s.base.out_dir);
  std::string csv = "config,T,K,beta_hi,beta_lo,psnr,ssim,mean_delta\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    const trace::RunManifest& m = rows[i].m;
    char head[160];
    std::snprintf(head, sizeof head, "%s,%d,%d,%.8e,%.8e", rows[i].label.c_str(), m.T, m.K,
                  m.beta_hi, m.beta_lo);
    if (s.plan_only) {
      csv += head;
      csv += ",,,\n";
      continue;
    }
    const std::string dir = s.base.out_dir + "/cfg_" + std::to_string(i);
    const trace::TrajectoryRecord rec = trace::execute_manifest(m, dir);
    double mean_delta = 0;
    for (const trace::StepLog& st : rec.steps) mean_delta += st.delta;
    mean_delta /= static_cast<double>(rec.steps.size());
    char tail[128];
    std::snprintf(tail, sizeof tail, ",%.8e,%.8e,%.8e\n", rec.steps.back().psnr,
                  rec.steps.back().ssim, mean_delta);
    csv += head;
    csv += tail;
    std::printf("%s done: psnr=%.3f\n", rows[i].label.c_str(), rec.steps.back().psnr);
  }
  const std::string csv_path = s.base.out_dir + "/sweep.csv";
  std::ofstream out(csv_path, std::ios::binary);
  out << csv;
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", csv_path.c_str());
    return 1;
  }
  std::printf("sweep table: %s\n", csv_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_NUMERIC, "C");
  CLI::App app{"trajectory-constrained reconstruction for imaging inverse problems"};
  app.set_version_flag("--version", trace::kVersion);
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "reconstruct one instance");
  add_run_flags(run, run_args);
  run->add_option("--from-manifest", run_args.from_manifest,
                  "load a stored manifest instead of flags");

  int v_n = 16, v_trials = 100;
  uint64_t v_seed = 0;
  bool v_force_fail = false;
  std::string v_csv;
  CLI::App* verify = app.add_subcommand("verify", "numerical certificates");
  CLI::App* theorems = verify->add_subcommand("theorems", "prox/trajectory bound certificates");
  theorems->add_option("--n", v_n, "instance dimension");
  theorems->add_option("--trials", v_trials, "seeded instances per certificate");
  theorems->add_option("--seed", v_seed, "seed");
  theorems->add_option("--csv", v_csv, "write the certificate table here (default stdout)");
  theorems->add_flag("--force-fail", v_force_fail, "inject a failing certificate (test hook)");
  verify->require_subcommand(1);

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "budget or beta-schedule sweeps");
  add_run_flags(sweep, sweep_args.base);
  sweep->add_option("--budget", sweep_args.budget, "total optimizer steps N = T*K");
  sweep->add_option("--T-list", sweep_args.t_list, "T values (K = N/T)")->delimiter(',');
  sweep->add_option("--betas", sweep_args.betas, "beta schedules as hi:lo (0:0 = uncoupled)")
      ->delimiter(';');
  sweep->add_flag("--plan-only", sweep_args.plan_only, "emit the configuration table only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return do_run(run_args);
    if (verify->parsed()) return do_verify(v_n, v_trials, v_seed, v_force_fail, v_csv);
    if (sweep->parsed()) return do_sweep(sweep_args);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
