#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "trace/engine.hpp"
#include "trace/io.hpp"
#include "trace/metrics.hpp"
#include "trace/rng.hpp"
#include "trace/tasks.hpp"

namespace fs = std::filesystem;
using namespace trace;
using testutil::bitwise_equal;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("trace_io_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
}

}  // namespace

TEST_CASE("quantized image round trip") {
  TempDir dir;

  // every representable byte level survives a write/read cycle exactly
  Tensor levels({1, 16, 16});
  for (int i = 0; i < 256; ++i) levels.data[static_cast<size_t>(i)] = float(i) / 255.f;
  write_pgm(dir.file("levels.pgm"), levels);
  Tensor back = read_image(dir.file("levels.pgm"));
  CHECK(bitwise_equal(back, levels));
  CHECK(slurp(dir.file("levels.pgm")).substr(0, 2) == "P5");

  // arbitrary values land on the nearest level
  Tensor arb({1, 8, 8});
  Rng rng(3);
  rng.fill_uniform(arb, 0.f, 1.f);
  write_pgm(dir.file("arb.pgm"), arb);
  Tensor q = read_image(dir.file("arb.pgm"));
  for (int64_t i = 0; i < arb.numel(); ++i) {
    const float expect = std::round(arb.data[i] * 255.f) / 255.f;
    CHECK(q.data[i] == expect);
  }

  Tensor rgb({3, 8, 8});
  rng.fill_uniform(rgb, 0.f, 1.f);
  write_image(dir.file("c.ppm"), rgb);
  CHECK(slurp(dir.file("c.ppm")).substr(0, 2) == "P6");
  Tensor rgb_q = read_image(dir.file("c.ppm"));
  CHECK(rgb_q.shape == rgb.shape);
  for (int64_t i = 0; i < rgb.numel(); ++i)
    CHECK(rgb_q.data[i] == std::round(rgb.data[i] * 255.f) / 255.f);

  CHECK_THROWS(write_pgm(dir.file("x.pgm"), rgb));          // channel mismatch
  CHECK_THROWS(write_ppm(dir.file("x.ppm"), arb));
  CHECK_THROWS(read_image(dir.file("missing.pgm")));
}

TEST_CASE("raw float states round trip bitwise") {
  TempDir dir;
  Tensor t({2, 3, 4});
  Rng rng(5);
  rng.fill_normal(t);
  t.data[0] = 0.f;
  t.data[1] = -1e-30f;
  t.data[2] = 3.0e38f;
  write_f32(dir.file("s.f32"), t);
  Tensor back = read_f32(dir.file("s.f32"));
  CHECK(back.shape == t.shape);
  CHECK(bitwise_equal(back, t));
  CHECK(slurp(dir.file("s.f32")).substr(0, 9) == "F32 2 3 4");

  // read_image dispatches on the magic
  Tensor via = read_image(dir.file("s.f32"));
  CHECK(bitwise_equal(via, t));
}

TEST_CASE("malformed image files are rejected") {
  TempDir dir;
  spit(dir.file("bad_magic.pgm"), "P9\n4 4\n255\n0123456789abcdef");
  CHECK_THROWS(read_image(dir.file("bad_magic.pgm")));

  spit(dir.file("trunc.pgm"), "P5\n4 4\n255\n0123");  // 4 of 16 pixels
  CHECK_THROWS(read_image(dir.file("trunc.pgm")));

  spit(dir.file("trunc.f32"), "F32 1 4 4\nxx");
  CHECK_THROWS(read_f32(dir.file("trunc.f32")));

  spit(dir.file("nohdr.f32"), "F32 1 -2 4\n");
  CHECK_THROWS(read_f32(dir.file("nohdr.f32")));
}

TEST_CASE("trajectory csv format") {
  TempDir dir;
  Tensor gt = synthetic_piecewise(16, 3);
  TaskSpec task;
  task.kind = TaskKind::inpaint50;
  task.seed = 7;
  Degraded d = degrade(task, gt);
  TraceConfig cfg;
  cfg.T = 3;
  cfg.K = 2;
  cfg.seed = 1;
  cfg.arch = ArchConfig{2, 4, 3, 1, 1};

  TrajectoryRecord rec = run_trace(cfg, d.y, d.op, &gt);
  write_trace_csv(dir.file("trace.csv"), rec);
  std::string body = slurp(dir.file("trace.csv"));

  std::istringstream lines(body);
  std::string line;
  REQUIRE(std::getline(lines, line));
  CHECK(line == "t,delta,beta_delta,loss_data,loss_couple,psnr,ssim");

  const std::regex efloat(R"(-?\d\.\d{8}e[+-]\d{2,3})");
  int expected_t = 2;
  int rows = 0;
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::vector<std::string> row;
    while (std::getline(cells, cell, ',')) row.push_back(cell);
    REQUIRE(row.size() == 7);
    CHECK(row[0] == std::to_string(expected_t));
    for (int c = 1; c <= 4; ++c) CHECK(std::regex_match(row[static_cast<size_t>(c)], efloat));
    const double delta = std::stod(row[1]);
    CHECK(delta ==
          doctest::Approx(rec.steps[static_cast<size_t>(2 - expected_t)].delta).epsilon(1e-7));
    --expected_t;
    ++rows;
  }
  CHECK(rows == 3);

  // without ground truth the quality columns degrade to nan literals
  TrajectoryRecord blind = run_trace(cfg, d.y, d.op, nullptr);
  write_trace_csv(dir.file("blind.csv"), blind);
  std::istringstream blines(slurp(dir.file("blind.csv")));
  std::getline(blines, line);
  while (std::getline(blines, line)) {
    std::istringstream cells(line);
    std::vector<std::string> row;
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(cell);
    CHECK(row[5] == "nan");
    CHECK(row[6] == "nan");
  }

  // ablated coupling reports an exactly zero penalty column
  TraceConfig nc = cfg;
  nc.flags.disable_coupling = true;
  TrajectoryRecord uncoupled = run_trace(nc, d.y, d.op, &gt);
  write_trace_csv(dir.file("nc.csv"), uncoupled);
  std::istringstream nlines(slurp(dir.file("nc.csv")));
  std::getline(nlines, line);
  while (std::getline(nlines, line)) {
    std::istringstream cells(line);
    std::vector<std::string> row;
    std::string cell;
    while (std::getline(cells, cell, ',')) row.push_back(cell);
    CHECK(std::stod(row[4]) == 0.0);
  }
}

TEST_CASE("manifest round trip") {
  TempDir dir;
  RunManifest m;
  m.task = "ct_sparse";
  m.input = "shepp";
  m.size = 32;
  m.T = 5;
  m.K = 7;
  m.lr = 2.5e-3;
  m.beta_hi = 9e-3;
  m.beta_lo = 7e-4;
  m.eta = 0.75;
  m.seed = 0xdeadbeef12345678ull;
  m.depth = 2;
  m.width = 8;
  m.no_coupling = true;
  m.no_perturb = true;
  m.no_inherit = true;
  m.snapshot_every = 3;
  m.views = 12;

  write_manifest(dir.file("m.json"), m);
  RunManifest r = read_manifest(dir.file("m.json"));
  CHECK(r.task == m.task);
  CHECK(r.input == m.input);
  CHECK(r.size == m.size);
  CHECK(r.T == m.T);
  CHECK(r.K == m.K);
  CHECK(r.lr == m.lr);
  CHECK(r.beta_hi == m.beta_hi);
  CHECK(r.beta_lo == m.beta_lo);
  CHECK(r.eta == m.eta);
  CHECK(r.seed == m.seed);
  CHECK(r.depth == m.depth);
  CHECK(r.width == m.width);
  CHECK(r.no_coupling == m.no_coupling);
  CHECK(r.no_perturb == m.no_perturb);
  CHECK(r.no_inherit == m.no_inherit);
  CHECK(r.snapshot_every == m.snapshot_every);
  CHECK(r.views == m.views);
  CHECK(!r.version.empty());  // stamped at write time when unset

  spit(dir.file("bad.json"), "{ not json");
  CHECK_THROWS(read_manifest(dir.file("bad.json")));
  spit(dir.file("partial.json"), "{\"task\": \"inpaint50\"}");
  CHECK_THROWS(read_manifest(dir.file("partial.json")));
  CHECK_THROWS(read_manifest(dir.file("absent.json")));
}

TEST_CASE("manifest resolves inputs, tasks, and config") {
  RunManifest m;
  m.input = "synth";
  m.size = 16;
  m.seed = 9;
  Tensor synth = load_input_image(m);
  CHECK(bitwise_equal(synth, synthetic_piecewise(16, 9)));

  m.input = "shepp";
  m.size = 32;
  CHECK(bitwise_equal(load_input_image(m), shepp_logan(32)));

  TaskSpec task = task_from_manifest(m);
  CHECK(task.kind == TaskKind::inpaint50);
  CHECK(task.seed == mix_seed(9, 0x7a11));

  m.task = "nope";
  CHECK_THROWS(task_from_manifest(m));
  m.task = "sr2";

  m.T = 4;
  m.K = 6;
  m.lr = 3e-3;
  m.no_coupling = true;
  m.depth = 2;
  m.width = 4;
  m.snapshot_every = 2;
  TraceConfig cfg = config_from_manifest(m, 1);
  CHECK(cfg.T == 4);
  CHECK(cfg.K == 6);
  CHECK(cfg.lr == 3e-3);
  CHECK(cfg.flags.disable_coupling);
  CHECK(!cfg.flags.disable_perturbation);
  CHECK(cfg.arch.depth == 2);
  CHECK(cfg.arch.width == 4);
  CHECK(cfg.arch.cin == 1);
  CHECK(cfg.snapshot_every == 2);
}

TEST_CASE("executing a manifest twice reproduces every artifact bitwise") {
  TempDir dir;
  RunManifest m;
  m.task = "inpaint50";
  m.input = "synth";
  m.size = 16;
  m.T = 3;
  m.K = 2;
  m.depth = 2;
  m.width = 4;
  m.seed = 21;

  TrajectoryRecord r1 = execute_manifest(m, dir.file("a"));
  TrajectoryRecord r2 = execute_manifest(m, dir.file("b"));
  CHECK(bitwise_equal(r1.x0, r2.x0));

  for (const char* name : {"manifest.json", "recon.pgm", "recon.f32", "trace.csv",
                           "states/state_3.f32", "states/state_0.f32"}) {
    CAPTURE(name);
    CHECK(slurp(dir.file(std::string("a/") + name)) ==
          slurp(dir.file(std::string("b/") + name)));
  }

  // recon.f32 is the final state and state_T.f32 the initialization
  Tensor recon = read_f32(dir.file("a/recon.f32"));
  CHECK(bitwise_equal(recon, r1.x0));
  Tensor xT = read_f32(dir.file("a/states/state_3.f32"));
  CHECK(bitwise_equal(xT, r1.xT));

  // the stored manifest replays to the same artifacts
  RunManifest stored = read_manifest(dir.file("a/manifest.json"));
  TrajectoryRecord r3 = execute_manifest(stored, dir.file("c"));
  CHECK(bitwise_equal(r3.x0, r1.x0));
  CHECK(slurp(dir.file("a/trace.csv")) == slurp(dir.file("c/trace.csv")));
}
