#include "trace/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "trace/metrics.hpp"
#include "trace/rng.hpp"
#include "trace/version.hpp"

namespace trace {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

int next_pnm_int(std::istream& in, const std::string& path) {
  // PNM headers allow whitespace and '#' comments between tokens.
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  if (ch == EOF || !std::isdigit(ch)) fail(path, "malformed header");
  int v = 0;
  while (ch != EOF && std::isdigit(ch)) {
    v = v * 10 + (ch - '0');
    ch = in.get();
  }
  if (ch == EOF) fail(path, "truncated header");
  return v;
}

Tensor read_pnm(std::ifstream& in, const std::string& path, int channels) {
  const int w = next_pnm_int(in, path);
  const int h = next_pnm_int(in, path);
  const int maxval = next_pnm_int(in, path);
  if (w <= 0 || h <= 0) fail(path, "bad dimensions");
  if (maxval != 255) fail(path, "only 8-bit images supported");
  const int64_t pixels = static_cast<int64_t>(h) * w;
  std::vector<unsigned char> raw(static_cast<size_t>(pixels * channels));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) fail(path, "truncated payload");
  Tensor img({channels, h, w});
  for (int64_t p = 0; p < pixels; ++p)
    for (int c = 0; c < channels; ++c)
      img.data[c * pixels + p] = static_cast<float>(raw[static_cast<size_t>(p * channels + c)]) / 255.f;
  return img;
}

void write_pnm(const std::string& path, const Tensor& img, const char* magic) {
  const int c = img.shape[0], h = img.shape[1], w = img.shape[2];
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << magic << "\n" << w << " " << h << "\n255\n";
  const int64_t pixels = static_cast<int64_t>(h) * w;
  std::vector<unsigned char> raw(static_cast<size_t>(pixels) * c);
  for (int64_t p = 0; p < pixels; ++p)
    for (int ch = 0; ch < c; ++ch) {
      const long q = std::lround(static_cast<double>(img.data[ch * pixels + p]) * 255.0);
      raw[static_cast<size_t>(p * c + ch)] =
          static_cast<unsigned char>(q < 0 ? 0 : (q > 255 ? 255 : q));
    }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(path, "write failed");
}

void format_value(std::string& row, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", v);
  row += buf;
}

void format_metric(std::string& row, double v) {
  if (std::isnan(v)) {
    row += "nan";
  } else if (std::isinf(v)) {
    row += v > 0 ? "inf" : "-inf";
  } else {
    format_value(row, v);
  }
}

}  // namespace

Tensor read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  char m0 = 0, m1 = 0;
  in.get(m0).get(m1);
  if (m0 == 'P' && m1 == '5') return read_pnm(in, path, 1);
  if (m0 == 'P' && m1 == '6') return read_pnm(in, path, 3);
  if (m0 == 'F' && m1 == '3') {
    in.close();
    return read_f32(path);
  }
  fail(path, "unsupported format (expected P5, P6, or F32)");
}

void write_pgm(const std::string& path, const Tensor& img) {
  if (img.shape.size() != 3 || img.shape[0] != 1)
    throw std::invalid_argument("write_pgm: expected [1,H,W]");
  write_pnm(path, img, "P5");
}

void write_ppm(const std::string& path, const Tensor& img) {
  if (img.shape.size() != 3 || img.shape[0] != 3)
    throw std::invalid_argument("write_ppm: expected [3,H,W]");
  write_pnm(path, img, "P6");
}

void write_image(const std::string& path, const Tensor& img) {
  if (img.shape.size() != 3) throw std::invalid_argument("write_image: expected [C,H,W]");
  if (img.shape[0] == 1)
    write_pgm(path, img);
  else if (img.shape[0] == 3)
    write_ppm(path, img);
  else
    throw std::invalid_argument("write_image: channel count must be 1 or 3");
}

Tensor read_f32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::string header;
  if (!std::getline(in, header)) fail(path, "missing header");
  int c = 0, h = 0, w = 0;
  if (std::sscanf(header.c_str(), "F32 %d %d %d", &c, &h, &w) != 3 || c <= 0 || h <= 0 ||
      w <= 0)
    fail(path, "malformed F32 header");
  Tensor t({c, h, w});
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.numel() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(t.numel() * sizeof(float)))
    fail(path, "truncated payload");
  return t;
}

void write_f32(const std::string& path, const Tensor& t) {
  if (t.shape.size() != 3) throw std::invalid_argument("write_f32: expected [C,H,W]");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "F32 " << t.shape[0] << " " << t.shape[1] << " " << t.shape[2] << "\n";
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
  if (!out) fail(path, "write failed");
}

void write_trace_csv(const std::string& path, const TrajectoryRecord& rec) {
  std::string body = "t,delta,beta_delta,loss_data,loss_couple,psnr,ssim\n";
  for (const StepLog& s : rec.steps) {
    body += std::to_string(s.t);
    body += ',';
    format_value(body, s.delta);
    body += ',';
    format_value(body, s.beta_delta);
    body += ',';
    format_value(body, s.loss_data);
    body += ',';
    format_value(body, s.loss_couple);
    body += ',';
    format_metric(body, s.psnr);
    body += ',';
    format_metric(body, s.ssim);
    body += '\n';
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << body;
  if (!out) fail(path, "write failed");
}

void write_manifest(const std::string& path, const RunManifest& m) {
  json j;
  j["task"] = m.task;
  j["input"] = m.input;
  j["size"] = m.size;
  j["T"] = m.T;
  j["K"] = m.K;
  j["lr"] = m.lr;
  j["beta_hi"] = m.beta_hi;
  j["beta_lo"] = m.beta_lo;
  j["eta"] = m.eta;
  j["seed"] = m.seed;
  j["depth"] = m.depth;
  j["width"] = m.width;
  j["no_coupling"] = m.no_coupling;
  j["no_perturb"] = m.no_perturb;
  j["no_inherit"] = m.no_inherit;
  j["snapshot_every"] = m.snapshot_every;
  j["views"] = m.views;
  j["version"] = m.version.empty() ? kVersion : m.version;
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) fail(path, "write failed");
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(path, std::string("bad JSON: ") + e.what());
  }
  RunManifest m;
  m.task = j.at("task").get<std::string>();
  m.input = j.at("input").get<std::string>();
  m.size = j.at("size").get<int>();
  m.T = j.at("T").get<int>();
  m.K = j.at("K").get<int>();
  m.lr = j.at("lr").get<double>();
  m.beta_hi = j.at("beta_hi").get<double>();
  m.beta_lo = j.at("beta_lo").get<double>();
  m.eta = j.at("eta").get<double>();
  m.seed = j.at("seed").get<uint64_t>();
  m.depth = j.at("depth").get<int>();
  m.width = j.at("width").get<int>();
  m.no_coupling = j.at("no_coupling").get<bool>();
  m.no_perturb = j.at("no_perturb").get<bool>();
  m.no_inherit = j.at("no_inherit").get<bool>();
  m.snapshot_every = j.at("snapshot_every").get<int>();
  m.views = j.at("views").get<int>();
  m.version = j.value("version", std::string(kVersion));
  return m;
}

Tensor load_input_image(const RunManifest& m) {
  if (m.input == "synth") return synthetic_piecewise(m.size, m.seed);
  if (m.input == "shepp") return shepp_logan(m.size);
  return read_image(m.input);
}

TaskSpec task_from_manifest(const RunManifest& m) {
  TaskSpec task;
  task.kind = task_from_string(m.task);
  task.seed = mix_seed(m.seed, 0x7a11);
  task.views = m.views;
  return task;
}

TraceConfig config_from_manifest(const RunManifest& m, int channels) {
  TraceConfig cfg;
  cfg.T = m.T;
  cfg.K = m.K;
  cfg.lr = m.lr;
  cfg.beta_hi = m.beta_hi;
  cfg.beta_lo = m.beta_lo;
  cfg.eta = m.eta;
  cfg.seed = m.seed;
  cfg.arch.depth = m.depth;
  cfg.arch.width = m.width;
  cfg.arch.cin = channels;
  cfg.arch.cout = channels;
  cfg.flags.disable_coupling = m.no_coupling;
  cfg.flags.disable_perturbation = m.no_perturb;
  cfg.flags.disable_inheritance = m.no_inherit;
  cfg.snapshot_every = m.snapshot_every;
  return cfg;
}

TrajectoryRecord execute_manifest(const RunManifest& m, const std::string& out_dir) {
  namespace fs = std::filesystem;
  const Tensor gt = load_input_image(m);
  const Degraded d = degrade(task_from_manifest(m), gt);
  const TraceConfig cfg = config_from_manifest(m, gt.shape[0]);
  TrajectoryRecord rec = run_trace(cfg, d.y, d.op, &gt);

  fs::create_directories(fs::path(out_dir) / "states");
  RunManifest resolved = m;
  resolved.version = kVersion;
  write_manifest((fs::path(out_dir) / "manifest.json").string(), resolved);
  write_image((fs::path(out_dir) / (gt.shape[0] == 1 ? "recon.pgm" : "recon.ppm")).string(),
              rec.x0);
  write_f32((fs::path(out_dir) / "recon.f32").string(), rec.x0);
  for (size_t i = 0; i < rec.snapshots.size(); ++i)
    write_f32((fs::path(out_dir) / "states" /
               ("state_" + std::to_string(rec.snapshot_ts[i]) + ".f32"))
                  .string(),
              rec.snapshots[i]);
  write_trace_csv((fs::path(out_dir) / "trace.csv").string(), rec);
  return rec;
}

}  // namespace trace
