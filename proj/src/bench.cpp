// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#include "prism/bench.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "prism/render_local.hpp"

namespace prism {

namespace {

int parse_positive(const std::string& s, const std::string& context) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || v < 1) {
    throw std::invalid_argument("expected a positive integer in '" + context + "', got '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_on(const std::string& text, const std::string& separators) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (separators.find(c) != std::string::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

Splits splits_for_count(int count) {
  if (count < 1) throw std::invalid_argument("sub-domain count must be >= 1");
  std::vector<int> primes;
  int n = count;
  for (int p = 2; p * p <= n; ++p) {
    while (n % p == 0) {
      primes.push_back(p);
      n /= p;
    }
  }
  if (n > 1) primes.push_back(n);
  std::sort(primes.rbegin(), primes.rend());
  Splits s{1, 1, 1};
  for (int p : primes) {
    auto it = std::min_element(s.begin(), s.end());
    *it *= p;
  }
  return s;
}

Splits parse_splits(const std::string& text) {
  const bool has_x = text.find_first_of("xX") != std::string::npos;
  const bool has_comma = text.find(',') != std::string::npos;
  if (!has_x && !has_comma) return splits_for_count(parse_positive(text, text));
  const auto parts = split_on(text, has_x ? "xX" : ",");
  if (parts.size() != 3) throw std::invalid_argument("splits must have three parts: '" + text + "'");
  return {parse_positive(parts[0], text), parse_positive(parts[1], text), parse_positive(parts[2], text)};
}

std::vector<Splits> parse_split_list(const std::string& text) {
  std::vector<Splits> out;
  for (const auto& item : split_on(text, ",; \t")) out.push_back(parse_splits(item));
  if (out.empty()) throw std::invalid_argument("empty splits list");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split_on(text, ",; \t")) out.push_back(parse_positive(item, text));
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::string to_string(const Splits& s) {
  return std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

const BenchCell* BenchReport::find(int w, const Splits& s) const {
  for (const auto& c : cells) {
    if (c.workers == w && c.splits == s) return &c;
  }
  return nullptr;
}

void compute_speedups(BenchReport& report) {
  report.baseline.speedup = 1.0;
  const double base = report.baseline.wall_seconds;
  for (auto& c : report.cells) {
    if (c.workers == 1 && c.splits == Splits{1, 1, 1}) {
      c.speedup = 1.0;
    } else {
      c.speedup = c.wall_seconds > 0 ? base / c.wall_seconds : 0.0;
    }
  }
}

EquivalenceError::EquivalenceError(int w, const Splits& s, double diff)
    : std::runtime_error("equivalence pre-check failed for workers=" + std::to_string(w) +
                         " splits=" + to_string(s) + " (max abs diff " + std::to_string(diff) + ")"),
      workers(w),
      splits(s),
      max_diff(diff) {}

namespace {

double cpu_seconds_now() {
  auto secs = [](const rusage& u) {
    return static_cast<double>(u.ru_utime.tv_sec + u.ru_stime.tv_sec) +
           1e-6 * static_cast<double>(u.ru_utime.tv_usec + u.ru_stime.tv_usec);
  };
  rusage self{}, children{};
  getrusage(RUSAGE_SELF, &self);
  getrusage(RUSAGE_CHILDREN, &children);
  return secs(self) + secs(children);
}

ddm::DdmConfig cell_config(const BenchOptions& o, int workers, const Splits& s) {
  ddm::DdmConfig c = o.config;
  c.workers = workers;
  c.splits = s;
  return c;
}

BenchCell time_cell(const Scene& scene, const RenderSettings& settings, const BenchOptions& o,
                    int workers, const Splits& s) {
  BenchCell cell;
  cell.workers = workers;
  cell.splits = s;
  cell.domains = s[0] * s[1] * s[2];
  const auto config = cell_config(o, workers, s);
  std::vector<double> walls, cpus;
  for (int r = 0; r < o.repetitions; ++r) {
    ddm::RunStats stats;
    const double cpu0 = cpu_seconds_now();
    const auto t0 = std::chrono::steady_clock::now();
    ddm::run_distributed(scene, config, settings, &stats);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double cpu = cpu_seconds_now() - cpu0;
    cell.runs.push_back({wall, cpu});
    walls.push_back(wall);
    cpus.push_back(cpu);
    cell.rays_traced = stats.total.rays_traced;
    cell.crossings = stats.total.crossings;
    cell.probes_traced = stats.total.probes_traced;
    cell.loads = stats.total.loads;
    cell.unloads = stats.total.unloads;
    cell.migrations = stats.migrations;
    cell.messages = stats.total.messages_sent;
  }
  cell.wall_seconds = median(walls);
  cell.cpu_seconds = median(cpus);
  spdlog::info("bench cell workers={} splits={} wall={:.3f}s cpu={:.3f}s rays={}", workers,
               to_string(s), cell.wall_seconds, cell.cpu_seconds, cell.rays_traced);
  return cell;
}

}  // namespace

BenchReport run_bench(const Scene& scene, const RenderSettings& settings, const BenchOptions& o) {
  if (o.repetitions < 1) throw ddm::ConfigError("repetitions must be >= 1");
  if (o.workers.empty() || o.splits.empty()) throw ddm::ConfigError("empty benchmark matrix");

  // Equivalence pre-check on a small copy of the view.
  {
    Scene small = scene;
    Camera cam = small.camera();
    cam.width = o.check_size;
    cam.height = o.check_size;
    small.set_camera(cam);
    const SpectralImage reference = render(small, settings);
    for (const Splits& s : o.splits) {
      for (int w : o.workers) {
        const SpectralImage img = ddm::run_distributed(small, cell_config(o, w, s), settings);
        const double diff = max_abs_difference(img, reference);
        const bool ok = o.config.ordered ? img == reference : diff <= 1e-4;
        if (!ok) throw EquivalenceError(w, s, diff);
      }
    }
    spdlog::info("equivalence pre-check passed for {} cells", o.splits.size() * o.workers.size());
  }

  BenchReport report;
  report.width = scene.camera().width;
  report.height = scene.camera().height;
  report.repetitions = o.repetitions;
  report.hardware_threads = std::thread::hardware_concurrency();
  report.workers = o.workers;
  report.splits = o.splits;

  {
    std::vector<double> t;
    for (int r = 0; r < o.repetitions; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      render(scene, settings);
      t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    report.render_local_seconds = median(t);
  }

  for (const Splits& s : o.splits) {
    for (int w : o.workers) report.cells.push_back(time_cell(scene, settings, o, w, s));
  }
  if (const BenchCell* b = report.find(1, {1, 1, 1})) {
    report.baseline = *b;
  } else {
    report.baseline = time_cell(scene, settings, o, 1, {1, 1, 1});
  }
  compute_speedups(report);
  return report;
}

std::string format_table(const BenchReport& r) {
  std::ostringstream os;
  os << "Speedup with respect to the number of workers (columns) and sub-domains (rows)\n";
  os << "baseline: 1 worker, 1 sub-domain, wall " << std::fixed << std::setprecision(3)
     << r.baseline.wall_seconds << " s; render_local " << r.render_local_seconds << " s\n\n";
  os << std::left << std::setw(16) << "sub-domains";
  for (int w : r.workers) os << std::right << std::setw(10) << w;
  os << "\n";
  for (const Splits& s : r.splits) {
    const std::string label = std::to_string(s[0] * s[1] * s[2]) + " (" + to_string(s) + ")";
    os << std::left << std::setw(16) << label;
    for (int w : r.workers) {
      const BenchCell* c = r.find(w, s);
      os << std::right << std::setw(10) << std::setprecision(2) << (c ? c->speedup : 0.0);
    }
    os << "\n";
  }
  os << "\nper-cell detail (median of " << r.repetitions << ")\n";
  os << std::left << std::setw(10) << "workers" << std::setw(10) << "splits" << std::right
     << std::setw(10) << "wall s" << std::setw(10) << "cpu s" << std::setw(9) << "speedup"
     << std::setw(11) << "rays" << std::setw(10) << "crossings" << std::setw(7) << "loads"
     << std::setw(9) << "unloads" << "\n";
  for (const auto& c : r.cells) {
    os << std::left << std::setw(10) << c.workers << std::setw(10) << to_string(c.splits) << std::right
       << std::setw(10) << std::setprecision(3) << c.wall_seconds << std::setw(10) << c.cpu_seconds
       << std::setw(9) << std::setprecision(2) << c.speedup << std::setw(11) << c.rays_traced
       << std::setw(10) << c.crossings << std::setw(7) << c.loads << std::setw(9) << c.unloads << "\n";
  }
  return os.str();
}

nlohmann::json to_json(const BenchReport& r) {
  using nlohmann::json;
  auto cell_json = [](const BenchCell& c) {
    json runs = json::array();
    for (const auto& run : c.runs) runs.push_back({{"wall_seconds", run.wall_seconds}, {"cpu_seconds", run.cpu_seconds}});
    return json{{"workers", c.workers},
                {"splits", c.splits},
                {"domains", c.domains},
                {"wall_seconds", c.wall_seconds},
                {"cpu_seconds", c.cpu_seconds},
                {"speedup", c.speedup},
                {"rays_traced", c.rays_traced},
                {"crossings", c.crossings},
                {"probes_traced", c.probes_traced},
                {"loads", c.loads},
                {"unloads", c.unloads},
                {"migrations", c.migrations},
                {"messages", c.messages},
                {"runs", runs}};
  };
  json cells = json::array();
  for (const auto& c : r.cells) cells.push_back(cell_json(c));
  json splits = json::array();
  for (const auto& s : r.splits) splits.push_back(s);
  return json{{"scene", r.scene},
              {"width", r.width},
              {"height", r.height},
              {"repetitions", r.repetitions},
              {"hardware_threads", r.hardware_threads},
              {"workers", r.workers},
              {"splits", splits},
              {"render_local_seconds", r.render_local_seconds},
              {"baseline", cell_json(r.baseline)},
              {"cells", cells}};
}

}  // namespace prism
