// Copyright 2026 The Prism Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "prism/ddm/engine.hpp"
#include "prism/scene.hpp"

namespace prism {

using Splits = std::array<int, 3>;

/// "2,2,1", "2x2x1" or a sub-domain count ("8" -> 2x2x2). Throws
/// std::invalid_argument on malformed input.
Splits parse_splits(const std::string& text);
/// Grid for `count` sub-domains: prime factors, largest first, each given to
/// the axis with the fewest cells so far.
Splits splits_for_count(int count);
/// Items separated by ',', ';' or blanks; each item a count or NXxNYxNZ.
std::vector<Splits> parse_split_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);
std::string to_string(const Splits& s);

double median(std::vector<double> values);

struct BenchRun {
  double wall_seconds = 0;
  double cpu_seconds = 0;
};

struct BenchCell {
  int workers = 1;
  Splits splits{1, 1, 1};
  int domains = 1;
  std::vector<BenchRun> runs;
  double wall_seconds = 0;  // median over runs
  double cpu_seconds = 0;   // median over runs
  double speedup = 0;
  std::uint64_t rays_traced = 0;
  std::uint64_t crossings = 0;
  std::uint64_t probes_traced = 0;
  std::uint64_t loads = 0;
  std::uint64_t unloads = 0;
  std::uint64_t migrations = 0;
  std::uint64_t messages = 0;
};

struct BenchReport {
  std::string scene;
  int width = 0;
  int height = 0;
  int repetitions = 1;
  unsigned hardware_threads = 0;
  std::vector<int> workers;    // table columns
  std::vector<Splits> splits;  // table rows
  std::vector<BenchCell> cells;
  /// 1 worker, 1 sub-domain; part of `cells` when the matrix includes it.
  BenchCell baseline;
  double render_local_seconds = 0;

  const BenchCell* find(int workers, const Splits& splits) const;
};

/// Sets speedup = baseline wall / cell wall for every cell (baseline gets 1).
void compute_speedups(BenchReport& report);

struct BenchOptions {
  std::vector<int> workers{1};
  std::vector<Splits> splits{{1, 1, 1}};
  int repetitions = 1;
  /// Template for every cell; splits and workers are overwritten.
  ddm::DdmConfig config;
  /// Side of the square image used by the equivalence pre-check.
  int check_size = 16;
};

/// A matrix cell whose pre-check render differs from the monolithic one.
class EquivalenceError : public std::runtime_error {
 public:
  EquivalenceError(int workers, const Splits& splits, double max_diff);
  int workers;
  Splits splits;
  double max_diff;
};

/// Pre-checks every cell, then times the matrix. Throws EquivalenceError
/// before any timing if a cell fails the check.
BenchReport run_bench(const Scene& scene, const RenderSettings& settings, const BenchOptions& options);

/// Speedup table: one row per splits entry, one column per worker count.
std::string format_table(const BenchReport& report);
nlohmann::json to_json(const BenchReport& report);

}  // namespace prism
