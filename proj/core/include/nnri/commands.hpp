#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nnri/dataset.hpp"
#include "nnri/pipeline.hpp"
#include "nnri/simulation.hpp"

namespace nnri {

enum class OutputFormat { kCsv, kJson, kBoth };

struct SimulateArgs {
  std::string config_path;  // exactly one of config_path / preset
  std::string preset;
  std::string out_dir = ".";
  OutputFormat format = OutputFormat::kBoth;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<int> threads;
  std::vector<std::string> methods;  // override the configured list
  bool quiet = false;
};

StudyReport cmd_simulate(const SimulateArgs& args);

struct VarianceArgs {
  std::string data_path;
  std::string out_dir = ".";
  OutputFormat format = OutputFormat::kBoth;
  std::vector<std::string> methods;  // default: all seven
  double tolerance = 0.005;          // respondent additivity
  VeMode ve_mode = VeMode::kFull;
  VmMode vm_mode = VmMode::kAnalytic;
  int gam_rank = 10;
  std::string gam_diagnostics;  // optional JSON path for the NONPARAM fit
  bool quiet = false;
};

VarianceReport cmd_variance(const VarianceArgs& args);

struct AnalyzeReport {
  std::vector<std::string> items;
  std::vector<double> ratio_to_total;  // item totals over the size total
  VarianceReport variance;
  // variance estimate over its naive counterpart, per method and item
  std::map<VarianceMethod, std::vector<double>> variance_ratio;
};

// Full empirical summary: item shares, per-method variance-to-naive ratios
// and coefficient-of-variation tables.
AnalyzeReport cmd_analyze(const VarianceArgs& args);

struct ImputeArgs {
  std::string data_path;
  std::string output;  // empty writes <out_dir>/imputed.csv
  std::string out_dir = ".";
  double tolerance = 0.005;
  bool quiet = false;
};

void cmd_impute(const ImputeArgs& args);

// Display rule for ratio tables: one decimal, values above 1000 render as
// "XXX"; full precision stays in the machine-readable outputs.
std::string render_ratio(double value);

// Full command-line entry point; returns the process exit code
// (0 ok, 2 config error, 3 data error, 4 numeric failure).
int cli_main(int argc, const char* const* argv);

}  // namespace nnri
