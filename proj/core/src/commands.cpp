#include "nnri/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nnri/config.hpp"
#include "nnri/errors.hpp"

namespace nnri {

namespace {

namespace fs = std::filesystem;

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot write '" + path.string() + "'");
  return os;
}

std::vector<VarianceMethod> parse_methods(const std::vector<std::string>& tokens) {
  std::vector<VarianceMethod> out;
  for (const std::string& tok : tokens) {
    if (tok == "all") {
      return all_methods();
    }
    out.push_back(parse_method(tok));
  }
  return out;
}

EstimationOptions estimation_options(const VarianceArgs& args) {
  EstimationOptions opt;
  opt.methods = args.methods.empty() ? all_methods() : parse_methods(args.methods);
  opt.ve_mode = args.ve_mode;
  opt.vm_mode = args.vm_mode;
  opt.gam.rank = args.gam_rank;
  return opt;
}

struct LoadedDataset {
  DatasetView view;
  std::vector<std::string> item_labels;
};

LoadedDataset load_dataset(const std::string& path, double tolerance) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open '" + path + "'");
  EmpiricalDataset data = read_empirical_csv(is, tolerance);
  LoadedDataset out{to_sample(data), data.item_labels};
  return out;
}

}  // namespace

StudyReport cmd_simulate(const SimulateArgs& args) {
  if (args.config_path.empty() == args.preset.empty()) {
    throw ConfigError("simulate needs exactly one of --config or --preset");
  }
  StudyConfig config = args.preset.empty() ? load_study_config(args.config_path)
                                           : preset_config(args.preset);
  if (args.seed) config.seed = *args.seed;
  if (args.replicates) config.replicates = *args.replicates;
  if (args.threads) config.threads = *args.threads;
  if (!args.methods.empty()) config.estimation.methods = parse_methods(args.methods);
  config.validate();

  const StudyReport report = run_study(config);

  fs::create_directories(args.out_dir);
  const fs::path base = fs::path(args.out_dir) / config.label;
  if (args.format != OutputFormat::kJson) {
    auto os = open_output(base.string() + "_report.csv");
    write_study_report_csv(os, report);
    auto cs = open_output(base.string() + "_coverage.csv");
    write_coverage_csv(cs, report);
  }
  if (args.format != OutputFormat::kCsv) {
    auto os = open_output(base.string() + "_report.json");
    write_study_report_json(os, report);
  }
  if (!args.quiet) {
    std::cout << "study " << config.label << ": " << report.replicates_completed << '/'
              << report.replicates_requested << " replicates completed";
    if (report.replicates_failed > 0) {
      std::cout << " (" << report.replicates_failed << " failed)";
    }
    std::cout << "; reports in " << args.out_dir << std::endl;
  }
  return report;
}

namespace {

struct VarianceRun {
  DatasetView view;
  ImputationOutcome outcome;
  VarianceReport report;
};

VarianceRun run_variance(const VarianceArgs& args) {
  LoadedDataset data = load_dataset(args.data_path, args.tolerance);
  VarianceRun run;
  run.view = std::move(data.view);
  run.outcome =
      run_imputation(run.view.sample, run.view.delta, run.view.cells);
  EstimationOptions options = estimation_options(args);
  std::ofstream diag;
  if (!args.gam_diagnostics.empty()) {
    const fs::path path(args.gam_diagnostics);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    diag = open_output(path);
    options.gam_diagnostics = &diag;
  }
  std::vector<MethodEstimate> estimates =
      estimate_variances(run.view.sample, run.view.delta, run.outcome, options);
  run.report = build_variance_report(run.view.sample, run.outcome,
                                     std::move(estimates), data.item_labels);
  return run;
}

void write_variance_files(const VarianceArgs& args, const VarianceReport& report) {
  fs::create_directories(args.out_dir);
  const fs::path base = fs::path(args.out_dir);
  if (args.format != OutputFormat::kJson) {
    auto os = open_output(base / "variance_report.csv");
    write_variance_report_csv(os, report);
  }
  if (args.format != OutputFormat::kCsv) {
    auto os = open_output(base / "variance_report.json");
    write_variance_report_json(os, report);
  }
}

}  // namespace

VarianceReport cmd_variance(const VarianceArgs& args) {
  VarianceRun run = run_variance(args);
  write_variance_files(args, run.report);
  if (!args.quiet) {
    std::cout << "variance report for " << args.data_path << " written to "
              << args.out_dir << std::endl;
  }
  return run.report;
}

std::string render_ratio(double value) {
  if (std::isnan(value)) return "";
  if (value > 1000.0) return "XXX";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", value);
  return buf;
}

AnalyzeReport cmd_analyze(const VarianceArgs& args) {
  VarianceArgs with_naive = args;
  with_naive.methods = args.methods.empty() ? std::vector<std::string>{"all"}
                                            : args.methods;
  {
    // the naive baseline is the ratio denominator; make sure it is present
    auto methods = parse_methods(with_naive.methods);
    if (std::find(methods.begin(), methods.end(), VarianceMethod::kNaive) ==
        methods.end()) {
      with_naive.methods.insert(with_naive.methods.begin(), "naive");
    }
  }

  VarianceRun run = run_variance(with_naive);
  const int T = run.view.sample.num_items;

  AnalyzeReport report;
  report.items = run.report.item_labels;
  report.variance = run.report;
  report.ratio_to_total.resize(T);
  for (int t = 0; t < T; ++t) {
    report.ratio_to_total[t] = run.outcome.total[t] / run.outcome.weighted_x;
  }

  const MethodEstimate* naive = nullptr;
  for (const MethodEstimate& m : run.report.methods) {
    if (m.method == VarianceMethod::kNaive) naive = &m;
  }
  for (const MethodEstimate& m : run.report.methods) {
    if (m.method == VarianceMethod::kNaive) continue;
    std::vector<double> ratio(T);
    for (int t = 0; t < T; ++t) {
      const double denom = naive->v_total[t];
      ratio[t] = denom > 0.0 ? m.v_total[t] / denom
                             : std::numeric_limits<double>::infinity();
      if (m.v_total[t] == 0.0 && denom == 0.0) {
        ratio[t] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    report.variance_ratio.emplace(m.method, std::move(ratio));
  }

  // files: full-precision tables plus the variance report
  fs::create_directories(args.out_dir);
  const fs::path base = fs::path(args.out_dir);
  write_variance_files(with_naive, run.report);
  if (args.format != OutputFormat::kJson) {
    auto os = open_output(base / "analysis_ratios.csv");
    os << "metric";
    for (const std::string& item : report.items) os << ',' << item;
    os << '\n';
    os << "R_y";
    for (double v : report.ratio_to_total) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << ',' << buf;
    }
    os << '\n';
    for (const auto& [method, ratio] : report.variance_ratio) {
      os << "R_" << method_label(method);
      for (double v : ratio) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        os << ',' << buf;
      }
      os << '\n';
    }
  }
  if (args.format != OutputFormat::kCsv) {
    nlohmann::json root;
    root["items"] = report.items;
    root["ratio_to_total"] = report.ratio_to_total;
    auto& ratios = root["variance_ratio_vs_naive"] = nlohmann::json::object();
    for (const auto& [method, ratio] : report.variance_ratio) {
      ratios[method_label(method)] = ratio;
    }
    auto os = open_output(base / "analysis.json");
    os << root.dump(2) << '\n';
  }

  if (!args.quiet) {
    // rendered tables: one decimal, large ratios masked
    std::ostringstream out;
    auto cell = [](const std::string& s) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%-14s", s.c_str());
      return std::string(buf);
    };
    auto num = [&](double v) {
      if (std::isnan(v)) return cell("");
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.1f", v);
      return cell(buf);
    };
    out << "item shares and variance ratios vs naive\n  " << cell("metric");
    for (const std::string& item : report.items) out << cell(item);
    out << "\n  " << cell("R_y");
    for (double v : report.ratio_to_total) out << num(v);
    out << '\n';
    for (const auto& [method, ratio] : report.variance_ratio) {
      out << "  " << cell(std::string("R_") + method_label(method));
      for (double v : ratio) out << cell(render_ratio(v));
      out << '\n';
    }
    out << "coefficients of variation (percent)\n";
    for (const MethodEstimate& m : run.report.methods) {
      out << "  " << cell(method_label(m.method));
      for (double v : m.cv_pct) out << num(v);
      out << '\n';
    }
    std::cout << out.str();
  }
  return report;
}

void cmd_impute(const ImputeArgs& args) {
  LoadedDataset data = load_dataset(args.data_path, args.tolerance);
  const Sample& sample = data.view.sample;

  DonorAssignment assignment = match_donors(sample, data.view.delta, data.view.cells);
  assignment.kappa = compute_kappa(sample, data.view.delta, assignment);
  const Eigen::MatrixXd y_final = impute(sample, data.view.delta, assignment);

  fs::create_directories(args.out_dir);
  const fs::path path = args.output.empty() ? fs::path(args.out_dir) / "imputed.csv"
                                            : fs::path(args.output);
  auto os = open_output(path);
  write_imputed_csv(os, sample, data.view.delta, assignment, y_final,
                    data.view.cell_names, data.item_labels);
  if (!args.quiet) {
    std::cout << "imputed dataset written to " << path.string() << std::endl;
  }
}

// ---------------------------------------------------------------------------
// argv front end
// ---------------------------------------------------------------------------

namespace {

OutputFormat parse_format(const std::string& value) {
  if (value == "csv") return OutputFormat::kCsv;
  if (value == "json") return OutputFormat::kJson;
  if (value == "both") return OutputFormat::kBoth;
  throw ConfigError("format must be csv, json or both");
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"nearest-neighbor ratio imputation for multinomial detail items"};
  app.require_subcommand(1);

  SimulateArgs sim;
  std::string sim_format = "both";
  std::uint64_t sim_seed = 0;
  int sim_replicates = 0;
  int sim_threads = -1;
  auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo study");
  simulate->add_option("--config", sim.config_path, "study config file");
  simulate->add_option("--preset", sim.preset, "built-in study preset");
  simulate->add_option("--out-dir", sim.out_dir, "output directory");
  simulate->add_option("--format", sim_format, "csv, json or both");
  simulate->add_option("--seed", sim_seed, "override the master seed");
  simulate->add_option("--replicates", sim_replicates, "override the replicate count");
  simulate->add_option("--threads", sim_threads, "worker threads (0 = hardware)");
  simulate->add_option("--method", sim.methods, "variance methods to run");
  simulate->add_flag("--quiet", sim.quiet, "suppress progress output");

  VarianceArgs analyze;
  std::string analyze_format = "both";
  std::string analyze_ve = "full";
  std::string analyze_vm = "analytic";
  auto* analyze_cmd = app.add_subcommand("analyze", "summarize a survey dataset");
  analyze_cmd->add_option("data", analyze.data_path, "dataset CSV")->required();
  analyze_cmd->add_option("--out-dir", analyze.out_dir, "output directory");
  analyze_cmd->add_option("--format", analyze_format, "csv, json or both");
  analyze_cmd->add_option("--method", analyze.methods, "variance methods to run");
  analyze_cmd->add_option("--tolerance", analyze.tolerance,
                          "respondent additivity tolerance (fraction of x)");
  analyze_cmd->add_option("--ve-mode", analyze_ve, "full or negligible-f");
  analyze_cmd->add_option("--vm-mode", analyze_vm, "analytic or jackknife");
  analyze_cmd->add_option("--gam-rank", analyze.gam_rank, "spline interior knots");
  analyze_cmd->add_option("--gam-diagnostics", analyze.gam_diagnostics,
                          "write the NONPARAM fit trace to this JSON file");
  analyze_cmd->add_flag("--quiet", analyze.quiet, "suppress table output");

  VarianceArgs variance = analyze;
  std::string variance_format = "both";
  std::string variance_ve = "full";
  std::string variance_vm = "analytic";
  auto* variance_cmd =
      app.add_subcommand("variance", "variance report for a survey dataset");
  variance_cmd->add_option("data", variance.data_path, "dataset CSV")->required();
  variance_cmd->add_option("--out-dir", variance.out_dir, "output directory");
  variance_cmd->add_option("--format", variance_format, "csv, json or both");
  variance_cmd->add_option("--method", variance.methods, "variance methods to run");
  variance_cmd->add_option("--tolerance", variance.tolerance,
                           "respondent additivity tolerance (fraction of x)");
  variance_cmd->add_option("--ve-mode", variance_ve, "full or negligible-f");
  variance_cmd->add_option("--vm-mode", variance_vm, "analytic or jackknife");
  variance_cmd->add_option("--gam-rank", variance.gam_rank, "spline interior knots");
  variance_cmd->add_option("--gam-diagnostics", variance.gam_diagnostics,
                           "write the NONPARAM fit trace to this JSON file");
  variance_cmd->add_flag("--quiet", variance.quiet, "suppress output");

  ImputeArgs impute_args;
  auto* impute_cmd = app.add_subcommand("impute", "impute a survey dataset");
  impute_cmd->add_option("data", impute_args.data_path, "dataset CSV")->required();
  impute_cmd->add_option("--out", impute_args.output, "output file");
  impute_cmd->add_option("--out-dir", impute_args.out_dir, "output directory");
  impute_cmd->add_option("--tolerance", impute_args.tolerance,
                         "respondent additivity tolerance (fraction of x)");
  impute_cmd->add_flag("--quiet", impute_args.quiet, "suppress output");

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto ve_of = [](const std::string& v) {
    if (v == "full") return VeMode::kFull;
    if (v == "negligible-f") return VeMode::kNegligibleF;
    throw ConfigError("ve-mode must be full or negligible-f");
  };
  const auto vm_of = [](const std::string& v) {
    if (v == "analytic") return VmMode::kAnalytic;
    if (v == "jackknife") return VmMode::kJackknife;
    throw ConfigError("vm-mode must be analytic or jackknife");
  };

  try {
    if (simulate->parsed()) {
      sim.format = parse_format(sim_format);
      if (simulate->count("--seed")) sim.seed = sim_seed;
      if (simulate->count("--replicates")) sim.replicates = sim_replicates;
      if (simulate->count("--threads")) sim.threads = sim_threads;
      cmd_simulate(sim);
    } else if (analyze_cmd->parsed()) {
      analyze.format = parse_format(analyze_format);
      analyze.ve_mode = ve_of(analyze_ve);
      analyze.vm_mode = vm_of(analyze_vm);
      cmd_analyze(analyze);
    } else if (variance_cmd->parsed()) {
      variance.format = parse_format(variance_format);
      variance.ve_mode = ve_of(variance_ve);
      variance.vm_mode = vm_of(variance_vm);
      cmd_variance(variance);
    } else if (impute_cmd->parsed()) {
      cmd_impute(impute_args);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << std::endl;
    return 3;
  } catch (const ReplicateFailure& e) {
    std::cerr << "numeric failure: " << e.what() << std::endl;
    return 4;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << std::endl;
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}

}  // namespace nnri
