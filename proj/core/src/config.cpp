#include "nnri/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "nnri/errors.hpp"

namespace nnri {

namespace {

std::string trim(std::string s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.erase(s.begin());
  while (!s.empty() && is_space(s.back())) s.pop_back();
  return s;
}

std::vector<std::string> tokens(const std::string& value) {
  std::vector<std::string> out;
  std::string tok;
  std::stringstream ss(value);
  while (ss >> tok) {
    while (!tok.empty() && tok.back() == ',') tok.pop_back();
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

std::vector<double> number_list(const std::string& value, const std::string& where) {
  std::vector<double> out;
  for (const std::string& tok : tokens(value)) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError(where + ": cannot parse number '" + tok + "'");
    }
  }
  return out;
}

double number(const std::string& value, const std::string& where) {
  const auto list = number_list(value, where);
  if (list.size() != 1) throw ConfigError(where + ": expected a single number");
  return list[0];
}

}  // namespace

StudyConfig parse_study_config(std::istream& is, const std::string& name) {
  StudyConfig config;
  config.label = name;
  config.estimation.methods.clear();

  std::vector<double> negative_rates = negative_mar().stratum_rates;
  std::vector<double> positive_rates = positive_mar().stratum_rates;
  std::string response_kind = "mcar";
  double response_rate = 0.75;

  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = name + ":" + std::to_string(lineno);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "strata" && section != "propensities") {
        throw ConfigError(where + ": unknown section '" + section + "'");
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");

    if (section == "strata") {
      if (key == "boundaries") config.strata_boundaries = number_list(value, where);
      else if (key == "fractions") config.design.sampling_fractions = number_list(value, where);
      else throw ConfigError(where + ": unknown strata key '" + key + "'");
      continue;
    }
    if (section == "propensities") {
      if (key == "negative-mar") negative_rates = number_list(value, where);
      else if (key == "positive-mar") positive_rates = number_list(value, where);
      else throw ConfigError(where + ": unknown propensities key '" + key + "'");
      continue;
    }

    if (key == "label") config.label = value;
    else if (key == "scenario") {
      try {
        config.scenario = parse_scenario(value);
      } catch (const ConfigError& e) {
        throw ConfigError(where + ": scenario: " + e.what());
      }
    } else if (key == "population-size") config.population_size = static_cast<int>(number(value, where));
    else if (key == "items") config.num_items = static_cast<int>(number(value, where));
    else if (key == "replicates") config.replicates = static_cast<int>(number(value, where));
    else if (key == "seed") config.seed = static_cast<std::uint64_t>(number(value, where));
    else if (key == "threads") config.threads = static_cast<int>(number(value, where));
    else if (key == "response") response_kind = value;
    else if (key == "response-rate") response_rate = number(value, where);
    else if (key == "methods") {
      for (const std::string& tok : tokens(value)) {
        try {
          config.estimation.methods.push_back(parse_method(tok));
        } catch (const ConfigError& e) {
          throw ConfigError(where + ": methods: " + e.what());
        }
      }
    } else if (key == "gam-rank") config.estimation.gam.rank = static_cast<int>(number(value, where));
    else if (key == "gam-lambda-grid") config.estimation.gam.lambda_grid = static_cast<int>(number(value, where));
    else if (key == "ve-mode") {
      if (value == "full") config.estimation.ve_mode = VeMode::kFull;
      else if (value == "negligible-f") config.estimation.ve_mode = VeMode::kNegligibleF;
      else throw ConfigError(where + ": ve-mode must be full or negligible-f");
    } else if (key == "vm-mode") {
      if (value == "analytic") config.estimation.vm_mode = VmMode::kAnalytic;
      else if (value == "jackknife") config.estimation.vm_mode = VmMode::kJackknife;
      else throw ConfigError(where + ": vm-mode must be analytic or jackknife");
    } else if (key == "ci-level") config.estimation.ci_level = number(value, where);
    else throw ConfigError(where + ": unknown key '" + key + "'");
  }

  if (response_kind == "mcar") {
    config.response = mcar(response_rate);
  } else if (response_kind == "negative-mar") {
    config.response = negative_mar();
    config.response.stratum_rates = negative_rates;
  } else if (response_kind == "positive-mar") {
    config.response = positive_mar();
    config.response.stratum_rates = positive_rates;
  } else {
    throw ConfigError(name + ": response must be mcar, negative-mar or positive-mar");
  }

  if (config.estimation.methods.empty()) {
    config.estimation.methods = {VarianceMethod::kNaive, VarianceMethod::kParam2,
                                 VarianceMethod::kParam2M};
  }
  config.validate();
  return config;
}

StudyConfig load_study_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  return parse_study_config(is, path);
}

void write_study_config(std::ostream& os, const StudyConfig& config) {
  os << "label = " << config.label << '\n';
  os << "scenario = " << scenario_name(config.scenario) << '\n';
  os << "population-size = " << config.population_size << '\n';
  os << "items = " << config.num_items << '\n';
  os << "replicates = " << config.replicates << '\n';
  os << "seed = " << config.seed << '\n';
  os << "response = " << config.response.label << '\n';
  if (config.response.kind == ResponseMechanism::Kind::kMcar) {
    os << "response-rate = " << config.response.rate << '\n';
  }
  os << "methods =";
  for (std::size_t i = 0; i < config.estimation.methods.size(); ++i) {
    os << (i ? ", " : " ") << method_label(config.estimation.methods[i]);
  }
  os << '\n';
  os << "gam-rank = " << config.estimation.gam.rank << '\n';
  os << "ve-mode = "
     << (config.estimation.ve_mode == VeMode::kFull ? "full" : "negligible-f") << '\n';
  os << "vm-mode = "
     << (config.estimation.vm_mode == VmMode::kAnalytic ? "analytic" : "jackknife")
     << '\n';
  os << "\n[strata]\nboundaries =";
  const auto bounds = config.strata_boundaries.empty()
                          ? default_boundaries(config.scenario)
                          : config.strata_boundaries;
  for (double b : bounds) os << ' ' << b;
  os << "\nfractions =";
  for (double f : config.design.sampling_fractions) os << ' ' << f;
  os << "\n\n[propensities]\nnegative-mar =";
  for (double p : negative_mar().stratum_rates) os << ' ' << p;
  os << "\npositive-mar =";
  for (double p : positive_mar().stratum_rates) os << ' ' << p;
  os << '\n';
}

namespace {

struct PresetKey {
  int scenario;
  std::string mechanism;
  int population;
};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (int s = 1; s <= 3; ++s) {
    for (const char* m : {"mcar75", "mcar50", "negmar", "posmar"}) {
      for (int n : {1000, 500}) {
        names.push_back("scenario" + std::to_string(s) + "-" + m + "-n" +
                        std::to_string(n));
      }
    }
  }
  names.emplace_back("smoke");
  return names;
}

StudyConfig preset_config(const std::string& name) {
  StudyConfig config;
  config.label = name;
  config.estimation.methods = all_methods();
  config.replicates = 500;
  config.seed = 20180101;

  if (name == "smoke") {
    config.scenario = Scenario::kUniform100k;
    config.population_size = 400;
    config.replicates = 2;
    config.response = mcar(0.75);
    config.estimation.methods = {VarianceMethod::kNaive, VarianceMethod::kParam1,
                                 VarianceMethod::kParam2, VarianceMethod::kParam2M};
    return config;
  }

  std::stringstream ss(name);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '-')) parts.push_back(part);
  if (parts.size() != 3) throw ConfigError("unknown preset '" + name + "'");

  if (parts[0] == "scenario1") config.scenario = Scenario::kUniform100k;
  else if (parts[0] == "scenario2") config.scenario = Scenario::kLognormalSmall;
  else if (parts[0] == "scenario3") config.scenario = Scenario::kLognormalLarge;
  else throw ConfigError("unknown preset '" + name + "'");

  if (parts[1] == "mcar75") config.response = mcar(0.75);
  else if (parts[1] == "mcar50") config.response = mcar(0.5);
  else if (parts[1] == "negmar") config.response = negative_mar();
  else if (parts[1] == "posmar") config.response = positive_mar();
  else throw ConfigError("unknown preset '" + name + "'");

  if (parts[2] == "n1000") config.population_size = 1000;
  else if (parts[2] == "n500") config.population_size = 500;
  else throw ConfigError("unknown preset '" + name + "'");

  return config;
}

}  // namespace nnri
