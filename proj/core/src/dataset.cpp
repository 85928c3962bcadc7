#include "nnri/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "nnri/errors.hpp"

namespace nnri {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_space(s.front())) s.erase(s.begin());
  while (!s.empty() && is_space(s.back())) s.pop_back();
  return s;
}

double parse_double(const std::string& field, int line, const char* what) {
  const std::string t = trim(field);
  if (t.empty()) return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t pos = 0;
    const double v = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line) + ": cannot parse " + what + " '" +
                    t + "'");
  }
}

long long parse_int(const std::string& field, int line, const char* what) {
  const double v = parse_double(field, line, what);
  if (std::isnan(v) || v != std::floor(v)) {
    throw DataError("line " + std::to_string(line) + ": " + what + " must be an integer");
  }
  return static_cast<long long>(v);
}

}  // namespace

EmpiricalDataset read_empirical_csv(std::istream& is, double additivity_tolerance) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty dataset");
  const auto header = split_csv(line);

  int col_id = -1, col_cell = -1, col_stratum = -1, col_weight = -1, col_x = -1,
      col_resp = -1;
  std::vector<int> item_cols;
  EmpiricalDataset data;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    const std::string name = trim(header[c]);
    if (name == "id") col_id = c;
    else if (name == "cell") col_cell = c;
    else if (name == "stratum") col_stratum = c;
    else if (name == "weight") col_weight = c;
    else if (name == "x") col_x = c;
    else if (name == "respondent") col_resp = c;
    else if (name == "sampled" || name == "imputed" || name == "donor_id") continue;
    else {
      item_cols.push_back(c);
      data.item_labels.push_back(name);
    }
  }
  if (col_id < 0 || col_stratum < 0 || col_weight < 0 || col_x < 0 || col_resp < 0) {
    throw DataError("dataset header must contain id, stratum, weight, x and respondent");
  }
  if (item_cols.empty()) throw DataError("dataset has no item columns");

  const int T = static_cast<int>(item_cols.size());
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() < header.size()) {
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    const double x = parse_double(fields[col_x], lineno, "x");
    if (!(x > 0.0)) {
      ++data.dropped_rows;
      continue;
    }
    const double w = parse_double(fields[col_weight], lineno, "weight");
    if (!(w >= 1.0)) {
      throw DataError("line " + std::to_string(lineno) + ": weight must be at least 1");
    }
    data.unit_id.push_back(parse_int(fields[col_id], lineno, "id"));
    data.stratum.push_back(static_cast<int>(parse_int(fields[col_stratum], lineno, "stratum")));
    data.weight.push_back(w);
    data.x.push_back(x);
    data.cell.push_back(col_cell >= 0 ? trim(fields[col_cell])
                                      : trim(fields[col_stratum]));

    bool resp = parse_int(fields[col_resp], lineno, "respondent") != 0;
    std::vector<double> yrow(T);
    bool incomplete = false;
    double sum = 0.0;
    for (int t = 0; t < T; ++t) {
      yrow[t] = parse_double(fields[item_cols[t]], lineno, "item");
      if (std::isnan(yrow[t])) {
        incomplete = true;
        yrow[t] = 0.0;
      }
      sum += yrow[t];
    }
    if (resp && (incomplete || std::abs(sum - x) > additivity_tolerance * x)) {
      resp = false;
      ++data.demoted_rows;
    }
    data.respondent.push_back(resp ? 1 : 0);
    rows.push_back(std::move(yrow));
  }

  data.y.resize(static_cast<Eigen::Index>(rows.size()), T);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int t = 0; t < T; ++t) data.y(static_cast<Eigen::Index>(r), t) = rows[r][t];
  }
  return data;
}

DatasetView to_sample(const EmpiricalDataset& data) {
  if (data.size() == 0) throw DataError("dataset has no usable rows");
  DatasetView view;

  // dense stratum labels 1..H in sorted original order
  std::map<int, int> stratum_code;
  for (int s : data.stratum) stratum_code.emplace(s, 0);
  int next = 1;
  for (auto& [orig, code] : stratum_code) code = next++;
  const int H = static_cast<int>(stratum_code.size());

  std::map<std::string, int> cell_code;
  for (const std::string& c : data.cell) {
    if (cell_code.emplace(c, static_cast<int>(cell_code.size())).second) {
      view.cell_names.push_back(c);
    }
  }
  // emplace order is not insertion order for a map; rebuild names sorted
  view.cell_names.clear();
  int code = 0;
  for (auto& [name, id] : cell_code) {
    id = code++;
    view.cell_names.push_back(name);
  }

  Sample& s = view.sample;
  const int n = data.size();
  s.num_items = data.num_items();
  s.id.resize(n);
  s.stratum.resize(n);
  s.x = data.x;
  s.weight = data.weight;
  s.y = data.y;
  s.stratum_size.assign(H, 0.0);
  s.stratum_count.assign(H, 0);
  view.delta = data.respondent;
  view.cells.resize(n);

  for (int i = 0; i < n; ++i) {
    s.id[i] = static_cast<int>(data.unit_id[i]);
    s.stratum[i] = stratum_code.at(data.stratum[i]);
    s.stratum_size[s.stratum[i] - 1] += data.weight[i];
    s.stratum_count[s.stratum[i] - 1] += 1;
    view.cells[i] = cell_code.at(data.cell[i]);
  }
  return view;
}

void write_population_csv(std::ostream& os, const FinitePopulation& pop) {
  os << "id,stratum,x";
  for (int t = 0; t < pop.num_items; ++t) os << ",y" << t + 1;
  os << '\n';
  for (const PopulationUnit& u : pop.units) {
    os << u.id << ',' << u.stratum << ',' << fmt(u.x);
    for (int t = 0; t < pop.num_items; ++t) os << ',' << fmt(u.y[t]);
    os << '\n';
  }
}

FinitePopulation read_population_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty population file");
  const auto header = split_csv(line);
  if (header.size() < 4 || trim(header[0]) != "id" || trim(header[1]) != "stratum" ||
      trim(header[2]) != "x") {
    throw DataError("population header must start with id,stratum,x");
  }
  const int T = static_cast<int>(header.size()) - 3;

  FinitePopulation pop;
  pop.num_items = T;
  int lineno = 1;
  int max_stratum = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != T + 3) {
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(T + 3) + " fields");
    }
    PopulationUnit u;
    u.id = static_cast<int>(parse_int(fields[0], lineno, "id"));
    u.stratum = static_cast<int>(parse_int(fields[1], lineno, "stratum"));
    u.x = parse_double(fields[2], lineno, "x");
    u.y.resize(T);
    for (int t = 0; t < T; ++t) u.y[t] = parse_double(fields[3 + t], lineno, "item");
    u.nonzero_count = static_cast<int>(
        std::count_if(u.y.begin(), u.y.end(), [](double v) { return v > 0.0; }));
    max_stratum = std::max(max_stratum, u.stratum);
    pop.units.push_back(std::move(u));
  }
  pop.strata_sizes.assign(max_stratum, 0);
  pop.true_totals.assign(T, 0.0);
  for (const PopulationUnit& u : pop.units) {
    pop.strata_sizes[u.stratum - 1] += 1;
    for (int t = 0; t < T; ++t) pop.true_totals[t] += u.y[t];
  }
  return pop;
}

void write_sample_csv(std::ostream& os, const Sample& s) {
  os << "id,stratum,x";
  for (int t = 0; t < s.num_items; ++t) os << ",y" << t + 1;
  os << ",weight,sampled\n";
  for (int i = 0; i < s.size(); ++i) {
    os << s.id[i] << ',' << s.stratum[i] << ',' << fmt(s.x[i]);
    for (int t = 0; t < s.num_items; ++t) os << ',' << fmt(s.y(i, t));
    os << ',' << fmt(s.weight[i]) << ",1\n";
  }
}

namespace {

void write_row_prefix(std::ostream& os, const Sample& s, int i,
                      std::span<const int> cells,
                      const std::vector<std::string>& cell_names) {
  os << s.id[i] << ',';
  if (cells.empty()) {
    os << s.stratum[i];
  } else if (!cell_names.empty()) {
    os << cell_names[cells[i]];
  } else {
    os << cells[i];
  }
  os << ',' << s.stratum[i] << ',' << fmt(s.weight[i]) << ',' << fmt(s.x[i]);
}

void write_item_header(std::ostream& os, int T, const std::vector<std::string>& labels) {
  for (int t = 0; t < T; ++t) {
    os << ',' << (labels.empty() ? "y" + std::to_string(t + 1) : labels[t]);
  }
}

}  // namespace

void write_dataset_csv(std::ostream& os, const Sample& s,
                       std::span<const std::uint8_t> delta, std::span<const int> cells,
                       const std::vector<std::string>& cell_names) {
  os << "id,cell,stratum,weight,x";
  write_item_header(os, s.num_items, {});
  os << ",respondent\n";
  for (int i = 0; i < s.size(); ++i) {
    write_row_prefix(os, s, i, cells, cell_names);
    for (int t = 0; t < s.num_items; ++t) os << ',' << fmt(s.y(i, t));
    os << ',' << static_cast<int>(delta[i]) << '\n';
  }
}

void write_imputed_csv(std::ostream& os, const Sample& s,
                       std::span<const std::uint8_t> delta, const DonorAssignment& a,
                       const Eigen::MatrixXd& y_final,
                       const std::vector<std::string>& cell_names,
                       const std::vector<std::string>& item_labels) {
  os << "id,cell,stratum,weight,x";
  write_item_header(os, s.num_items, item_labels);
  os << ",respondent,imputed,donor_id\n";
  for (int i = 0; i < s.size(); ++i) {
    write_row_prefix(os, s, i, a.cell, cell_names);
    for (int t = 0; t < s.num_items; ++t) os << ',' << fmt(y_final(i, t));
    os << ',' << static_cast<int>(delta[i]) << ',' << (delta[i] ? 0 : 1) << ',';
    if (!delta[i] && a.donor_of[i] >= 0) os << s.id[a.donor_of[i]];
    os << '\n';
  }
}

}  // namespace nnri
