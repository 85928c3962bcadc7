#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nnri/design.hpp"
#include "nnri/matching.hpp"
#include "nnri/population.hpp"

namespace nnri {

// Survey microdata rows as read from file. Rules applied at ingestion:
// rows with x <= 0 are dropped, a respondent whose details fail the
// additivity tolerance |sum(y) - x| <= tol * x (or carry unparseable items)
// is demoted to recipient, and weights below one are rejected.
struct EmpiricalDataset {
  std::vector<long long> unit_id;
  std::vector<std::string> cell;  // imputation cell; defaults to the stratum
  std::vector<int> stratum;
  std::vector<double> weight;
  std::vector<double> x;
  Eigen::MatrixXd y;
  std::vector<std::uint8_t> respondent;
  std::vector<std::string> item_labels;

  int dropped_rows = 0;   // nonpositive x
  int demoted_rows = 0;   // respondents treated as recipients

  int size() const { return static_cast<int>(unit_id.size()); }
  int num_items() const { return static_cast<int>(item_labels.size()); }
};

// Expected header: id,[cell,]stratum,weight,x,<item...>,respondent. Any
// column name other than the reserved ones counts as an item.
EmpiricalDataset read_empirical_csv(std::istream& is, double additivity_tolerance = 0.005);

// Sample view of a dataset: stratum sizes are recovered from the weight sums.
struct DatasetView {
  Sample sample;
  std::vector<std::uint8_t> delta;
  std::vector<int> cells;               // dense cell codes
  std::vector<std::string> cell_names;  // code -> original label
};

DatasetView to_sample(const EmpiricalDataset& data);

// id,stratum,x,y1..yT: export/import round-trips exactly.
void write_population_csv(std::ostream& os, const FinitePopulation& pop);
FinitePopulation read_population_csv(std::istream& is);

// population columns plus weight,sampled
void write_sample_csv(std::ostream& os, const Sample& s);

// empirical schema for a realized (sample, response) pair
void write_dataset_csv(std::ostream& os, const Sample& s,
                       std::span<const std::uint8_t> delta,
                       std::span<const int> cells,
                       const std::vector<std::string>& cell_names = {});

// empirical schema, final values, plus the audit columns imputed,donor_id
void write_imputed_csv(std::ostream& os, const Sample& s,
                       std::span<const std::uint8_t> delta, const DonorAssignment& a,
                       const Eigen::MatrixXd& y_final,
                       const std::vector<std::string>& cell_names = {},
                       const std::vector<std::string>& item_labels = {});

}  // namespace nnri
