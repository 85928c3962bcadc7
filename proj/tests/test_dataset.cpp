#include <doctest.h>

#include <sstream>

#include "nnri/dataset.hpp"
#include "nnri/errors.hpp"
#include "nnri/response.hpp"

using namespace nnri;

TEST_SUITE_BEGIN("dataset");

TEST_CASE("population csv round-trips exactly") {
  PopulationConfig pc;
  pc.population_size = 120;
  pc.scenario = Scenario::kLognormalSmall;
  pc.seed = 10;
  const auto pop = generate_population(pc);

  std::stringstream ss;
  write_population_csv(ss, pop);
  const auto copy = read_population_csv(ss);

  REQUIRE(copy.size() == pop.size());
  REQUIRE(copy.num_items == pop.num_items);
  for (int i = 0; i < pop.size(); ++i) {
    CHECK(copy.units[i].id == pop.units[i].id);
    CHECK(copy.units[i].stratum == pop.units[i].stratum);
    CHECK(copy.units[i].x == pop.units[i].x);
    CHECK(copy.units[i].y == pop.units[i].y);
  }
  CHECK(copy.true_totals == pop.true_totals);
  CHECK(copy.strata_sizes == pop.strata_sizes);
}

TEST_CASE("dataset export and import preserve values") {
  PopulationConfig pc;
  pc.population_size = 200;
  pc.seed = 12;
  const auto pop = generate_population(pc);
  const auto sample = draw_sample(pop, default_design(), 3);
  const auto delta = draw_response(sample, mcar(0.6), 4);
  std::vector<int> cells(sample.stratum.begin(), sample.stratum.end());

  std::stringstream ss;
  write_dataset_csv(ss, sample, delta, cells);
  const auto data = read_empirical_csv(ss);
  const auto view = to_sample(data);

  REQUIRE(view.sample.size() == sample.size());
  CHECK(view.sample.x == sample.x);
  CHECK(view.sample.weight == sample.weight);
  CHECK(view.delta == delta);
  CHECK(view.sample.y == sample.y);
  for (int h = 0; h < sample.num_strata(); ++h) {
    CHECK(view.sample.stratum_size[h] ==
          doctest::Approx(sample.stratum_size[h]).epsilon(1e-9));
    CHECK(view.sample.stratum_count[h] == sample.stratum_count[h]);
  }
}

TEST_CASE("non-additive respondents are demoted to recipients") {
  std::stringstream ss;
  ss << "id,cell,stratum,weight,x,y1,y2,respondent\n";
  ss << "1,a,1,2.0,100,60,40,1\n";     // additive, stays respondent
  ss << "2,a,1,2.0,100,60,45,1\n";     // 5% off, demoted
  ss << "3,a,1,2.0,100,60,40.4,1\n";   // 0.4% off, inside the default tolerance
  ss << "4,a,1,2.0,100,,40,1\n";       // missing item, demoted
  ss << "5,a,1,2.0,100,0,0,0\n";
  const auto data = read_empirical_csv(ss);
  REQUIRE(data.size() == 5);
  CHECK(data.respondent == std::vector<std::uint8_t>{1, 0, 1, 0, 0});
  CHECK(data.demoted_rows == 2);
  CHECK(data.y(3, 0) == 0.0);  // missing item read as zero
}

TEST_CASE("nonpositive sizes are dropped and bad weights rejected") {
  std::stringstream ss;
  ss << "id,stratum,weight,x,y1,y2,respondent\n";
  ss << "1,1,2.0,0,0,0,0\n";
  ss << "2,1,2.0,-5,1,1,1\n";
  ss << "3,1,2.0,100,60,40,1\n";
  const auto data = read_empirical_csv(ss);
  CHECK(data.size() == 1);
  CHECK(data.dropped_rows == 2);
  // cell defaults to the stratum column
  CHECK(data.cell[0] == "1");

  std::stringstream bad;
  bad << "id,stratum,weight,x,y1,y2,respondent\n";
  bad << "1,1,0.5,100,60,40,1\n";
  CHECK_THROWS_AS(read_empirical_csv(bad), DataError);
}

TEST_CASE("missing required columns are data errors") {
  std::stringstream ss;
  ss << "id,stratum,x,y1,y2,respondent\n";
  ss << "1,1,100,60,40,1\n";
  CHECK_THROWS_AS(read_empirical_csv(ss), DataError);
}

TEST_CASE("sample export carries weights and the sampled flag") {
  PopulationConfig pc;
  pc.population_size = 80;
  pc.seed = 4;
  const auto pop = generate_population(pc);
  const auto sample = draw_sample(pop, default_design(), 2);
  std::stringstream ss;
  write_sample_csv(ss, sample);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "id,stratum,x,y1,y2,y3,y4,y5,weight,sampled");
  int rows = 0;
  std::string line;
  while (std::getline(ss, line)) {
    CHECK(line.substr(line.size() - 2) == ",1");
    ++rows;
  }
  CHECK(rows == sample.size());
}

TEST_CASE("imputed export carries a valid donor audit trail") {
  PopulationConfig pc;
  pc.population_size = 150;
  pc.seed = 9;
  const auto pop = generate_population(pc);
  const auto sample = draw_sample(pop, default_design(), 8);
  const auto delta = draw_response(sample, mcar(0.5), 21);
  std::vector<int> cells(sample.stratum.begin(), sample.stratum.end());
  auto assignment = match_donors(sample, delta, cells);
  assignment.kappa = compute_kappa(sample, delta, assignment);
  const auto y_final = impute(sample, delta, assignment);

  std::stringstream ss;
  write_imputed_csv(ss, sample, delta, assignment, y_final);

  // every imputed row names a respondent donor in its own cell
  std::string line;
  std::getline(ss, line);  // header
  int row = 0;
  while (std::getline(ss, line)) {
    std::stringstream ls(line);
    std::vector<std::string> fields;
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    const int imputed = std::stoi(fields[fields.size() - 2]);
    if (imputed) {
      const int donor_id = std::stoi(fields.back());
      const int donor_row = assignment.donor_of[row];
      CHECK(sample.id[donor_row] == donor_id);
      CHECK(delta[donor_row] == 1);
      CHECK(sample.stratum[donor_row] == sample.stratum[row]);
    } else {
      CHECK(fields.back().empty());
    }
    ++row;
  }
  CHECK(row == sample.size());
}

TEST_SUITE_END();
