#include "nnri/design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nnri/errors.hpp"

namespace nnri {

void SampleDesign::validate(int num_strata) const {
  if (static_cast<int>(sampling_fractions.size()) != num_strata) {
    throw ConfigError("design has " + std::to_string(sampling_fractions.size()) +
                      " sampling fractions for " + std::to_string(num_strata) + " strata");
  }
  for (double f : sampling_fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("sampling fractions must lie in (0,1]");
  }
}

SampleDesign default_design() { return SampleDesign{{0.1, 0.25, 0.5, 1.0}}; }

double Sample::sampling_fraction(int h) const {
  const double nh = stratum_count[h - 1];
  const double Nh = stratum_size[h - 1];
  return Nh > 0.0 ? nh / Nh : 0.0;
}

Sample draw_sample(const FinitePopulation& pop, const SampleDesign& design,
                   std::uint64_t seed) {
  const int H = pop.num_strata();
  design.validate(H);

  // population rows per stratum, in id order
  std::vector<std::vector<int>> members(H);
  for (int i = 0; i < pop.size(); ++i) {
    members[pop.units[i].stratum - 1].push_back(i);
  }

  Sample s;
  s.num_items = pop.num_items;
  s.stratum_size.assign(H, 0.0);
  s.stratum_count.assign(H, 0);

  std::vector<int> chosen;
  for (int h = 0; h < H; ++h) {
    const int Nh = static_cast<int>(members[h].size());
    s.stratum_size[h] = static_cast<double>(Nh);
    if (Nh == 0) continue;
    const double f = design.sampling_fractions[h];
    int nh;
    if (f >= 1.0) {
      nh = Nh;
    } else {
      nh = static_cast<int>(std::llround(f * Nh));
      nh = std::min(Nh, std::max(2, nh));
    }
    if (nh > Nh) throw ConfigError("allocation exceeds stratum size");
    s.stratum_count[h] = nh;

    // partial Fisher-Yates on the stratum members
    std::vector<int> idx = members[h];
    SubstreamRng rng(seed, Stream::kSampling, static_cast<std::uint64_t>(h + 1));
    for (int k = 0; k < nh; ++k) {
      const auto j = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(Nh - k)));
      std::swap(idx[k], idx[j]);
    }
    chosen.insert(chosen.end(), idx.begin(), idx.begin() + nh);
  }
  std::sort(chosen.begin(), chosen.end());

  const int n = static_cast<int>(chosen.size());
  s.id.resize(n);
  s.stratum.resize(n);
  s.x.resize(n);
  s.weight.resize(n);
  s.y.resize(n, pop.num_items);
  for (int r = 0; r < n; ++r) {
    const PopulationUnit& u = pop.units[chosen[r]];
    s.id[r] = u.id;
    s.stratum[r] = u.stratum;
    s.x[r] = u.x;
    s.weight[r] = s.stratum_size[u.stratum - 1] / s.stratum_count[u.stratum - 1];
    for (int t = 0; t < pop.num_items; ++t) s.y(r, t) = u.y[t];
  }
  return s;
}

Eigen::VectorXd ht_total(const Sample& s, const Eigen::MatrixXd& values) {
  if (values.rows() != s.size()) throw DataError("values rows do not match sample size");
  Eigen::VectorXd total = Eigen::VectorXd::Zero(values.cols());
  for (int i = 0; i < s.size(); ++i) total += s.weight[i] * values.row(i).transpose();
  return total;
}

double ht_total(const Sample& s, std::span<const double> values) {
  if (static_cast<int>(values.size()) != s.size()) {
    throw DataError("values size does not match sample size");
  }
  double total = 0.0;
  for (int i = 0; i < s.size(); ++i) total += s.weight[i] * values[i];
  return total;
}

ReplicateWeights jackknife_replicates(const Sample& s) {
  ReplicateWeights rw;
  rw.sample_size = s.size();
  for (int h = 1; h <= s.num_strata(); ++h) {
    const int nh = s.stratum_count[h - 1];
    if (nh == 0 || s.certainty(h)) continue;
    if (nh < 2) {
      throw NumericError("stratum " + std::to_string(h) +
                         " has a single sampled unit; delete-1 jackknife undefined");
    }
    const double f = s.sampling_fraction(h);
    const double factor = (nh - 1.0) / nh * (1.0 - f);
    const double rescale = nh / (nh - 1.0);
    for (int i = 0; i < s.size(); ++i) {
      if (s.stratum[i] == h) rw.replicates.push_back({i, h, factor, rescale});
    }
  }
  return rw;
}

std::vector<double> ReplicateWeights::weights(const Sample& s, int k) const {
  const Replicate& rep = replicates.at(k);
  std::vector<double> w(s.weight);
  for (int i = 0; i < s.size(); ++i) {
    if (s.stratum[i] == rep.stratum) w[i] *= rep.rescale;
  }
  w[rep.deleted] = 0.0;
  return w;
}

double replicate_variance(
    const Sample& s, const ReplicateWeights& rw,
    const std::function<double(std::span<const double>)>& statistic) {
  const double theta = statistic(s.weight);
  double acc = 0.0;
  for (std::size_t k = 0; k < rw.replicates.size(); ++k) {
    const auto w = rw.weights(s, static_cast<int>(k));
    const double d = statistic(w) - theta;
    acc += rw.replicates[k].factor * d * d;
  }
  return acc;
}

Eigen::VectorXd replicate_variance(
    const Sample& s, const ReplicateWeights& rw,
    const std::function<Eigen::VectorXd(std::span<const double>)>& statistic) {
  const Eigen::VectorXd theta = statistic(s.weight);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(theta.size());
  for (std::size_t k = 0; k < rw.replicates.size(); ++k) {
    const auto w = rw.weights(s, static_cast<int>(k));
    const Eigen::VectorXd d = statistic(w) - theta;
    acc += rw.replicates[k].factor * d.cwiseProduct(d);
  }
  return acc;
}

}  // namespace nnri
