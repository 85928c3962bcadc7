#include "nnri/response.hpp"

#include "nnri/errors.hpp"

namespace nnri {

double ResponseMechanism::rate_for(int stratum) const {
  if (kind == Kind::kMcar) return rate;
  if (stratum < 1 || stratum > static_cast<int>(stratum_rates.size())) {
    throw ConfigError("no response rate for stratum " + std::to_string(stratum));
  }
  return stratum_rates[stratum - 1];
}

void ResponseMechanism::validate(int num_strata) const {
  if (kind == Kind::kMcar) {
    if (!(rate > 0.0 && rate <= 1.0)) throw ConfigError("response rate must lie in (0,1]");
    return;
  }
  if (static_cast<int>(stratum_rates.size()) < num_strata) {
    throw ConfigError("response mechanism covers " + std::to_string(stratum_rates.size()) +
                      " strata, sample has " + std::to_string(num_strata));
  }
  for (double p : stratum_rates) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("response rates must lie in (0,1]");
  }
}

ResponseMechanism mcar(double rate) {
  ResponseMechanism m;
  m.kind = ResponseMechanism::Kind::kMcar;
  m.rate = rate;
  m.label = "mcar";
  return m;
}

ResponseMechanism negative_mar() {
  ResponseMechanism m;
  m.kind = ResponseMechanism::Kind::kStratumMar;
  m.stratum_rates = {0.85, 0.65, 0.45, 0.25};
  m.label = "negative-mar";
  return m;
}

ResponseMechanism positive_mar() {
  ResponseMechanism m;
  m.kind = ResponseMechanism::Kind::kStratumMar;
  m.stratum_rates = {0.25, 0.45, 0.65, 0.85};
  m.label = "positive-mar";
  return m;
}

std::vector<std::uint8_t> draw_response(const Sample& s, const ResponseMechanism& m,
                                        std::uint64_t seed, int max_attempts) {
  m.validate(s.num_strata());
  const int n = s.size();
  std::vector<std::uint8_t> delta(n, 0);

  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    std::vector<int> respondents(s.num_strata(), 0);
    for (int i = 0; i < n; ++i) {
      SubstreamRng rng(seed, Stream::kResponse, static_cast<std::uint64_t>(s.id[i]),
                       static_cast<std::uint64_t>(attempt));
      delta[i] = rng.uniform01() < m.rate_for(s.stratum[i]) ? 1 : 0;
      if (delta[i]) respondents[s.stratum[i] - 1] += 1;
    }
    bool ok = true;
    for (int h = 0; h < s.num_strata(); ++h) {
      if (s.stratum_count[h] > 0 && respondents[h] == 0) {
        ok = false;
        break;
      }
    }
    if (ok) return delta;
  }
  throw ReplicateFailure("a stratum had no respondents after " +
                         std::to_string(max_attempts) + " response draws");
}

}  // namespace nnri
