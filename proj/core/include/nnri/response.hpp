#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nnri/design.hpp"

namespace nnri {

// Bernoulli response, either one common rate (MCAR) or a rate per stratum
// (MAR through the size variable).
struct ResponseMechanism {
  enum class Kind { kMcar, kStratumMar };

  Kind kind = Kind::kMcar;
  double rate = 1.0;                  // MCAR rate
  std::vector<double> stratum_rates;  // MAR rates, index 0 = stratum 1
  std::string label = "mcar";

  double rate_for(int stratum) const;
  void validate(int num_strata) const;
};

ResponseMechanism mcar(double rate);
// Smaller units more likely to respond: rates 0.85/0.65/0.45/0.25.
ResponseMechanism negative_mar();
// Larger units more likely to respond: rates 0.25/0.45/0.65/0.85.
ResponseMechanism positive_mar();

// Independent per-unit response indicators. A draw that leaves some stratum
// of the sample without any respondent is redrawn, at most `max_attempts`
// times; exhausting the attempts raises ReplicateFailure.
std::vector<std::uint8_t> draw_response(const Sample& s, const ResponseMechanism& m,
                                        std::uint64_t seed, int max_attempts = 100);

}  // namespace nnri
