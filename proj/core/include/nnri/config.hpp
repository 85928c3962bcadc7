#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nnri/simulation.hpp"

namespace nnri {

// Flat key=value study configuration with [strata] and [propensities]
// sections; '#' starts a comment. Errors carry the offending line number.
StudyConfig parse_study_config(std::istream& is, const std::string& name);
StudyConfig load_study_config(const std::string& path);

void write_study_config(std::ostream& os, const StudyConfig& config);

// Built-in study presets: scenario{1,2,3}-{mcar75,mcar50,negmar,posmar}-
// n{1000,500}, plus "smoke" for quick end-to-end runs.
std::vector<std::string> preset_names();
StudyConfig preset_config(const std::string& name);

}  // namespace nnri
