#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

namespace hsm::verify {

struct SuiteResult {
  int id = 0;
  std::string name;
  bool ok = false;
  double seconds = 0;
  double limit = 0;  // wall-clock limit in seconds
  std::string detail;

  bool pass() const { return ok && seconds <= limit; }
  nlohmann::json to_json() const;
};

// Quick mode shrinks the parameter ranges; the full mode is the acceptance run.
SuiteResult isotropic_grid_suite(bool quick);
SuiteResult stratification_suite(bool quick);
SuiteResult tp_representatives_suite(bool quick);
SuiteResult coprime_completion_suite(bool quick);
SuiteResult sigma_eigenvalue_suite(bool quick);
SuiteResult e8_agreement_suite(bool quick);
SuiteResult presentation_coherence_suite(bool quick);
SuiteResult numberfield_identities_suite(bool quick);
SuiteResult exponent_identities_suite(bool quick);

struct Suite {
  std::string name;
  std::function<SuiteResult(bool)> run;
};

// In acceptance order.
const std::vector<Suite>& all_suites();

}  // namespace hsm::verify
