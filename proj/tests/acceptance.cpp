// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "robust_bvs/validation.hpp"

using namespace rbvs;

int main() {
  const std::uint64_t seed = ValidationOptions{}.seed;
  const ClosedFormBf cf = default_closed_form;
  const std::vector<std::pair<int, std::function<PropertyResult()>>> criteria = {
      {1, [&] { return check_closed_form_vs_oracle(cf); }},
      {2, [&] { return check_q_to_one_limit(cf); }},
      {3, [&] { return check_null_predictive_matching(seed); }},
      {4, [&] { return check_right_haar_matching(seed); }},
      {5, [&] { return check_information_consistency(cf); }},
      {6, [&] { return check_sigma_known(seed); }},
      {7, [&] { return check_student_tails(); }},
      {8, [&] { return check_model_selection_consistency(oracle::ConsistencyConfig{}); }},
      {9, [&] { return check_mc3_vs_enumeration(seed); }},
      {10, [&] { return check_invariance(seed); }},
      {11, [&] { return check_determinism(seed); }},
  };
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    const PropertyResult r = run();
    if (!r.passed) ++failures;
    std::printf("%s criterion %d (%s): observed %.6g, tolerance %.6g; %s\n", r.passed ? "PASS" : "FAIL", id,
                r.id.c_str(), r.observed, r.tolerance, r.detail.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
