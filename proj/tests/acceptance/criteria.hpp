#pragma once

#include <string>
#include <vector>

namespace seld::acceptance {

struct Outcome {
  int number = 0;
  std::string title;
  bool pass = false;
  std::string detail;
};

Outcome check_seld_error();
Outcome check_accdoa_round_trip();
Outcome check_pit_oracle();
Outcome check_gradient_gate();
Outcome check_matcher_oracle();
Outcome check_foa_equivariance();

/// Trains the desk-scale model once and evaluates the end-to-end, threshold
/// and override criteria on its held-out scenes.
std::vector<Outcome> check_desk_scale();

}  // namespace seld::acceptance
