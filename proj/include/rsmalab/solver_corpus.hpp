#pragma once

#include <string>
#include <vector>

#include "rsmalab/slsqp.hpp"

namespace rsmalab {

/// Analytic test problem with a known optimum.
struct CorpusProblem {
  std::string name;
  NlpProblem problem;  // carries analytic gradients
  Vector start;
  double optimal_value = 0.0;
  Vector optimal_point;
};

/// The ten-problem regression corpus: active bounds, Rosenbrock, symmetric
/// water-filling, hand-KKT QPs and a few Hock-Schittkowski problems.
std::vector<CorpusProblem> regression_corpus();

/// Same problem with gradients removed so the solver differentiates numerically.
NlpProblem without_gradients(NlpProblem problem);

}  // namespace rsmalab
