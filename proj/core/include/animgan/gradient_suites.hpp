#pragma once

#include "animgan/ndl/gradcheck.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace animgan {

struct GradientSuiteResult {
  std::string suite;
  std::size_t point = 0;
  ndl::GradCheckReport report;
  bool passed = false;
};

inline constexpr double kGradientTolerance = 1e-4;

/// Names of the finite-difference suites in run order.
const std::vector<std::string>& gradient_suite_names();

/// One suite at one random parameter point (networks re-initialized from the seed).
GradientSuiteResult run_gradient_suite(const std::string& suite, std::uint64_t seed,
                                       std::size_t point, double tolerance = kGradientTolerance);

/// Every suite at `points` random parameter points.
std::vector<GradientSuiteResult> run_gradient_suites(std::uint64_t seed, std::size_t points = 3,
                                                     double tolerance = kGradientTolerance);

std::string gradient_result_to_json(const GradientSuiteResult& result);

}  // namespace animgan
