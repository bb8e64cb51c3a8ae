#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace clml::verify {

/// Randomized property checks behind the `gradcheck` and `selftest`
/// commands. Every check draws its instances from `seed`, so a summary is
/// reproducible.
struct CheckOptions {
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  /// Harness sanity switch: flips the sign of every analytic gradient, which
  /// must make the gradient checks fail.
  bool negate_gradients = false;
};

struct CheckResult {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  /// Draws rejected for a near-singular spectrum and redrawn.
  std::size_t resampled = 0;
  /// Largest error observed (relative error, or inequality slack violation).
  double max_error = 0.0;
  double tolerance = 0.0;
  /// "trial T seed S: ..." for the first failing instance.
  std::string first_failure;

  bool passed() const { return failures == 0; }
};

/// Nuclear-norm subgradient vs central differences (step 1e-5), relative
/// max-norm error <= 1e-4.
CheckResult check_nuclear_subgradient(const CheckOptions& opts);
/// Contrastive gradient vs directional central differences, relative error <= 1e-3.
CheckResult check_clml_gradient(const CheckOptions& opts);
/// Parameter gradients of classification + contrastive loss through a small
/// model vs central differences, per-tensor relative max-norm error <= 1e-3.
CheckResult check_model_gradient(const CheckOptions& opts);
/// ||[A;B;C]||_* <= ||[A;C]||_* + ||[B;C]||_* + 1e-8.
CheckResult check_concatenation_inequality(const CheckOptions& opts);
/// Contrastive loss >= -1e-8 when every row has a positive label.
CheckResult check_loss_nonnegativity(const CheckOptions& opts);

std::vector<CheckResult> run_gradcheck(const CheckOptions& opts);
std::vector<CheckResult> run_selftest(const CheckOptions& opts);

/// One line per check plus a final PASS/FAIL line.
std::string format_results(const std::vector<CheckResult>& results);
bool all_passed(const std::vector<CheckResult>& results);

}  // namespace clml::verify
