#include "clml/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "clml/clml.hpp"
#include "clml/linalg.hpp"
#include "clml/losses.hpp"
#include "clml/model.hpp"
#include "clml/rng.hpp"
#include "clml/trainer.hpp"

namespace clml::verify {

namespace {

constexpr double kStep = 1e-5;
// Draws whose smallest singular value falls below this fraction of the
// largest are rejected: the nuclear norm has a kink at zero singular values.
constexpr double kMinConditioning = 1e-3;
constexpr std::size_t kMaxRedraws = 1000;

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.normal();
  return m;
}

LabelMatrix random_labels(Rng& rng, std::size_t n, std::size_t c) {
  LabelMatrix y(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j)
      if (rng.bernoulli(0.5)) y.set(i, j, +1);
    if (y.positives_in_row(i) == 0) y.set(i, rng.below(c), +1);
  }
  return y;
}

bool well_conditioned(const Matrix& a) {
  if (a.empty()) return true;
  const SvdResult r = svd(a);
  return r.s.back() >= kMinConditioning * r.s.front() && r.s.front() > 0.0;
}

bool spectra_well_conditioned(const Matrix& z, const LabelMatrix& labels) {
  if (!well_conditioned(z)) return false;
  for (std::size_t k = 0; k < labels.n_classes(); ++k)
    if (!well_conditioned(class_submatrix(z, labels, k))) return false;
  return true;
}

// Central difference of f along every entry of `x`.
std::vector<double> numeric_gradient(std::span<double> x, const std::function<double()>& f) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + kStep;
    const double up = f();
    x[i] = saved - kStep;
    const double down = f();
    x[i] = saved;
    g[i] = (up - down) / (2.0 * kStep);
  }
  return g;
}

double relative_max_error(std::span<const double> numeric, std::span<const double> analytic) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    diff = std::max(diff, std::abs(numeric[i] - analytic[i]));
    scale = std::max(scale, std::abs(numeric[i]));
  }
  if (scale == 0.0) return diff;
  return diff / scale;
}

void record(CheckResult& result, std::size_t trial, std::uint64_t seed, double error, bool failed,
            const std::string& detail) {
  ++result.trials;
  result.max_error = std::max(result.max_error, error);
  if (!failed) return;
  ++result.failures;
  if (result.first_failure.empty()) {
    result.first_failure = "trial " + std::to_string(trial) + " seed " + std::to_string(seed) + ": " + detail;
  }
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

}  // namespace

CheckResult check_nuclear_subgradient(const CheckOptions& opts) {
  CheckResult result{"nuclear_subgradient", 0, 0, 0, 0.0, 1e-4, {}};
  Rng rng = Rng::derive(opts.seed, result.name);
  for (std::size_t t = 0; t < opts.trials; ++t) {
    Matrix a;
    for (std::size_t draw = 0;; ++draw) {
      a = random_matrix(rng, 2 + rng.below(7), 2 + rng.below(7));
      if (well_conditioned(a) || draw >= kMaxRedraws) break;
      ++result.resampled;
    }
    Matrix g = nuclear_subgradient(a);
    if (opts.negate_gradients) g = scale(g, -1.0);
    Matrix probe = a;
    const auto numeric = numeric_gradient(probe.data(), [&] { return nuclear_norm(probe); });
    const double err = relative_max_error(numeric, g.data());
    record(result, t, opts.seed, err, !(err <= result.tolerance),
           std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " relative error " + fmt(err));
  }
  return result;
}

CheckResult check_clml_gradient(const CheckOptions& opts) {
  CheckResult result{"clml_gradient", 0, 0, 0, 0.0, 1e-3, {}};
  Rng rng = Rng::derive(opts.seed, result.name);
  for (std::size_t t = 0; t < opts.trials; ++t) {
    Matrix z;
    LabelMatrix labels;
    for (std::size_t draw = 0;; ++draw) {
      const std::size_t n = 3 + rng.below(8);
      const std::size_t d = 2 + rng.below(4);
      const std::size_t c = 2 + rng.below(3);
      z = random_matrix(rng, n, d);
      labels = random_labels(rng, n, c);
      if (spectra_well_conditioned(z, labels) || draw >= kMaxRedraws) break;
      ++result.resampled;
    }
    Matrix g = clml_gradient(z, labels);
    if (opts.negate_gradients) g = scale(g, -1.0);
    const double g_norm = frobenius_norm(g);

    // Directions nearly orthogonal to the gradient give an ill-conditioned
    // relative error; redraw those.
    Matrix dir;
    double analytic = 0.0;
    for (std::size_t draw = 0;; ++draw) {
      dir = random_matrix(rng, z.rows(), z.cols());
      analytic = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) analytic += g.data()[i] * dir.data()[i];
      if (std::abs(analytic) >= 1e-2 * g_norm * frobenius_norm(dir) || draw >= kMaxRedraws) break;
    }
    const double up = clml_loss(add(z, scale(dir, kStep)), labels);
    const double down = clml_loss(subtract(z, scale(dir, kStep)), labels);
    const double numeric = (up - down) / (2.0 * kStep);

    double err;
    if (g_norm == 0.0) {
      err = std::abs(numeric);
    } else {
      err = std::abs(numeric - analytic) / std::max(std::abs(numeric), std::abs(analytic));
    }
    record(result, t, opts.seed, err, !(err <= result.tolerance),
           "directional derivative " + fmt(numeric) + " vs analytic " + fmt(analytic));
  }
  return result;
}

CheckResult check_model_gradient(const CheckOptions& opts) {
  CheckResult result{"model_gradient", 0, 0, 0, 0.0, 1e-3, {}};
  Rng rng = Rng::derive(opts.seed, result.name);
  const std::vector<std::size_t> dims{6, 8, 4};
  const std::size_t n = 4;
  const std::size_t c = 3;

  for (std::size_t t = 0; t < opts.trials; ++t) {
    TrainConfig cfg;
    cfg.lambda = 1.0;
    cfg.loss = t % 2 == 0 ? LossKind{BceLoss{}} : LossKind{FocalLoss{2.0}};

    ModelParams params;
    Matrix x;
    LabelMatrix labels;
    for (std::size_t draw = 0;; ++draw) {
      params = ModelParams::glorot(dims, c, rng);
      for (auto& b : params.layers) for (double& v : b.bias) v = 0.1 * rng.normal();
      for (double& v : params.classifier.bias) v = 0.1 * rng.normal();
      x = random_matrix(rng, n, dims.front());
      labels = random_labels(rng, n, c);
      if (spectra_well_conditioned(embed_forward(params, x).z, labels) || draw >= kMaxRedraws) break;
      ++result.resampled;
    }

    const auto objective = [&](const ModelParams& p) {
      const ForwardCache cache = forward(p, x);
      return total_loss(cache.logits, cache.z, labels, cfg);
    };
    const ForwardCache cache = forward(params, x);
    const TotalLoss loss = total_loss(cache.logits, cache.z, labels, cfg);
    ParamGrads analytic = backward(params, cache, loss.grad_logits, loss.grad_z);

    ModelParams probe = params;
    auto probe_tensors = probe.tensors();
    const auto analytic_tensors = analytic.tensors();
    double worst = 0.0;
    for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
      const auto numeric = numeric_gradient(probe_tensors[k], [&] { return objective(probe).value; });
      std::vector<double> an(analytic_tensors[k].begin(), analytic_tensors[k].end());
      if (opts.negate_gradients)
        for (double& v : an) v = -v;
      worst = std::max(worst, relative_max_error(numeric, an));
    }
    record(result, t, opts.seed, worst, !(worst <= result.tolerance),
           "worst per-tensor relative error " + fmt(worst));
  }
  return result;
}

CheckResult check_concatenation_inequality(const CheckOptions& opts) {
  CheckResult result{"concatenation_inequality", 0, 0, 0, 0.0, 1e-8, {}};
  Rng rng = Rng::derive(opts.seed, result.name);
  for (std::size_t t = 0; t < opts.trials; ++t) {
    const std::size_t cols = 1 + rng.below(6);
    const auto block = [&] {
      Matrix m = random_matrix(rng, 1 + rng.below(6), cols);
      return scale(m, std::pow(10.0, rng.uniform(-1.0, 1.0)));
    };
    const Matrix a = block();
    const Matrix b = block();
    const Matrix c = block();
    const double lhs = nuclear_norm(vstack({a, b, c}));
    const double rhs = nuclear_norm(vstack({a, c})) + nuclear_norm(vstack({b, c}));
    const double excess = lhs - rhs;
    record(result, t, opts.seed, std::max(0.0, excess), excess > result.tolerance,
           "lhs " + fmt(lhs) + " exceeds rhs " + fmt(rhs));
  }
  return result;
}

CheckResult check_loss_nonnegativity(const CheckOptions& opts) {
  CheckResult result{"loss_nonnegativity", 0, 0, 0, 0.0, 1e-8, {}};
  Rng rng = Rng::derive(opts.seed, result.name);
  for (std::size_t t = 0; t < opts.trials; ++t) {
    const std::size_t n = 1 + rng.below(12);
    const std::size_t d = 1 + rng.below(6);
    const std::size_t c = 1 + rng.below(5);
    const Matrix z = random_matrix(rng, n, d);
    const LabelMatrix labels = random_labels(rng, n, c);
    const double loss = clml_loss(z, labels);
    record(result, t, opts.seed, std::max(0.0, -loss), loss < -result.tolerance, "loss " + fmt(loss));
  }
  return result;
}

std::vector<CheckResult> run_gradcheck(const CheckOptions& opts) {
  return {check_nuclear_subgradient(opts), check_clml_gradient(opts), check_model_gradient(opts)};
}

std::vector<CheckResult> run_selftest(const CheckOptions& opts) {
  auto results = run_gradcheck(opts);
  results.push_back(check_concatenation_inequality(opts));
  results.push_back(check_loss_nonnegativity(opts));
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::ranges::all_of(results, [](const CheckResult& r) { return r.passed(); });
}

std::string format_results(const std::vector<CheckResult>& results) {
  std::string out;
  for (const auto& r : results) {
    out += r.name + " trials " + std::to_string(r.trials) + " resampled " + std::to_string(r.resampled) +
           " failures " + std::to_string(r.failures) + " max_error " + fmt(r.max_error) + " tolerance " +
           fmt(r.tolerance) + (r.passed() ? " PASS" : " FAIL") + '\n';
    if (!r.passed()) out += "  first failure: " + r.first_failure + '\n';
  }
  out += all_passed(results) ? "PASS\n" : "FAIL\n";
  return out;
}

}  // namespace clml::verify
