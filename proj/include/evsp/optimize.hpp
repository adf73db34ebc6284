#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace evsp {

struct NelderMeadOptions {
  double f_tol = 1e-8;  // relative spread of simplex values
  double x_tol = 1e-6;  // simplex diameter in transformed coordinates
  std::size_t max_evaluations = 5000;
  double initial_step = 0.5;
};

struct OptimResult {
  Eigen::VectorXd x;
  double value = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimizer with dimension-adaptive coefficients
/// (reflection 1, expansion 1 + 2/n, contraction 0.75 - 1/(2n), shrink 1 - 1/n).
/// Non-finite objective values are treated as +infinity.
template <class Objective>
OptimResult nelder_mead(Objective&& objective, const Eigen::VectorXd& start, const NelderMeadOptions& opt = {}) {
  const Eigen::Index n = start.size();
  OptimResult result;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++result.evaluations;
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  if (n == 0) {
    result.x = start;
    result.value = eval(start);
    result.converged = true;
    return result;
  }
  const double dn = static_cast<double>(n);
  const double expand = n >= 2 ? 1.0 + 2.0 / dn : 2.0;
  const double contract = n >= 2 ? 0.75 - 0.5 / dn : 0.5;
  const double shrink = n >= 2 ? 1.0 - 1.0 / dn : 0.5;

  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1), start);
  std::vector<double> values(static_cast<std::size_t>(n + 1));
  values[0] = eval(start);
  for (Eigen::Index i = 0; i < n; ++i) {
    simplex[static_cast<std::size_t>(i + 1)][i] += opt.initial_step;
    values[static_cast<std::size_t>(i + 1)] = eval(simplex[static_cast<std::size_t>(i + 1)]);
  }
  std::vector<std::size_t> order(simplex.size());

  while (result.evaluations < opt.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second_worst = order[order.size() - 2];

    double diameter = 0.0;
    for (const auto& v : simplex) diameter = std::max(diameter, (v - simplex[best]).cwiseAbs().maxCoeff());
    const double spread = values[worst] - values[best];
    if (std::isfinite(values[worst]) && spread <= opt.f_tol * std::max(1.0, std::abs(values[best])) &&
        diameter <= opt.x_tol) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i : order)
      if (i != worst) centroid += simplex[i];
    centroid /= dn;

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[worst]);
    const double f_reflected = eval(reflected);
    if (f_reflected < values[best]) {
      const Eigen::VectorXd expanded = centroid + expand * (reflected - centroid);
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second_worst]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < values[worst];
    const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + contract * (reflected - centroid))
                                               : Eigen::VectorXd(centroid + contract * (simplex[worst] - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + shrink * (simplex[i] - simplex[best]);
      values[i] = eval(simplex[i]);
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  result.x = simplex[static_cast<std::size_t>(it - values.begin())];
  result.value = *it;
  return result;
}

/// Runs the simplex search from each start, then restarts from the incumbent
/// until a restart stops improving it. Ties keep the earliest start.
template <class Objective>
OptimResult minimize_multistart(Objective&& objective, const std::vector<Eigen::VectorXd>& starts,
                                const NelderMeadOptions& opt = {}, std::size_t max_restarts = 2) {
  OptimResult best;
  std::size_t evaluations = 0;
  for (const auto& s : starts) {
    auto r = nelder_mead(objective, s, opt);
    evaluations += r.evaluations;
    if (best.x.size() == 0 || r.value < best.value) best = r;
  }
  for (std::size_t i = 0; i < max_restarts; ++i) {
    NelderMeadOptions local = opt;
    local.initial_step = opt.initial_step * 0.2;
    auto r = nelder_mead(objective, best.x, local);
    evaluations += r.evaluations;
    const bool improved = r.value < best.value - opt.f_tol * std::max(1.0, std::abs(best.value));
    if (r.value < best.value) best = r;
    if (!improved) break;
  }
  best.evaluations = evaluations;
  return best;
}

}  // namespace evsp
