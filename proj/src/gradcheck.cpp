#include "blner/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "blner/error.hpp"
#include "blner/numeric.hpp"

namespace blner {

GradCheckReport grad_check(const std::function<double(const Eigen::VectorXd&)>& loss_fn,
                           const Eigen::VectorXd& params,
                           const Eigen::VectorXd& analytic_grad, double tolerance,
                           int min_coords, std::uint64_t seed, double step) {
  if (params.size() != analytic_grad.size())
    fail(ErrorKind::shape, "gradient size disagrees with the parameter vector");
  if (params.size() == 0) fail(ErrorKind::input, "no parameters to check");
  if (!(step > 0)) fail(ErrorKind::input, "finite-difference step must be > 0");

  std::vector<Eigen::Index> coords(params.size());
  for (Eigen::Index i = 0; i < params.size(); ++i) coords[i] = i;
  if (static_cast<Eigen::Index>(min_coords) < params.size()) {
    Rng rng(seed);
    rng.shuffle(coords);
    coords.resize(min_coords);
  }

  GradCheckReport report;
  report.tolerance = tolerance;
  Eigen::VectorXd probe = params;
  for (const Eigen::Index c : coords) {
    probe[c] = params[c] + step;
    const double up = loss_fn(probe);
    probe[c] = params[c] - step;
    const double down = loss_fn(probe);
    probe[c] = params[c];
    if (!std::isfinite(up) || !std::isfinite(down))
      fail(ErrorKind::numeric, "non-finite loss while perturbing coordinate " +
                                   std::to_string(c));
    const double numeric = (up - down) / (2 * step);
    const double analytic = analytic_grad[c];
    const double rel = std::abs(analytic - numeric) /
                       std::max({1.0, std::abs(analytic), std::abs(numeric)});
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_coordinate = c;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
    ++report.coords_checked;
  }
  return report;
}

}  // namespace blner
