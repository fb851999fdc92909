#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

namespace blner {

struct GradCheckReport {
  double max_rel_error = 0;
  Eigen::Index worst_coordinate = -1;
  double worst_analytic = 0;
  double worst_numeric = 0;
  int coords_checked = 0;
  double tolerance = 0;

  bool pass() const { return max_rel_error < tolerance; }
};

// Central finite differences against the supplied analytic gradient on
// >= min_coords randomly sampled coordinates (all of them when the parameter
// vector is smaller). Error per coordinate is
// |analytic - numeric| / max(1, |analytic|, |numeric|). A non-finite loss
// raises ErrorKind::numeric. The default step must stay well below the
// typical max-pool winning margin, or the two evaluations straddle an
// argmax switch and the difference quotient mixes two linear pieces.
GradCheckReport grad_check(const std::function<double(const Eigen::VectorXd&)>& loss_fn,
                           const Eigen::VectorXd& params,
                           const Eigen::VectorXd& analytic_grad, double tolerance,
                           int min_coords = 200, std::uint64_t seed = 0,
                           double step = 1e-5);

}  // namespace blner
