#pragma once

#include <Eigen/Dense>

namespace plm::detail {

// Solves  max c'x  s.t.  A x = b, x >= 0  with a dense two-phase simplex
// (Bland's rule, so no cycling). Small problems only — used by the
// force-closure interiority test. Returns false if infeasible or unbounded.
bool simplex_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& c, Eigen::VectorXd& x_out, double& obj_out);

}  // namespace plm::detail
