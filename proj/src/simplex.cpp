#include "plm/simplex.hpp"

#include <limits>
#include <vector>

namespace plm::detail {

namespace {

constexpr double kEps = 1e-10;

// Primal simplex on a tableau with an identity basis already in place.
// Columns [0, n_cols) are eligible to enter; rhs_col holds the RHS.
// Returns false on unbounded.
bool run_simplex(Eigen::MatrixXd& t, std::vector<int>& basis, Eigen::Index n_cols,
                 Eigen::Index rhs_col) {
    const Eigen::Index rows = t.rows();
    const Eigen::Index m = rows - 1;  // last row is the objective
    for (int iter = 0; iter < 10000; ++iter) {
        // entering column: Bland — smallest index with positive reduced cost
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < n_cols; ++j) {
            if (t(m, j) > kEps) {
                enter = j;
                break;
            }
        }
        if (enter < 0) return true;  // optimal

        // leaving row: min ratio, Bland tie-break on basis index
        Eigen::Index leave = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < m; ++i) {
            if (t(i, enter) > kEps) {
                const double ratio = t(i, rhs_col) / t(i, enter);
                if (ratio < best - kEps ||
                    (ratio < best + kEps &&
                     (leave < 0 || basis[size_t(i)] < basis[size_t(leave)]))) {
                    best = ratio;
                    leave = i;
                }
            }
        }
        if (leave < 0) return false;  // unbounded

        // pivot
        t.row(leave) /= t(leave, enter);
        for (Eigen::Index i = 0; i < rows; ++i) {
            if (i != leave && std::abs(t(i, enter)) > 0.0)
                t.row(i) -= t(i, enter) * t.row(leave);
        }
        basis[size_t(leave)] = int(enter);
    }
    return false;  // iteration cap — treat as failure
}

}  // namespace

bool simplex_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& c, Eigen::VectorXd& x_out, double& obj_out) {
    const int m = int(a.rows());
    const int n = int(a.cols());

    // normalize b >= 0
    Eigen::MatrixXd a2 = a;
    Eigen::VectorXd b2 = b;
    for (int i = 0; i < m; ++i) {
        if (b2(i) < 0.0) {
            a2.row(i) *= -1.0;
            b2(i) *= -1.0;
        }
    }

    // phase 1: artificials form the identity basis
    const int total = n + m;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, total + 1);
    t.block(0, 0, m, n) = a2;
    t.block(0, n, m, m) = Eigen::MatrixXd::Identity(m, m);
    t.block(0, total, m, 1) = b2;

    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = n + i;

    // objective: maximize -sum(artificials) => row = sum of constraint rows over x cols
    for (int j = 0; j < n; ++j) t(m, j) = a2.col(j).sum();
    t(m, total) = b2.sum();

    if (!run_simplex(t, basis, total, total)) return false;
    if (t(m, total) > 1e-7) return false;  // infeasible

    // drive any artificial still in the basis out (or zero its row)
    for (int i = 0; i < m; ++i) {
        if (basis[i] >= n) {
            int pivot = -1;
            for (int j = 0; j < n; ++j) {
                if (std::abs(t(i, j)) > kEps) {
                    pivot = j;
                    break;
                }
            }
            if (pivot >= 0) {
                t.row(i) /= t(i, pivot);
                for (int k = 0; k <= m; ++k)
                    if (k != i && std::abs(t(k, pivot)) > 0.0) t.row(k) -= t(k, pivot) * t.row(i);
                basis[i] = pivot;
            }
        }
    }

    // phase 2: real objective, artificial columns excluded
    t.row(m).setZero();
    for (int j = 0; j < n; ++j) t(m, j) = c(j);
    for (int i = 0; i < m; ++i) {
        if (basis[i] < n && std::abs(t(m, basis[i])) > 0.0)
            t.row(m) -= t(m, basis[i]) * t.row(i);
    }
    // hide artificial columns by clearing them (they can never re-enter: cost 0, Bland needs > eps)
    for (int j = n; j < total; ++j) t.col(j).setZero();

    if (!run_simplex(t, basis, n, total)) return false;

    x_out = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < m; ++i)
        if (basis[i] < n) x_out(basis[i]) = t(i, total);
    obj_out = c.dot(x_out);
    return true;
}

}  // namespace plm::detail
