#pragma once

#include "rvc/core.hpp"
#include "rvc/flatten.hpp"
#include "rvc/psplines.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rvc {

/// Ridge/valley estimate in the flattened domain: offsets alpha_k at an
/// equally spaced arc-length grid s_k, endpoints pinned at 0.
struct RidgeSolution {
    std::vector<double> s;   // grid, size n_g
    Eigen::VectorXd alpha;   // offsets, alpha[0] == alpha[n_g - 1] == 0
    double lambda = 0;
    std::vector<double> objective_trace; // objective after every accepted step
    bool converged = false;
    int iterations = 0;
    bool used_gradient_fallback = false;
    double final_gradient_norm = 0;
    SurfaceCurve curve3d; // filled by back_map
};

/// Penalised discrete curvature integral
///   M = (1/n_g) sum_k nu(s_k, alpha_k) - lambda alpha^T P alpha .
/// Throws when any (s_k, alpha_k) leaves the fitted rectangle.
double ridge_objective(const PSplineSurface& surface, const std::vector<double>& s,
                       const Eigen::VectorXd& alpha, double lambda,
                       const Eigen::MatrixXd& penalty);

/// Analytic gradient and Hessian of M on the free coordinates (endpoints
/// excluded).  The data term carries the same 1/n_g factor as M.
void ridge_gradient_hessian(const PSplineSurface& surface, const std::vector<double>& s,
                            const Eigen::VectorXd& alpha, double lambda,
                            const Eigen::MatrixXd& penalty, Eigen::VectorXd& gradient,
                            Eigen::MatrixXd& hessian);

struct RidgeSolveOptions {
    int grid_size = 51;
    double lambda = 0.5;
    int max_iterations = 100;
    double gradient_tol = 1e-8;
    int max_halvings = 30;
};

/// Damped Newton ascent from alpha = 0.  Steps are halved until the objective
/// does not decrease; when the Newton direction is not an ascent direction the
/// solver falls back to a line search along the gradient.
RidgeSolution solve_ridge(const PSplineSurface& surface, const RidgeSolveOptions& options = {});

/// Barycentric interpolation of the (s_k, alpha_k) grid back to 3D, with arc
/// lengths recomputed in 3D.  Throws, naming the offending k, when a grid
/// point leaves the flattened hull.
SurfaceCurve back_map(const RidgeSolution& solution, const FlatDomain& domain);

} // namespace rvc
