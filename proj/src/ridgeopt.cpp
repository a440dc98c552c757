#include "rvc/ridgeopt.hpp"

#include <algorithm>
#include <cmath>

namespace rvc {

double ridge_objective(const PSplineSurface& surface, const std::vector<double>& s,
                       const Eigen::VectorXd& alpha, double lambda,
                       const Eigen::MatrixXd& penalty) {
    const int n = int(s.size());
    double data = 0;
    for (int k = 0; k < n; ++k) data += surface.eval(s[size_t(k)], alpha[k]);
    return data / n - lambda * alpha.dot(penalty * alpha);
}

void ridge_gradient_hessian(const PSplineSurface& surface, const std::vector<double>& s,
                            const Eigen::VectorXd& alpha, double lambda,
                            const Eigen::MatrixXd& penalty, Eigen::VectorXd& gradient,
                            Eigen::MatrixXd& hessian) {
    const int n = int(s.size());
    const int nf = n - 2; // free coordinates k = 1 .. n - 2
    const Eigen::VectorXd p_alpha = penalty * alpha;

    gradient.resize(nf);
    hessian = -2.0 * lambda * penalty.block(1, 1, nf, nf);
    for (int k = 1; k <= n - 2; ++k) {
        const double ds1 = surface.eval(s[size_t(k)], alpha[k], 0, 1);
        const double ds2 = surface.eval(s[size_t(k)], alpha[k], 0, 2);
        gradient[k - 1] = ds1 / n - 2.0 * lambda * p_alpha[k];
        hessian(k - 1, k - 1) += ds2 / n;
    }
}

RidgeSolution solve_ridge(const PSplineSurface& surface, const RidgeSolveOptions& options) {
    const int n = options.grid_size;
    if (n < 3) throw Error("solve_ridge: grid size must be >= 3");

    RidgeSolution sol;
    sol.lambda = options.lambda;
    sol.s.resize(size_t(n));
    const double s_lo = surface.s_min(), s_hi = surface.s_max();
    for (int k = 0; k < n; ++k)
        sol.s[size_t(k)] = s_lo + (s_hi - s_lo) * double(k) / double(n - 1);

    const Eigen::MatrixXd penalty = second_difference_penalty(n);

    // keep line-search probes strictly inside the fitted d-range
    const double d_lo = surface.d_min(), d_hi = surface.d_max();
    const double margin = 1e-9 * (d_hi - d_lo);
    auto clip = [&](Eigen::VectorXd a) {
        for (int k = 1; k < n - 1; ++k)
            a[k] = std::clamp(a[k], d_lo + margin, d_hi - margin);
        return a;
    };

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    double current = ridge_objective(surface, sol.s, alpha, options.lambda, penalty);
    sol.objective_trace.push_back(current);

    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        ridge_gradient_hessian(surface, sol.s, alpha, options.lambda, penalty, gradient, hessian);
        sol.final_gradient_norm = gradient.lpNorm<Eigen::Infinity>();
        sol.iterations = iter;
        if (sol.final_gradient_norm < options.gradient_tol) {
            sol.converged = true;
            break;
        }

        Eigen::VectorXd direction = -hessian.ldlt().solve(gradient);
        bool ascent = direction.dot(gradient) > 0 && direction.allFinite();
        if (!ascent) {
            direction = gradient; // gradient ascent fallback
            sol.used_gradient_fallback = true;
            // scale the first probe to a fraction of the d-range
            double norm = direction.lpNorm<Eigen::Infinity>();
            if (norm > 0) direction *= 0.1 * (d_hi - d_lo) / norm;
        }

        // step halving until the objective does not decrease
        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
            Eigen::VectorXd trial = alpha;
            for (int k = 1; k < n - 1; ++k) trial[k] += step * direction[k - 1];
            trial = clip(std::move(trial));
            double value = ridge_objective(surface, sol.s, trial, options.lambda, penalty);
            if (value >= current) {
                alpha = std::move(trial);
                current = value;
                sol.objective_trace.push_back(current);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (sol.used_gradient_fallback)
                throw Error("solve_ridge: cannot improve the objective from a "
                            "non-stationary point (gradient norm " +
                            std::to_string(sol.final_gradient_norm) + ")");
            // Newton step failed outright; retry this iterate along the gradient
            sol.used_gradient_fallback = true;
            double norm = gradient.lpNorm<Eigen::Infinity>();
            Eigen::VectorXd gdir = gradient * (0.1 * (d_hi - d_lo) / std::max(norm, 1e-300));
            step = 1.0;
            for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
                Eigen::VectorXd trial = alpha;
                for (int k = 1; k < n - 1; ++k) trial[k] += step * gdir[k - 1];
                trial = clip(std::move(trial));
                double value = ridge_objective(surface, sol.s, trial, options.lambda, penalty);
                if (value >= current) {
                    alpha = std::move(trial);
                    current = value;
                    sol.objective_trace.push_back(current);
                    accepted = true;
                    break;
                }
            }
            if (!accepted)
                throw Error("solve_ridge: cannot improve the objective from a "
                            "non-stationary point");
        }
    }
    if (!sol.converged) {
        ridge_gradient_hessian(surface, sol.s, alpha, options.lambda, penalty, gradient, hessian);
        sol.final_gradient_norm = gradient.lpNorm<Eigen::Infinity>();
        sol.converged = sol.final_gradient_norm < options.gradient_tol;
        sol.iterations = options.max_iterations;
    }
    sol.alpha = std::move(alpha);
    return sol;
}

SurfaceCurve back_map(const RidgeSolution& solution, const FlatDomain& domain) {
    std::vector<Vec3> points;
    points.reserve(solution.s.size());
    for (size_t k = 0; k < solution.s.size(); ++k) {
        try {
            points.push_back(domain.tri.to_3d(Vec2(solution.s[k], solution.alpha[int(k)])));
        } catch (const Error& e) {
            throw Error("back_map: grid point k = " + std::to_string(k) + ": " + e.what());
        }
    }
    // collapse consecutive duplicates so arc lengths stay strictly increasing
    std::vector<Vec3> cleaned;
    for (const Vec3& p : points)
        if (cleaned.empty() || (p - cleaned.back()).norm() > 1e-12) cleaned.push_back(p);
    if (cleaned.size() < 2) throw Error("back_map: curve collapsed to a point");
    return SurfaceCurve::from_points(std::move(cleaned));
}

} // namespace rvc
