#pragma once

#include "rvc/core.hpp"
#include "rvc/flatten.hpp"

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace rvc {

/// Uniform-knot B-spline basis of a given order (order 4 = cubic) spanning
/// [lo, hi].  Derivatives use the lower-order identity
///   phi'_{i,a}(x) = (phi_{i,a-1}(x) - phi_{i+1,a-1}(x)) / b
/// with b the knot spacing; second derivatives apply it twice.
class BSplineBasis {
public:
    BSplineBasis(double lo, double hi, int count, int order = 4);

    int count() const { return count_; }
    int order() const { return order_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double knot_spacing() const { return spacing_; }

    /// All `count` basis values (or derivative values) at x.  Throws when x
    /// is outside [lo, hi] or the derivative order reaches the spline degree.
    Eigen::VectorXd eval(double x, int deriv = 0) const;

private:
    void eval_order(double x, int order, Eigen::VectorXd& out) const;
    double knot(int i) const { return lo_ + (i - (order_ - 1)) * spacing_; }

    double lo_, hi_, spacing_;
    int count_, order_;
};

/// P = D^T D where D takes second-order differences of a length-n vector.
Eigen::MatrixXd second_difference_penalty(int n);

/// Tensor-product p-spline surface fitted to scattered (s, d, value) data by
/// penalised least squares; one isotropic smoothing parameter tuned so the
/// trace of the influence operator hits a target equivalent-degrees value.
class PSplineSurface {
public:
    PSplineSurface() = default;
    PSplineSurface(BSplineBasis basis_s, BSplineBasis basis_d, Eigen::MatrixXd coefficients,
                   double lambda, double edf);

    const BSplineBasis& basis_s() const { return *basis_s_; }
    const BSplineBasis& basis_d() const { return *basis_d_; }
    const Eigen::MatrixXd& coefficients() const { return coef_; }
    double lambda() const { return lambda_; }
    double edf() const { return edf_; }

    double s_min() const { return basis_s_->lo(); }
    double s_max() const { return basis_s_->hi(); }
    double d_min() const { return basis_d_->lo(); }
    double d_max() const { return basis_d_->hi(); }

    /// Tensor contraction of the coefficients with the (possibly
    /// differentiated) basis vectors.
    double eval(double s, double d, int ds_order = 0, int dd_order = 0) const;

private:
    std::shared_ptr<const BSplineBasis> basis_s_, basis_d_;
    Eigen::MatrixXd coef_;
    double lambda_ = 0, edf_ = 0;
};

struct SurfaceFitConfig {
    int basis_count = 15;   // per axis
    double target_edf = 12; // total for the 2D fit
    double edf_tolerance = 0.1;
};

struct SurfaceData {
    std::vector<double> s, d, value;
    double s_lo = 0, s_hi = 0, d_lo = 0, d_hi = 0; // fitting rectangle
};

/// Fixed-lambda penalised least squares fit.
PSplineSurface fit_surface_lambda(const SurfaceData& data, double lambda,
                                  int basis_count = 15);

/// Fit with the smoothing parameter bisected until the achieved equivalent
/// degrees of freedom is within tolerance of the target.
PSplineSurface fit_surface(const SurfaceData& data, const SurfaceFitConfig& config = {});

/// Convenience wrapper over a flattened domain's (s, d, nu) records.
PSplineSurface fit_strength_surface(const FlatDomain& domain,
                                    const SurfaceFitConfig& config = {});

} // namespace rvc
