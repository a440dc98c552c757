#pragma once

#include "rvc/core.hpp"
#include "rvc/mesh.hpp"
#include "rvc/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rvc {

enum class BiasForm { NegX2, NegX3 };

/// Regular grid surface z = -x^2 or z = -x^3 over [0, domain]^2 with a fixed
/// diagonal convention and upward-facing winding.
Mesh gen_bias_surface(BiasForm form, int n = 41, double domain = 10.0);

/// Analytic cross-sectional curvature z'' / (1 + z'^2)^(3/2) of a bias form.
double bias_true_curvature(BiasForm form, double x);

struct BiasResult {
    std::vector<double> x;          // column coordinate
    std::vector<double> arc_length; // along the cross-section from x = 0
    std::vector<double> true_kappa;
    std::vector<double> est_kappa;  // estimated cross-sectional curvature
};

/// Quadratic-patch curvature estimates along the middle row against analytic
/// truth.  Neighbourhoods are windows of the parameter grid (radius measured
/// in the (x, y) plane), matching the semi-analytic design of the study.
BiasResult bias_study(BiasForm form, int n = 41, double domain = 10.0, double radius = 0.5);

struct SimConfig {
    double a = 0.5;     // ridge movement: c(y) = (y / a)^(1/3)
    double b = 0.5;     // cross-ridge curvature
    double li = 0.0;    // landmark inaccuracy: across-ridge endpoint offset
    double delta = 0.0; // uniform z-noise half-width
    double domain = 10.0;
    double spacing = 0.25; // ms; 41 x 41 on the default domain
    double radius = 0.5;   // curvature neighbourhood radius
    int reps = 500;
    std::uint64_t seed = 1;
    int n_angles = 180;
    int grid_size = 51;
    double lambda = 0.5;
    double target_edf = 12;
    int resample_points = 21;
    bool straight_ridge = false; // c == 0 everywhere (a -> infinity surrogate)
    bool allow_extrapolation = false;

    void validate() const;
    int grid_n() const { return int(std::lround(domain / spacing)) + 1; }
};

struct RidgeTruth {
    SurfaceCurve ridge; // {(c(y), y, 0)}
    Vec3 l1, l2;        // displaced, surface-snapped landmark endpoints
    bool straight = false;
};

/// Grid mesh of z = -b (x - c(y))^2 with uniform z-noise, plus the analytic
/// ridge curve and the (possibly offset) endpoint landmarks.  a <= 0 falls
/// back to the straight-ridge limit.
Mesh gen_ridge_surface(const SimConfig& config, StreamRng& rng, RidgeTruth* truth);

struct SimResult {
    std::vector<double> distances; // NaN where the replicate failed
    std::vector<int> failed_reps;
    std::vector<std::string> failure_reasons;
    double mean = 0;
    double sd = 0;
    int succeeded = 0;
};

/// Full curve pipeline (reference path, flattening, p-spline fit, Newton
/// solve, back-mapping) per replicate; estimate and truth are resampled to
/// `resample_points` equal-arc points and compared by mean Euclidean
/// distance.  Deterministic for a fixed seed regardless of thread count.
SimResult run_sim(const SimConfig& config, int threads = 0);

/// Mean 21-point distance between two curves after equal-arc resampling.
double curve_distance(const SurfaceCurve& estimate, const SurfaceCurve& truth, int n = 21);

} // namespace rvc
