#include "rvc/simlab.hpp"

#include "rvc/curvature.hpp"
#include "rvc/flatten.hpp"
#include "rvc/psplines.hpp"
#include "rvc/refpath.hpp"
#include "rvc/ridgeopt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rvc {

namespace {

Mesh grid_mesh(int n, double domain, const std::vector<double>& z) {
    std::vector<Vec3> vertices;
    vertices.reserve(size_t(n) * size_t(n));
    const double h = domain / (n - 1);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            vertices.emplace_back(i * h, j * h, z[size_t(j) * size_t(n) + size_t(i)]);

    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(2 * size_t(n - 1) * size_t(n - 1));
    auto at = [n](int i, int j) { return j * n + i; };
    for (int j = 0; j + 1 < n; ++j) {
        for (int i = 0; i + 1 < n; ++i) {
            // fixed diagonal; counterclockwise in (x, y) so normals face +z
            triangles.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            triangles.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        }
    }
    return Mesh(std::move(vertices), std::move(triangles));
}

double bias_height(BiasForm form, double x) {
    return form == BiasForm::NegX2 ? -x * x : -x * x * x;
}

double bias_slope(BiasForm form, double x) {
    return form == BiasForm::NegX2 ? -2 * x : -3 * x * x;
}

} // namespace

Mesh gen_bias_surface(BiasForm form, int n, double domain) {
    std::vector<double> z(size_t(n) * size_t(n));
    const double h = domain / (n - 1);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) z[size_t(j) * size_t(n) + size_t(i)] = bias_height(form, i * h);
    return grid_mesh(n, domain, z);
}

double bias_true_curvature(BiasForm form, double x) {
    const double d1 = bias_slope(form, x);
    const double d2 = form == BiasForm::NegX2 ? -2.0 : -6.0 * x;
    return d2 / std::pow(1.0 + d1 * d1, 1.5);
}

BiasResult bias_study(BiasForm form, int n, double domain, double radius) {
    const Mesh mesh = gen_bias_surface(form, n, domain);
    const double h = domain / (n - 1);

    // parameter-plane window neighbourhoods (the study evaluates the fit
    // against the true surface, so the window lives on the generating grid)
    const int reach = int(std::floor(radius / h + 1e-9));
    std::vector<std::vector<int>> windows(size_t(n) * size_t(n));
    auto at = [n](int i, int j) { return j * n + i; };
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            auto& w = windows[size_t(at(i, j))];
            for (int dj = -reach; dj <= reach; ++dj) {
                for (int di = -reach; di <= reach; ++di) {
                    if (double(di) * di + double(dj) * dj > sqr(radius / h) + 1e-9) continue;
                    int ii = i + di, jj = j + dj;
                    if (ii < 0 || ii >= n || jj < 0 || jj >= n) continue;
                    w.push_back(at(ii, jj));
                }
            }
        }
    }

    FieldOptions options;
    options.neighborhood_override = &windows;
    options.on_failure = FitFailurePolicy::Throw;
    const CurvatureField field = compute_curvature_field(mesh, radius, CurveClass::Ridge, options);

    BiasResult result;
    const int mid = n / 2;
    // arc length along the cross-section by fine trapezoidal quadrature
    auto arc_to = [&](double x) {
        const int steps = 200;
        double acc = 0, prev = std::sqrt(1 + sqr(bias_slope(form, 0)));
        for (int k = 1; k <= steps; ++k) {
            double xk = x * k / steps;
            double cur = std::sqrt(1 + sqr(bias_slope(form, xk)));
            acc += 0.5 * (prev + cur) * (x / steps);
            prev = cur;
        }
        return acc;
    };
    for (int i = 0; i < n; ++i) {
        const double x = i * h;
        const auto& vc = field.vertices[size_t(at(i, mid))];
        if (!vc.defined) continue;
        // cross-sectional curvature: the principal direction closest to the
        // cut direction (x axis)
        const double a1 = std::abs(vc.principal.dir1.x());
        const double a2 = std::abs(vc.principal.dir2.x());
        const double est = a1 >= a2 ? vc.principal.kappa1 : vc.principal.kappa2;
        result.x.push_back(x);
        result.arc_length.push_back(arc_to(x));
        result.true_kappa.push_back(bias_true_curvature(form, x));
        result.est_kappa.push_back(est);
    }
    return result;
}

void SimConfig::validate() const {
    if (reps < 1) throw Error("SimConfig: reps must be >= 1");
    if (allow_extrapolation) return;
    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!straight_ridge && !in(a, 0.0, 0.5))
        throw Error("SimConfig: a outside [0, 0.5] (pass allow_extrapolation to override)");
    if (!in(b, 0.0, 0.5)) throw Error("SimConfig: b outside [0, 0.5]");
    if (!in(li, 0.0, 0.1)) throw Error("SimConfig: li outside [0, 0.1]");
    if (!in(delta, 0.0, 0.05)) throw Error("SimConfig: delta outside [0, 0.05]");
    if (!(spacing > 0) || !(domain > spacing)) throw Error("SimConfig: bad grid");
}

Mesh gen_ridge_surface(const SimConfig& config, StreamRng& rng, RidgeTruth* truth) {
    const int n = config.grid_n();
    const double h = config.domain / (n - 1);
    const bool straight = config.straight_ridge || config.a <= 0.0;
    auto ridge_x = [&](double y) {
        return straight ? 0.0 : std::cbrt(y / config.a);
    };

    std::vector<double> z(size_t(n) * size_t(n));
    for (int j = 0; j < n; ++j) {
        const double y = j * h;
        const double c = ridge_x(y);
        for (int i = 0; i < n; ++i) {
            const double x = i * h;
            double value = -config.b * sqr(x - c);
            if (config.delta > 0) value += rng.uniform(-config.delta, config.delta);
            z[size_t(j) * size_t(n) + size_t(i)] = value;
        }
    }
    Mesh mesh = grid_mesh(n, config.domain, z);

    if (truth) {
        // dense sampling keeps the arc-length parameterisation faithful near
        // the cube-root blow-up at y = 0
        const int dense = 20 * n;
        std::vector<Vec3> pts;
        pts.reserve(size_t(dense) + 1);
        for (int k = 0; k <= dense; ++k) {
            const double y = config.domain * k / dense;
            pts.emplace_back(ridge_x(y), y, 0.0);
        }
        // collapse duplicates (straight ridge has none)
        std::vector<Vec3> cleaned;
        for (const Vec3& p : pts)
            if (cleaned.empty() || (p - cleaned.back()).norm() > 1e-12) cleaned.push_back(p);
        truth->ridge = SurfaceCurve::from_points(std::move(cleaned));
        truth->straight = straight;
        const Vec3 raw1(ridge_x(0.0) + config.li, 0.0, 0.0);
        const Vec3 raw2(ridge_x(config.domain) + config.li, config.domain, 0.0);
        truth->l1 = mesh.closest_surface_point(raw1).position;
        truth->l2 = mesh.closest_surface_point(raw2).position;
    }
    return mesh;
}

double curve_distance(const SurfaceCurve& estimate, const SurfaceCurve& truth, int n) {
    double acc = 0;
    for (int k = 0; k < n; ++k) {
        const double te = estimate.length() * k / (n - 1);
        const double tt = truth.length() * k / (n - 1);
        acc += (estimate.point_at(te) - truth.point_at(tt)).norm();
    }
    return acc / n;
}

namespace {

double run_replicate(const SimConfig& config, int rep) {
    StreamRng rng(config.seed, std::uint64_t(rep));
    RidgeTruth truth;
    const Mesh mesh = gen_ridge_surface(config, rng, &truth);

    FieldOptions options;
    options.on_failure = FitFailurePolicy::MarkUndefined;
    const CurvatureField field =
        compute_curvature_field(mesh, config.radius, CurveClass::Ridge, options);

    const LocalRegion region = localize(mesh, truth.l1, truth.l2);
    const ReferencePathResult ref = optimal_reference_path(
        mesh, region, &field, PathObjective::MaxCurvature, config.n_angles);
    if (!(ref.objective > 1e-9))
        throw Error("no ridge signal along any plane cut");

    const FlatDomain domain = flatten_region(mesh, region, ref.best, field);

    SurfaceFitConfig fit_config;
    fit_config.target_edf = config.target_edf;
    const PSplineSurface surface = fit_strength_surface(domain, fit_config);

    RidgeSolveOptions solve_options;
    solve_options.grid_size = config.grid_size;
    solve_options.lambda = config.lambda;
    RidgeSolution solution = solve_ridge(surface, solve_options);
    const SurfaceCurve estimate = back_map(solution, domain);

    return curve_distance(estimate, truth.ridge, config.resample_points);
}

} // namespace

SimResult run_sim(const SimConfig& config, int threads) {
    config.validate();
    SimResult result;
    result.distances.assign(size_t(config.reps), std::numeric_limits<double>::quiet_NaN());
    std::vector<std::string> reasons(size_t(config.reps));

    (void)threads;
#pragma omp parallel for schedule(dynamic)
    for (int rep = 0; rep < config.reps; ++rep) {
        try {
            result.distances[size_t(rep)] = run_replicate(config, rep);
        } catch (const std::exception& e) {
            reasons[size_t(rep)] = e.what();
        }
    }

    double sum = 0, sum2 = 0;
    for (int rep = 0; rep < config.reps; ++rep) {
        const double d = result.distances[size_t(rep)];
        if (std::isnan(d)) {
            result.failed_reps.push_back(rep);
            result.failure_reasons.push_back(reasons[size_t(rep)]);
        } else {
            sum += d;
            sum2 += d * d;
            ++result.succeeded;
        }
    }
    if (result.succeeded > 0) {
        result.mean = sum / result.succeeded;
        if (result.succeeded > 1)
            result.sd = std::sqrt((sum2 - sum * sum / result.succeeded) /
                                  (result.succeeded - 1));
    }
    return result;
}

} // namespace rvc
