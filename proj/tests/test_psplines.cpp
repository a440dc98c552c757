#include <doctest.h>

#include "rvc/psplines.hpp"
#include "rvc/rng.hpp"

#include <cmath>

using namespace rvc;

namespace {

// independent Cox-de Boor recursion over explicit knots (the test oracle)
double naive_bspline(const std::vector<double>& knots, int i, int order, double x) {
    if (order == 1) return (x >= knots[size_t(i)] && x < knots[size_t(i + 1)]) ? 1.0 : 0.0;
    double left = 0, right = 0;
    double dl = knots[size_t(i + order - 1)] - knots[size_t(i)];
    double dr = knots[size_t(i + order)] - knots[size_t(i + 1)];
    if (dl > 0) left = (x - knots[size_t(i)]) / dl * naive_bspline(knots, i, order - 1, x);
    if (dr > 0)
        right = (knots[size_t(i + order)] - x) / dr * naive_bspline(knots, i + 1, order - 1, x);
    return left + right;
}

SurfaceData rectangle_data(int nx, int ny, const std::function<double(double, double)>& f,
                           double s_hi = 10.0, double d_lo = -3.0, double d_hi = 3.0) {
    SurfaceData data;
    data.s_lo = 0;
    data.s_hi = s_hi;
    data.d_lo = d_lo;
    data.d_hi = d_hi;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            double s = s_hi * i / (nx - 1);
            double d = d_lo + (d_hi - d_lo) * j / (ny - 1);
            data.s.push_back(s);
            data.d.push_back(d);
            data.value.push_back(f(s, d));
        }
    return data;
}

} // namespace

TEST_CASE("cubic basis peaks at 2/3 on a knot centre") {
    BSplineBasis basis(0.0, 10.0, 15);
    const double b = basis.knot_spacing();
    // interior basis function i peaks where its support is centred
    for (int i = 4; i <= 10; ++i) {
        const double center = 0.0 + (i - 1) * b; // knot(i) + 2b with knot(i) = (i-3) b
        if (center <= 0 || center >= 10) continue;
        Eigen::VectorXd values = basis.eval(center);
        CHECK(values[i] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
}

TEST_CASE("partition of unity everywhere in the domain") {
    BSplineBasis basis(-2.0, 7.0, 12);
    StreamRng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        double x = rng.uniform(-2, 7);
        CHECK(basis.eval(x).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(basis.eval(-2.0).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(basis.eval(7.0).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("at most degree + 1 nonzero entries") {
    BSplineBasis basis(0.0, 1.0, 20);
    StreamRng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd values = basis.eval(rng.next_double());
        int nonzero = 0;
        for (int i = 0; i < values.size(); ++i)
            if (values[i] != 0) ++nonzero;
        CHECK(nonzero <= 4);
    }
}

TEST_CASE("values match an independent recursion oracle") {
    const int nb = 11;
    BSplineBasis basis(0.0, 4.0, nb);
    const double b = basis.knot_spacing();
    std::vector<double> knots;
    for (int i = 0; i < nb + 4; ++i) knots.push_back((i - 3) * b);

    StreamRng rng(3);
    std::vector<double> probes{0.0, 4.0 - 1e-12, 2.0};
    for (int t = 0; t < 30; ++t) probes.push_back(rng.uniform(0, 4));
    for (double x : probes) {
        Eigen::VectorXd values = basis.eval(x);
        for (int i = 0; i < nb; ++i)
            CHECK(values[i] == doctest::Approx(naive_bspline(knots, i, 4, x)).epsilon(1e-10));
    }
}

TEST_CASE("derivatives sum to zero and match finite differences") {
    BSplineBasis basis(0.0, 6.0, 13);
    StreamRng rng(4);
    const double h = 1e-6 * basis.knot_spacing();
    for (int trial = 0; trial < 60; ++trial) {
        double x = rng.uniform(0.01, 5.99);
        Eigen::VectorXd d1 = basis.eval(x, 1);
        CHECK(std::abs(d1.sum()) < 1e-12);

        Eigen::VectorXd fd = (basis.eval(x + h) - basis.eval(x - h)) / (2 * h);
        for (int i = 0; i < d1.size(); ++i) {
            if (std::abs(d1[i]) > 1e-9)
                CHECK(fd[i] == doctest::Approx(d1[i]).epsilon(1e-6));
            else
                CHECK(std::abs(fd[i]) < 1e-4);
        }

        Eigen::VectorXd d2 = basis.eval(x, 2);
        Eigen::VectorXd fd2 = (basis.eval(x + h, 1) - basis.eval(x - h, 1)) / (2 * h);
        for (int i = 0; i < d2.size(); ++i)
            if (std::abs(d2[i]) > 1e-6) CHECK(fd2[i] == doctest::Approx(d2[i]).epsilon(1e-5));
    }
}

TEST_CASE("spline reproduction of a quadratic has constant second derivative") {
    BSplineBasis basis(0.0, 5.0, 14);
    // least-squares coefficients for f(x) = x^2 on a dense grid
    const int m = 300;
    Eigen::MatrixXd design(m, basis.count());
    Eigen::VectorXd target(m);
    for (int r = 0; r < m; ++r) {
        double x = 5.0 * r / (m - 1);
        design.row(r) = basis.eval(x).transpose();
        target[r] = x * x;
    }
    Eigen::VectorXd coef = design.colPivHouseholderQr().solve(target);
    StreamRng rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        double x = rng.uniform(0.2, 4.8);
        CHECK(basis.eval(x, 2).dot(coef) == doctest::Approx(2.0).epsilon(1e-7));
        CHECK(basis.eval(x, 1).dot(coef) == doctest::Approx(2 * x).epsilon(1e-7));
    }
}

TEST_CASE("derivative order must stay below the degree") {
    BSplineBasis basis(0.0, 1.0, 8);
    CHECK_THROWS_AS(basis.eval(0.5, 4), Error);
    CHECK_THROWS_AS(basis.eval(1.5), Error); // outside the domain
}

TEST_CASE("penalty annihilates affine coefficient sequences") {
    Eigen::MatrixXd p = second_difference_penalty(9);
    CHECK((p - p.transpose()).norm() < 1e-14);
    Eigen::VectorXd affine(9);
    for (int i = 0; i < 9; ++i) affine[i] = 3.0 - 0.7 * i;
    CHECK((p * affine).norm() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p);
    CHECK(eig.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("constant data reproduces exactly at every smoothing level") {
    SurfaceData data = rectangle_data(20, 20, [](double, double) { return 3.25; });
    for (double lambda : {1e-6, 1.0, 1e6}) {
        PSplineSurface surface = fit_surface_lambda(data, lambda);
        StreamRng rng(6);
        for (int trial = 0; trial < 30; ++trial) {
            double s = rng.uniform(0, 10), d = rng.uniform(-3, 3);
            CHECK(surface.eval(s, d) == doctest::Approx(3.25).epsilon(1e-8));
        }
    }
}

TEST_CASE("penalty null space reproduces affine data for any lambda") {
    auto affine = [](double s, double d) { return 1.5 + 0.3 * s - 0.8 * d; };
    SurfaceData data = rectangle_data(20, 20, affine);
    for (double lambda : {1e-4, 10.0, 1e4}) {
        PSplineSurface surface = fit_surface_lambda(data, lambda);
        StreamRng rng(7);
        for (int trial = 0; trial < 30; ++trial) {
            double s = rng.uniform(0, 10), d = rng.uniform(-3, 3);
            CHECK(surface.eval(s, d) == doctest::Approx(affine(s, d)).epsilon(1e-8));
        }
    }
    // extreme smoothing still reproduces affine data up to the conditioning
    // of the penalised normal equations
    PSplineSurface extreme = fit_surface_lambda(data, 1e8);
    StreamRng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        double s = rng.uniform(0, 10), d = rng.uniform(-3, 3);
        CHECK(extreme.eval(s, d) == doctest::Approx(affine(s, d)).epsilon(1e-5));
    }
}

TEST_CASE("edf decreases in lambda and saturates at the null-space dimension") {
    SurfaceData data = rectangle_data(25, 25, [](double s, double d) {
        return std::sin(0.5 * s) * std::exp(-d * d) + 0.2 * s;
    });
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {1e-4, 1e-2, 1.0, 1e2, 1e4, 1e8, 1e12}) {
        PSplineSurface surface = fit_surface_lambda(data, lambda);
        CHECK(surface.edf() < previous + 1e-9);
        previous = surface.edf();
    }
    // lambda -> infinity leaves the tensor null space {1, s, d, sd}
    CHECK(previous == doctest::Approx(4.0).epsilon(1e-3));
    // and targets below it are rejected
    SurfaceFitConfig config;
    config.target_edf = 3.0;
    CHECK_THROWS_WITH_AS(fit_surface(data, config), doctest::Contains("unreachable"), Error);
}

TEST_CASE("fit hits the target equivalent degrees of freedom") {
    SurfaceData data = rectangle_data(30, 30, [](double s, double d) {
        return 2.0 / (1.0 + d * d) + 0.1 * std::sin(s);
    });
    PSplineSurface surface = fit_surface(data);
    CHECK(std::abs(surface.edf() - 12.0) <= 0.1);

    SurfaceFitConfig config;
    config.target_edf = 20.0;
    PSplineSurface flexible = fit_surface(data, config);
    CHECK(std::abs(flexible.edf() - 20.0) <= 0.1);
}

TEST_CASE("smoothing reduces residual variance below the raw noise variance") {
    StreamRng rng(8);
    auto bump = [](double s, double d) { return std::exp(-0.5 * (d * d + (s - 5) * (s - 5))); };
    SurfaceData data = rectangle_data(30, 30, bump);
    std::vector<double> noise(data.value.size());
    double noise_var = 0;
    for (size_t i = 0; i < data.value.size(); ++i) {
        noise[i] = rng.uniform(-0.3, 0.3);
        data.value[i] += noise[i];
        noise_var += noise[i] * noise[i];
    }
    noise_var /= double(noise.size());

    PSplineSurface surface = fit_surface(data);
    double residual_var = 0;
    for (size_t i = 0; i < data.value.size(); ++i) {
        // residual against the clean signal
        double r = surface.eval(data.s[i], data.d[i]) - bump(data.s[i], data.d[i]);
        residual_var += r * r;
    }
    residual_var /= double(noise.size());
    CHECK(residual_var < noise_var);
}

TEST_CASE("near-interpolating fit reproduces spline-generated data") {
    // data drawn from a spline surface is reproduced as smoothing vanishes
    BSplineBasis basis(0.0, 10.0, 15);
    StreamRng rng(9);
    Eigen::MatrixXd coef(15, 15);
    for (int i = 0; i < 15; ++i)
        for (int j = 0; j < 15; ++j) coef(i, j) = rng.uniform(-1, 1);
    PSplineSurface generator(BSplineBasis(0, 10, 15), BSplineBasis(-3, 3, 15), coef, 0, 0);

    SurfaceData data = rectangle_data(40, 40, [&](double s, double d) {
        return generator.eval(s, d);
    });
    PSplineSurface fitted = fit_surface_lambda(data, 1e-10);
    for (size_t i = 0; i < data.s.size(); i += 37)
        CHECK(fitted.eval(data.s[i], data.d[i]) == doctest::Approx(data.value[i]).epsilon(1e-4));
}

TEST_CASE("surface derivative in d matches finite differences") {
    SurfaceData data = rectangle_data(25, 25, [](double s, double d) {
        return std::cos(0.4 * s) / (1.0 + d * d);
    });
    PSplineSurface surface = fit_surface(data);
    StreamRng rng(10);
    const double h = 1e-6;
    for (int trial = 0; trial < 40; ++trial) {
        double s = rng.uniform(0.5, 9.5), d = rng.uniform(-2.5, 2.5);
        double analytic = surface.eval(s, d, 0, 1);
        double fd = (surface.eval(s, d + h) - surface.eval(s, d - h)) / (2 * h);
        if (std::abs(analytic) > 1e-8)
            CHECK(fd == doctest::Approx(analytic).epsilon(1e-6));
        // constant in d of a d-independent surface
    }
    // derivative of a constant surface is zero
    SurfaceData flat = rectangle_data(15, 15, [](double, double) { return 2.0; });
    PSplineSurface fsurf = fit_surface_lambda(flat, 1.0);
    CHECK(std::abs(fsurf.eval(5.0, 0.0, 0, 1)) < 1e-9);
    CHECK(std::abs(fsurf.eval(5.0, 0.0, 0, 2)) < 1e-9);
}

TEST_CASE("out-of-rectangle evaluation throws") {
    SurfaceData data = rectangle_data(15, 15, [](double, double) { return 1.0; });
    PSplineSurface surface = fit_surface_lambda(data, 1.0);
    CHECK_THROWS_AS(surface.eval(11.0, 0.0), Error);
    CHECK_THROWS_AS(surface.eval(5.0, 4.0), Error);
}

TEST_CASE("basis locality: distant data does not move the unpenalised fit") {
    // changing a datum only influences basis functions supported there
    SurfaceData data = rectangle_data(40, 40, [](double s, double d) {
        return std::sin(s) + d;
    });
    PSplineSurface base = fit_surface_lambda(data, 1e-9);
    SurfaceData bumped = data;
    // move one datum near (0, -3)
    bumped.value[0] += 5.0;
    PSplineSurface moved = fit_surface_lambda(bumped, 1e-9);
    // evaluation far away (s = 9.5, d = 2.5) is practically unchanged
    CHECK(moved.eval(9.5, 2.5) == doctest::Approx(base.eval(9.5, 2.5)).epsilon(1e-6));
    // evaluation at the bumped corner responds
    CHECK(std::abs(moved.eval(0.0, -3.0) - base.eval(0.0, -3.0)) > 0.1);
}
