#include "rvc/psplines.hpp"

#include <algorithm>
#include <cmath>

namespace rvc {

BSplineBasis::BSplineBasis(double lo, double hi, int count, int order)
    : lo_(lo), hi_(hi), count_(count), order_(order) {
    if (!(hi > lo)) throw Error("BSplineBasis: empty domain");
    if (order < 1) throw Error("BSplineBasis: order must be >= 1");
    if (count < order) throw Error("BSplineBasis: need at least `order` basis functions");
    // count - order + 1 interior intervals span [lo, hi]
    spacing_ = (hi - lo) / double(count - order + 1);
}

void BSplineBasis::eval_order(double x, int order, Eigen::VectorXd& out) const {
    // Cox-de Boor on the uniform knots; the order-`order` family on this knot
    // vector has count_ + (order_ - order) members.
    const int n = count_ + (order_ - order);
    out.setZero(n);
    // order 1: indicator of the knot interval
    int span = int(std::floor((x - knot(0)) / spacing_));
    // domain-interior spans run from order_ - 1 to count_ - 1; x = hi lands in
    // the last one
    span = std::clamp(span, order_ - 1, count_ - 1);
    Eigen::VectorXd work = Eigen::VectorXd::Zero(count_ + order_ - 1);
    work[span] = 1.0;
    for (int a = 2; a <= order; ++a) {
        const int members = count_ + order_ - a;
        for (int i = 0; i < members; ++i) {
            const double t_i = knot(i);
            const double left = (x - t_i) / ((a - 1) * spacing_);
            const double right = (knot(i + a) - x) / ((a - 1) * spacing_);
            work[i] = left * work[i] + right * work[i + 1];
        }
    }
    out = work.head(n);
}

Eigen::VectorXd BSplineBasis::eval(double x, int deriv) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(hi_ - lo_));
    if (x < lo_ - tol || x > hi_ + tol)
        throw Error("BSplineBasis::eval: x = " + std::to_string(x) + " outside [" +
                    std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
    x = std::clamp(x, lo_, hi_);
    if (deriv < 0 || deriv >= order_)
        throw Error("BSplineBasis::eval: derivative order " + std::to_string(deriv) +
                    " not available for splines of degree " + std::to_string(order_ - 1));

    // lower-order values, then difference `deriv` times
    Eigen::VectorXd values;
    eval_order(x, order_ - deriv, values);
    for (int pass = 1; pass <= deriv; ++pass) {
        const int n = count_ + deriv - pass; // members after this differencing
        Eigen::VectorXd next(n);
        for (int i = 0; i < n; ++i) next[i] = (values[i] - values[i + 1]) / spacing_;
        values = next;
    }
    return values;
}

Eigen::MatrixXd second_difference_penalty(int n) {
    if (n < 3) throw Error("second_difference_penalty needs n >= 3");
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 2, n);
    for (int i = 0; i < n - 2; ++i) {
        d(i, i) = 1;
        d(i, i + 1) = -2;
        d(i, i + 2) = 1;
    }
    return d.transpose() * d;
}

PSplineSurface::PSplineSurface(BSplineBasis basis_s, BSplineBasis basis_d,
                               Eigen::MatrixXd coefficients, double lambda, double edf)
    : basis_s_(std::make_shared<BSplineBasis>(std::move(basis_s))),
      basis_d_(std::make_shared<BSplineBasis>(std::move(basis_d))),
      coef_(std::move(coefficients)),
      lambda_(lambda),
      edf_(edf) {}

double PSplineSurface::eval(double s, double d, int ds_order, int dd_order) const {
    const Eigen::VectorXd bs = basis_s_->eval(s, ds_order);
    const Eigen::VectorXd bd = basis_d_->eval(d, dd_order);
    return bs.dot(coef_ * bd);
}

namespace {

struct NormalEquations {
    Eigen::MatrixXd ata;     // X^T X
    Eigen::VectorXd atb;     // X^T y
    Eigen::MatrixXd penalty; // tensor second-difference penalty
    BSplineBasis basis_s, basis_d;
    int nb;
};

NormalEquations build_normal_equations(const SurfaceData& data, int nb) {
    if (data.s.size() != data.d.size() || data.s.size() != data.value.size())
        throw Error("fit_surface: mismatched data arrays");
    if (!(data.s_hi > data.s_lo) || !(data.d_hi > data.d_lo))
        throw Error("fit_surface: empty fitting rectangle");

    NormalEquations eq{Eigen::MatrixXd::Zero(nb * nb, nb * nb),
                       Eigen::VectorXd::Zero(nb * nb),
                       {},
                       BSplineBasis(data.s_lo, data.s_hi, nb),
                       BSplineBasis(data.d_lo, data.d_hi, nb),
                       nb};

    // vec index = i * nb + j for basis i in s and j in d
    Eigen::VectorXd row = Eigen::VectorXd::Zero(nb * nb);
    for (size_t k = 0; k < data.s.size(); ++k) {
        const Eigen::VectorXd bs = eq.basis_s.eval(data.s[k]);
        const Eigen::VectorXd bd = eq.basis_d.eval(data.d[k]);
        std::vector<int> nonzero;
        nonzero.reserve(16);
        for (int i = 0; i < nb; ++i) {
            if (bs[i] == 0) continue;
            for (int j = 0; j < nb; ++j) {
                if (bd[j] == 0) continue;
                const int idx = i * nb + j;
                row[idx] = bs[i] * bd[j];
                nonzero.push_back(idx);
            }
        }
        for (int p : nonzero) {
            eq.atb[p] += row[p] * data.value[k];
            for (int q : nonzero) eq.ata(p, q) += row[p] * row[q];
        }
        for (int p : nonzero) row[p] = 0;
    }

    const Eigen::MatrixXd p1 = second_difference_penalty(nb);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(nb, nb);
    // (I kron P_s) + (P_d kron I) under vec index i * nb + j
    eq.penalty = Eigen::MatrixXd::Zero(nb * nb, nb * nb);
    for (int i = 0; i < nb; ++i)
        for (int i2 = 0; i2 < nb; ++i2)
            for (int j = 0; j < nb; ++j)
                for (int j2 = 0; j2 < nb; ++j2) {
                    double v = p1(i, i2) * eye(j, j2) + eye(i, i2) * p1(j, j2);
                    if (v != 0) eq.penalty(i * nb + j, i2 * nb + j2) = v;
                }
    return eq;
}

struct Solved {
    Eigen::VectorXd beta;
    double edf;
};

Solved solve_penalized(const NormalEquations& eq, double lambda) {
    const Eigen::MatrixXd lhs = eq.ata + lambda * eq.penalty;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
    if (ldlt.info() != Eigen::Success)
        throw Error("fit_surface: penalised normal equations are singular");
    Solved out;
    out.beta = ldlt.solve(eq.atb);
    // edf = tr[(X^T X + lambda P)^{-1} X^T X]
    out.edf = ldlt.solve(eq.ata).trace();
    return out;
}

PSplineSurface make_surface(const NormalEquations& eq, const Solved& solved, double lambda) {
    Eigen::MatrixXd coef(eq.nb, eq.nb);
    for (int i = 0; i < eq.nb; ++i)
        for (int j = 0; j < eq.nb; ++j) coef(i, j) = solved.beta[i * eq.nb + j];
    return PSplineSurface(eq.basis_s, eq.basis_d, std::move(coef), lambda, solved.edf);
}

} // namespace

PSplineSurface fit_surface_lambda(const SurfaceData& data, double lambda, int basis_count) {
    NormalEquations eq = build_normal_equations(data, basis_count);
    Solved solved = solve_penalized(eq, lambda);
    return make_surface(eq, solved, lambda);
}

PSplineSurface fit_surface(const SurfaceData& data, const SurfaceFitConfig& config) {
    const int nb = config.basis_count;
    const double target = config.target_edf;
    if (double(data.s.size()) < 2 * target)
        throw Error("fit_surface: need at least " + std::to_string(int(2 * target)) +
                    " data points for target edf " + std::to_string(target));
    if (nb * nb < target) throw Error("fit_surface: basis too small for the target edf");

    NormalEquations eq = build_normal_equations(data, nb);

    // achieved edf decreases monotonically in lambda; bracket then bisect in
    // log-lambda
    double lo = 1e-10, hi = 1e10;
    Solved s_lo = solve_penalized(eq, lo);
    Solved s_hi = solve_penalized(eq, hi);
    if (s_lo.edf < target - config.edf_tolerance)
        throw Error("fit_surface: target edf " + std::to_string(target) +
                    " unreachable; achieved at most " + std::to_string(s_lo.edf) +
                    " (degenerate data)");
    if (s_hi.edf > target + config.edf_tolerance)
        throw Error("fit_surface: target edf " + std::to_string(target) +
                    " unreachable; achieved at least " + std::to_string(s_hi.edf) +
                    " (penalty null space too rich)");

    double best_lambda = lo;
    Solved best = s_lo;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = std::sqrt(lo * hi);
        Solved s_mid = solve_penalized(eq, mid);
        if (std::abs(s_mid.edf - target) < std::abs(best.edf - target)) {
            best = s_mid;
            best_lambda = mid;
        }
        if (std::abs(s_mid.edf - target) <= 0.5 * config.edf_tolerance) break;
        if (s_mid.edf > target)
            lo = mid;
        else
            hi = mid;
    }
    if (std::abs(best.edf - target) > config.edf_tolerance)
        throw Error("fit_surface: bisection stalled at edf " + std::to_string(best.edf) +
                    " (target " + std::to_string(target) + ")");
    return make_surface(eq, best, best_lambda);
}

PSplineSurface fit_strength_surface(const FlatDomain& domain, const SurfaceFitConfig& config) {
    SurfaceData data;
    data.s.reserve(domain.points.size());
    for (const auto& p : domain.points) {
        data.s.push_back(p.s);
        data.d.push_back(p.d);
        data.value.push_back(p.nu);
    }
    data.s_lo = 0;
    data.s_hi = domain.baseline_length;
    data.d_lo = domain.d_min();
    data.d_hi = domain.d_max();
    if (data.d_hi - data.d_lo < 1e-9)
        throw Error("fit_strength_surface: flattened domain has no d extent");
    return fit_surface(data, config);
}

} // namespace rvc
