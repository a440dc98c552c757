#include "rvc/shapestats.hpp"

#include "rvc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rvc {

int PcaResult::components_for_variance(double fraction) const {
    double cum = 0;
    for (int q = 0; q < variance_fraction.size(); ++q) {
        cum += variance_fraction[q];
        if (cum >= fraction) return q + 1;
    }
    return int(variance_fraction.size());
}

PcaResult pca(const std::vector<ShapeConfiguration>& aligned) {
    if (aligned.size() < 2) throw Error("pca: need at least 2 configurations");
    const int n = int(aligned.size());
    const int p = 3 * int(aligned[0].points.size());
    for (const auto& c : aligned)
        if (!c.same_layout(aligned[0]))
            throw Error("pca: configurations have different semantic tables");

    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < int(aligned[size_t(i)].points.size()); ++j)
            x.block<1, 3>(i, 3 * j) = aligned[size_t(i)].points[size_t(j)].transpose();

    PcaResult result;
    result.mean = x.colwise().mean().transpose();
    Eigen::MatrixXd centered = x.rowwise() - result.mean.transpose();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    // keep components with nonzero variance
    int q = 0;
    const double tol = std::max(1.0, sv.size() > 0 ? sv[0] : 0.0) * 1e-12;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > tol) ++q;
    q = std::max(q, 1);

    result.components = svd.matrixV().leftCols(q);
    result.eigenvalues.resize(q);
    for (int i = 0; i < q; ++i) result.eigenvalues[i] = sv[i] * sv[i] / double(n - 1);
    result.scores = centered * result.components;

    const double total = sv.array().square().sum();
    result.variance_fraction.resize(q);
    for (int i = 0; i < q; ++i)
        result.variance_fraction[i] = total > 0 ? sv[i] * sv[i] / total : 0.0;
    return result;
}

namespace {

void split_counts(const std::vector<int>& labels, int& n0, int& n1) {
    n0 = n1 = 0;
    for (int l : labels) (l == 0 ? n0 : n1)++;
    if (n0 == 0 || n1 == 0)
        throw Error("permutation test: both groups must be non-empty");
}

} // namespace

double two_sample_t(const std::vector<double>& values, const std::vector<int>& labels) {
    if (values.size() != labels.size()) throw Error("two_sample_t: size mismatch");
    int n0, n1;
    split_counts(labels, n0, n1);
    double sum0 = 0, sum1 = 0;
    for (size_t i = 0; i < values.size(); ++i) (labels[i] == 0 ? sum0 : sum1) += values[i];
    const double m0 = sum0 / n0, m1 = sum1 / n1;
    double ss = 0;
    for (size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - (labels[i] == 0 ? m0 : m1);
        ss += d * d;
    }
    const int dof = n0 + n1 - 2;
    if (dof <= 0) throw Error("two_sample_t: not enough observations");
    const double pooled = ss / dof;
    const double se = std::sqrt(pooled * (1.0 / n0 + 1.0 / n1));
    if (!(se > 0)) return 0;
    return (m0 - m1) / se;
}

double hotelling_t2(const Eigen::MatrixXd& scores, const std::vector<int>& labels) {
    const int n = int(scores.rows());
    const int q = int(scores.cols());
    if (int(labels.size()) != n) throw Error("hotelling_t2: size mismatch");
    int n0, n1;
    split_counts(labels, n0, n1);
    if (n0 <= q || n1 <= q)
        throw Error("hotelling_t2: group sizes must exceed the number of components");

    Eigen::VectorXd m0 = Eigen::VectorXd::Zero(q), m1 = Eigen::VectorXd::Zero(q);
    for (int i = 0; i < n; ++i) (labels[size_t(i)] == 0 ? m0 : m1) += scores.row(i).transpose();
    m0 /= n0;
    m1 /= n1;

    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(q, q);
    for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd d =
            scores.row(i).transpose() - (labels[size_t(i)] == 0 ? m0 : m1);
        pooled += d * d.transpose();
    }
    pooled /= double(n0 + n1 - 2);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(pooled);
    if (!lu.isInvertible())
        throw Error("hotelling_t2: singular pooled covariance; use fewer components");
    const Eigen::VectorXd diff = m0 - m1;
    return double(n0) * double(n1) / double(n0 + n1) * diff.dot(lu.solve(diff));
}

namespace {

/// Shared add-one permutation machinery: statistic must return "extremeness"
/// (larger = more extreme).
template <typename Statistic>
double permutation_p(const std::vector<int>& labels, int n_perm, std::uint64_t seed,
                     Statistic&& statistic) {
    if (n_perm < 1) throw Error("permutation test: n_perm must be >= 1");
    const double observed = statistic(labels);
    int hits = 0;
    std::vector<int> perm(labels);
    for (int r = 0; r < n_perm; ++r) {
        StreamRng rng(seed, std::uint64_t(r) + 1);
        perm = labels;
        rng.shuffle(perm);
        if (statistic(perm) >= observed) ++hits;
    }
    return double(1 + hits) / double(n_perm + 1);
}

} // namespace

double perm_test_t(const std::vector<double>& values, const std::vector<int>& labels,
                   int n_perm, std::uint64_t seed) {
    return permutation_p(labels, n_perm, seed, [&](const std::vector<int>& l) {
        return std::abs(two_sample_t(values, l));
    });
}

double perm_test_hotelling(const Eigen::MatrixXd& scores, const std::vector<int>& labels,
                           int n_perm, std::uint64_t seed) {
    return permutation_p(labels, n_perm, seed, [&](const std::vector<int>& l) {
        return hotelling_t2(scores, l);
    });
}

double perm_test_component(const Eigen::VectorXd& score, const std::vector<int>& labels,
                           int n_perm, std::uint64_t seed) {
    std::vector<double> values(score.data(), score.data() + score.size());
    return perm_test_t(values, labels, n_perm, seed);
}

} // namespace rvc
