#pragma once

#include "rvc/core.hpp"
#include "rvc/correspondence.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace rvc {

struct PcaResult {
    Eigen::VectorXd mean;              // vectorised mean shape (3k)
    Eigen::MatrixXd components;        // 3k x q, orthonormal columns
    Eigen::VectorXd eigenvalues;       // length q, non-increasing
    Eigen::MatrixXd scores;            // n x q
    Eigen::VectorXd variance_fraction; // length q, sums to 1

    /// Smallest number of components reaching the requested cumulative
    /// variance fraction.
    int components_for_variance(double fraction) const;
};

/// PCA of vectorised aligned configurations via SVD of the centred data
/// matrix (rank-safe when n < dimension).
PcaResult pca(const std::vector<ShapeConfiguration>& aligned);

/// Two-sided permutation p-value of the pooled two-sample t statistic.
/// p = (1 + #{permuted |t| >= observed}) / (n_perm + 1); the permutation
/// stream is a pure function of (seed, permutation index).
double perm_test_t(const std::vector<double>& values, const std::vector<int>& labels,
                   int n_perm = 1000, std::uint64_t seed = 1);

/// Permutation p-value of Hotelling's T^2 on multivariate scores (rows =
/// observations).  Throws when the pooled covariance is singular.
double perm_test_hotelling(const Eigen::MatrixXd& scores, const std::vector<int>& labels,
                           int n_perm = 1000, std::uint64_t seed = 1);

/// Per-component permutation test: the t machinery applied to one score
/// column.
double perm_test_component(const Eigen::VectorXd& score, const std::vector<int>& labels,
                           int n_perm = 1000, std::uint64_t seed = 1);

/// Observed pooled two-sample t statistic (exposed for oracles).
double two_sample_t(const std::vector<double>& values, const std::vector<int>& labels);

/// Observed Hotelling T^2 statistic (exposed for oracles).
double hotelling_t2(const Eigen::MatrixXd& scores, const std::vector<int>& labels);

} // namespace rvc
