#pragma once

// Spherical Gaussian mixture ground truth: parameter container, synthetic
// sampling, population second-moment structure and the noise-variance
// estimator. Covariances are uncentered throughout.

#include "ldw/linalg.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace ldw {

struct GmmParams {
    int K = 0;
    int P = 0;
    Eigen::VectorXd weights;  // length K, strictly positive, sums to 1
    Eigen::MatrixXd means;    // P x K, column k is mu_k
    double sigma2 = 0.0;

    /// Throws ContractViolation if the invariants do not hold
    /// (positive weights summing to 1, full-rank inter-cluster covariance).
    void validate() const;
};

/// Top-K spectrum of M2 = sum_k w_k mu_k mu_k^T together with the derived
/// spike quantities: gamma_k (eigenvalues of M2), lambda_k = gamma_k + sigma^2,
/// ell_k = gamma_k / sigma^2.
struct PopulationSpectrum {
    Eigen::VectorXd gamma;    // descending
    Eigen::VectorXd lambda;
    Eigen::VectorXd ell;
    Eigen::MatrixXd basis;    // P x K orthonormal eigenvectors of M2 (U_K)
};

// Realize a mean configuration from its Gram matrix: returns a P x K matrix M
// with M^T M = gram, columns spanning a seeded uniformly-random K-dimensional
// subspace. Throws std::domain_error if gram is not positive definite.
Eigen::MatrixXd means_from_gram(int P, const Eigen::MatrixXd& gram, std::uint64_t seed);

struct GmmSample {
    Eigen::MatrixXd data;        // N x P, one observation per row
    std::vector<int> labels;     // component index per row
};

/// Draw N i.i.d. observations. Row n depends only on (seed, n), so the
/// sample is reproducible and exchangeable in row order.
GmmSample sample(const GmmParams& params, Eigen::Index N, std::uint64_t seed);

/// Top-K eigenstructure of M2, computed in the K x K reduced space.
/// Throws std::domain_error if the K-th eigenvalue is below 1e-10.
PopulationSpectrum population_spectrum(const GmmParams& params);

/// Uncentered sample covariance (1/N) X^T X.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& data);

/// Noise-variance estimator (1/(N P)) sum_n ||x_n||^2.
double estimate_sigma2(const Eigen::MatrixXd& data);

}  // namespace ldw
