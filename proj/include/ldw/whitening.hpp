#pragma once

// Whitening maps with respect to the inter-cluster covariance: the exact
// population map, the plug-in map built from sample eigenpairs, and the
// corrected map that rescales eigenpairs by their predicted distortion.

#include "ldw/gmm.hpp"
#include "ldw/spiked.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace ldw {

enum class MapKind { population, standard, corrected };

struct DegenerateMapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct WhiteningMap {
    MapKind kind = MapKind::population;
    Eigen::MatrixXd forward;   // K x P
    Eigen::MatrixXd unwhiten;  // P x K; forward * unwhiten = I on active coords
    double sigma2_used = 0.0;
    Eigen::VectorXd lambda;    // per-spike eigenvalue backing each row
    std::vector<spiked::CorrectedSpike> spikes;  // populated for corrected maps
    std::vector<bool> active;  // rows/columns of inactive spikes are zero

    int active_count() const;
};

/// Shared spectral summary of one dataset: noise-variance estimate plus the
/// top-K sample-covariance eigenpairs. Both empirical maps derive from it.
struct EmpiricalSpectrum {
    double sigma2_hat = 0.0;
    double c = 0.0;            // P/N
    Eigen::VectorXd lambda;    // top-K sample eigenvalues, descending
    Eigen::MatrixXd basis;     // P x K sample eigenvectors
};

EmpiricalSpectrum empirical_spectrum(const Eigen::MatrixXd& data, int K);

WhiteningMap population_whitening(const GmmParams& params);

WhiteningMap standard_from_spectrum(const EmpiricalSpectrum& spec);
WhiteningMap corrected_from_spectrum(const EmpiricalSpectrum& spec);

WhiteningMap estimate_standard(const Eigen::MatrixXd& data, int K);
WhiteningMap estimate_corrected(const Eigen::MatrixXd& data, int K);

/// |cosine| matrix between mapped means: entry (i,j) is
/// |<F mu_i, F mu_j>| / (||F mu_i|| ||F mu_j||). Zero-norm entries are NaN.
Eigen::MatrixXd residual_alignment(const WhiteningMap& map, const Eigen::MatrixXd& means);

/// Per-column squared overlaps (u_hat_k^T u_k)^2.
Eigen::VectorXd eigvec_alignment(const Eigen::MatrixXd& data_eigvecs,
                                 const Eigen::MatrixXd& true_eigvecs);

}  // namespace ldw
