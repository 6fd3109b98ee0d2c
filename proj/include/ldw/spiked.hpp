#pragma once

// Closed-form spiked-covariance quantities in the proportional regime
// c = P/N: forward limits of sample eigenvalues and eigenvector overlaps,
// the inverse (corrected) spike map, the corrected whitening scales, and
// the asymptotic residual alignment between whitened means.

#include "ldw/gmm.hpp"

#include <Eigen/Dense>

#include <vector>

namespace ldw::spiked {

/// Asymptotic behaviour of one population spike ell under aspect ratio c.
struct SpikeInfo {
    double ell = 0.0;           // population spike (lambda - sigma^2)/sigma^2
    double lambda = 0.0;        // population eigenvalue sigma^2 (1 + ell)
    double beta = 0.0;          // 1 + c/ell (0 when ell == 0)
    double psi = 0.0;           // overlap factor, 0 below the transition
    double zeta = 0.0;          // limiting squared alignment (u_hat, u)
    double lambda_tilde = 0.0;  // limit of the sample eigenvalue
    bool supercritical = false; // ell > sqrt(c), strict
};

/// Inverse map: corrected spike recovered from a sample eigenvalue.
struct CorrectedSpike {
    double lambda_hat = 0.0;   // input sample eigenvalue
    double ell_c = 0.0;
    double lambda_c = 0.0;     // sigma2_hat (1 + ell_c)
    double beta_c = 0.0;
    double psi_c = 0.0;
    bool recoverable = false;  // discriminant >= 0 and ell_c > sqrt(c)
};

SpikeInfo spike_forward(double ell, double sigma2, double c);

CorrectedSpike spike_invert(double lambda_hat, double sigma2_hat, double c);

/// Diagonal of the corrected whitening scale Phi: entry k is
/// 1/sqrt((lambda_c_k - sigma2_hat) psi_c_k) for recoverable spikes, else 0.
Eigen::VectorXd phi_scaling(const std::vector<CorrectedSpike>& corrected, double sigma2_hat,
                            double c);

/// SNR (= 1/sigma^2) at which each spike crosses the detectability
/// threshold: sqrt(c) / gamma_k.
Eigen::VectorXd critical_snr(const Eigen::VectorXd& gamma, double c);

struct AlignmentPrediction {
    Eigen::MatrixXd dots;  // limits of <W_hat mu_i, W_hat mu_j>
    Eigen::MatrixXd rho;   // limiting |cosines|; NaN where a diagonal vanishes
};

// Limiting dot products between standard-whitened means and the induced
// residual alignment. rho entries whose diagonal limit is zero are NaN.
AlignmentPrediction predicted_alignment(const PopulationSpectrum& spectrum,
                                        const Eigen::MatrixXd& means, double sigma2, double c);

// K=2 equal-weight unit-mean closed form for the limiting residual
// alignment. Requires both spikes strictly above sqrt(c).
double k2_closed_form(double ell1, double ell2, double c);

}  // namespace ldw::spiked
