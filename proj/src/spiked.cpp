#include "ldw/spiked.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ldw::spiked {

SpikeInfo spike_forward(double ell, double sigma2, double c) {
    if (ell < 0.0 || sigma2 <= 0.0 || c <= 0.0)
        throw ContractViolation("spike_forward: need ell >= 0, sigma2 > 0, c > 0");

    SpikeInfo s;
    s.ell = ell;
    s.lambda = sigma2 * (1.0 + ell);
    s.supercritical = ell > std::sqrt(c);
    s.beta = ell > 0.0 ? 1.0 + c / ell : 0.0;
    if (s.supercritical) {
        s.psi = 1.0 - ((s.beta - 1.0) / s.beta) * ((1.0 + ell) / ell);
        s.zeta = s.psi;
        s.lambda_tilde = s.beta * s.lambda;
    } else {
        s.psi = 0.0;
        s.zeta = 0.0;
        s.lambda_tilde = sigma2 * (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
    }
    return s;
}

CorrectedSpike spike_invert(double lambda_hat, double sigma2_hat, double c) {
    if (lambda_hat <= 0.0 || sigma2_hat <= 0.0 || c <= 0.0)
        throw ContractViolation("spike_invert: need lambda_hat, sigma2_hat, c > 0");

    CorrectedSpike s;
    s.lambda_hat = lambda_hat;
    const double r = lambda_hat / sigma2_hat - (1.0 + c);
    const double disc = r * r - 4.0 * c;
    if (disc < 0.0 || r <= 0.0) return s;  // absorbed in the bulk

    const double ell_c = 0.5 * (r + std::sqrt(disc));
    if (!(ell_c > std::sqrt(c))) return s;  // boundary is not recoverable (strict)

    s.ell_c = ell_c;
    s.lambda_c = sigma2_hat * (1.0 + ell_c);
    s.beta_c = 1.0 + c / ell_c;
    s.psi_c = 1.0 - ((s.beta_c - 1.0) / s.beta_c) * ((1.0 + ell_c) / ell_c);
    s.recoverable = true;
    return s;
}

Eigen::VectorXd phi_scaling(const std::vector<CorrectedSpike>& corrected, double sigma2_hat,
                            double c) {
    if (corrected.empty()) throw ContractViolation("phi_scaling: empty spike list");
    (void)c;
    Eigen::VectorXd phi(static_cast<Eigen::Index>(corrected.size()));
    for (std::size_t k = 0; k < corrected.size(); ++k) {
        const CorrectedSpike& s = corrected[k];
        if (!s.recoverable) {
            phi(static_cast<Eigen::Index>(k)) = 0.0;
            continue;
        }
        const double denom = (s.lambda_c - sigma2_hat) * s.psi_c;
        // recoverable implies ell_c > sqrt(c) > 0, hence lambda_c > sigma2_hat
        // and psi_c > 0.
        if (!(denom > 0.0)) throw NumericalError("phi_scaling: nonpositive scale for recoverable spike");
        phi(static_cast<Eigen::Index>(k)) = 1.0 / std::sqrt(denom);
    }
    return phi;
}

Eigen::VectorXd critical_snr(const Eigen::VectorXd& gamma, double c) {
    if (gamma.size() < 1 || gamma.minCoeff() <= 0.0)
        throw ContractViolation("critical_snr: gamma must be positive");
    for (Eigen::Index k = 0; k + 1 < gamma.size(); ++k)
        if (gamma(k) < gamma(k + 1)) throw ContractViolation("critical_snr: gamma must be descending");
    // Spike k crosses the threshold when ell_k = gamma_k/sigma^2 = sqrt(c),
    // i.e. at SNR = sqrt(c)/gamma_k. Equivalent to (sqrt(c)+1)/lambda_k with
    // lambda_k evaluated at the threshold noise level.
    return (std::sqrt(c) / gamma.array()).matrix();
}

AlignmentPrediction predicted_alignment(const PopulationSpectrum& spectrum,
                                        const Eigen::MatrixXd& means, double sigma2, double c) {
    const Eigen::Index K = spectrum.gamma.size();
    if (spectrum.basis.cols() != K || means.rows() != spectrum.basis.rows())
        throw ContractViolation("predicted_alignment: inconsistent spectrum/means");

    Eigen::VectorXd d(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        SpikeInfo s = spike_forward(spectrum.ell(k), sigma2, c);
        d(k) = s.supercritical ? s.psi / (s.lambda_tilde - sigma2) : 0.0;
    }

    // G_inf = (U_K^T mu)^T D (U_K^T mu)
    Eigen::MatrixXd proj = spectrum.basis.transpose() * means;  // K x K
    AlignmentPrediction out;
    out.dots = proj.transpose() * d.asDiagonal() * proj;
    out.dots = 0.5 * (out.dots + out.dots.transpose()).eval();

    const Eigen::Index m = means.cols();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.rho.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double di = out.dots(i, i);
            const double dj = out.dots(j, j);
            out.rho(i, j) = (di > 0.0 && dj > 0.0)
                                ? std::abs(out.dots(i, j)) / std::sqrt(di * dj)
                                : nan;
        }
    }
    return out;
}

double k2_closed_form(double ell1, double ell2, double c) {
    if (c <= 0.0) throw ContractViolation("k2_closed_form: c must be positive");
    if (!(ell1 > std::sqrt(c)) || !(ell2 > std::sqrt(c)))
        throw std::domain_error("k2_closed_form: both spikes must exceed sqrt(c)");
    auto q = [c](double ell) {
        return (std::pow(ell, 4) - c * ell * ell) /
               (ell * (ell + c) * (ell * ell + c * ell + c));
    };
    const double q1 = q(ell1);
    const double q2 = q(ell2);
    return (q1 - q2) / (q1 + q2);
}

}  // namespace ldw::spiked
