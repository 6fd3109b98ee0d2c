#include "ldw/whitening.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ldw {

int WhiteningMap::active_count() const {
    int n = 0;
    for (bool a : active) n += a ? 1 : 0;
    return n;
}

EmpiricalSpectrum empirical_spectrum(const Eigen::MatrixXd& data, int K) {
    const Eigen::Index N = data.rows();
    const Eigen::Index P = data.cols();
    if (K < 1) throw ContractViolation("empirical_spectrum: K must be >= 1");
    if (N <= K) throw ContractViolation("empirical_spectrum: need N > K");

    EmpiricalSpectrum spec;
    spec.sigma2_hat = estimate_sigma2(data);
    spec.c = static_cast<double>(P) / static_cast<double>(N);
    EigenPairs eig = sym_eig_desc(sample_covariance(data));
    spec.lambda = eig.values.head(K);
    spec.basis = eig.vectors.leftCols(K);
    return spec;
}

WhiteningMap population_whitening(const GmmParams& params) {
    PopulationSpectrum spec = population_spectrum(params);
    const int K = params.K;

    WhiteningMap map;
    map.kind = MapKind::population;
    map.sigma2_used = params.sigma2;
    map.lambda = spec.lambda;
    map.active.assign(static_cast<std::size_t>(K), true);
    Eigen::VectorXd scale = spec.gamma.cwiseSqrt();
    map.forward = scale.cwiseInverse().asDiagonal() * spec.basis.transpose();
    map.unwhiten = spec.basis * scale.asDiagonal();
    return map;
}

WhiteningMap standard_from_spectrum(const EmpiricalSpectrum& spec) {
    const Eigen::Index K = spec.lambda.size();

    WhiteningMap map;
    map.kind = MapKind::standard;
    map.sigma2_used = spec.sigma2_hat;
    map.lambda = spec.lambda;
    map.active.assign(static_cast<std::size_t>(K), false);
    map.forward = Eigen::MatrixXd::Zero(K, spec.basis.rows());
    map.unwhiten = Eigen::MatrixXd::Zero(spec.basis.rows(), K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double gamma_hat = spec.lambda(k) - spec.sigma2_hat;
        if (gamma_hat <= 0.0) continue;  // deactivated, not |gamma|
        map.active[static_cast<std::size_t>(k)] = true;
        map.forward.row(k) = spec.basis.col(k).transpose() / std::sqrt(gamma_hat);
        map.unwhiten.col(k) = spec.basis.col(k) * std::sqrt(gamma_hat);
    }
    if (map.active_count() == 0)
        throw DegenerateMapError("standard whitening: no eigenvalue exceeds sigma2_hat");
    return map;
}

WhiteningMap corrected_from_spectrum(const EmpiricalSpectrum& spec) {
    const Eigen::Index K = spec.lambda.size();

    WhiteningMap map;
    map.kind = MapKind::corrected;
    map.sigma2_used = spec.sigma2_hat;
    map.lambda = spec.lambda;
    map.spikes.reserve(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k)
        map.spikes.push_back(spiked::spike_invert(spec.lambda(k), spec.sigma2_hat, spec.c));

    Eigen::VectorXd phi = spiked::phi_scaling(map.spikes, spec.sigma2_hat, spec.c);
    map.active.assign(static_cast<std::size_t>(K), false);
    map.forward = Eigen::MatrixXd::Zero(K, spec.basis.rows());
    map.unwhiten = Eigen::MatrixXd::Zero(spec.basis.rows(), K);
    for (Eigen::Index k = 0; k < K; ++k) {
        if (phi(k) <= 0.0) continue;
        map.active[static_cast<std::size_t>(k)] = true;
        map.forward.row(k) = phi(k) * spec.basis.col(k).transpose();
        map.unwhiten.col(k) = spec.basis.col(k) / phi(k);
    }
    if (map.active_count() == 0) {
        std::ostringstream msg;
        msg << "corrected whitening: no recoverable spike (sigma2_hat=" << spec.sigma2_hat
            << ", c=" << spec.c << ", lambda_hat=";
        for (Eigen::Index k = 0; k < K; ++k) msg << (k ? "," : "[") << spec.lambda(k);
        msg << "])";
        throw DegenerateMapError(msg.str());
    }
    return map;
}

WhiteningMap estimate_standard(const Eigen::MatrixXd& data, int K) {
    return standard_from_spectrum(empirical_spectrum(data, K));
}

WhiteningMap estimate_corrected(const Eigen::MatrixXd& data, int K) {
    return corrected_from_spectrum(empirical_spectrum(data, K));
}

Eigen::MatrixXd residual_alignment(const WhiteningMap& map, const Eigen::MatrixXd& means) {
    Eigen::MatrixXd mapped = map.forward * means;  // K x m
    const Eigen::Index m = mapped.cols();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd rho(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double ni = mapped.col(i).norm();
            const double nj = mapped.col(j).norm();
            rho(i, j) = (ni > 0.0 && nj > 0.0)
                            ? std::abs(mapped.col(i).dot(mapped.col(j))) / (ni * nj)
                            : nan;
        }
    }
    return rho;
}

Eigen::VectorXd eigvec_alignment(const Eigen::MatrixXd& data_eigvecs,
                                 const Eigen::MatrixXd& true_eigvecs) {
    if (data_eigvecs.cols() != true_eigvecs.cols() || data_eigvecs.rows() != true_eigvecs.rows())
        throw ContractViolation("eigvec_alignment: shape mismatch");
    Eigen::VectorXd out(data_eigvecs.cols());
    for (Eigen::Index k = 0; k < data_eigvecs.cols(); ++k) {
        const double d = data_eigvecs.col(k).dot(true_eigvecs.col(k));
        out(k) = d * d;
    }
    return out;
}

}  // namespace ldw
