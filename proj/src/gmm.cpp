#include "ldw/gmm.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ldw {

void GmmParams::validate() const {
    if (K < 1 || P < 1) throw ContractViolation("GmmParams: K and P must be >= 1");
    if (weights.size() != K) throw ContractViolation("GmmParams: weights length != K");
    if (means.rows() != P || means.cols() != K)
        throw ContractViolation("GmmParams: means must be P x K");
    if (sigma2 < 0.0) throw ContractViolation("GmmParams: sigma2 must be nonnegative");
    if (weights.minCoeff() <= 0.0)
        throw ContractViolation("GmmParams: weights must be strictly positive");
    if (std::abs(weights.sum() - 1.0) > 1e-12)
        throw ContractViolation("GmmParams: weights must sum to 1");

    // Rank check on M2 via the K x K reduced form.
    Eigen::MatrixXd B = weights.cwiseSqrt().asDiagonal() * (means.transpose() * means) *
                        weights.cwiseSqrt().asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(B);
    if (solver.eigenvalues().minCoeff() <= 1e-10)
        throw ContractViolation("GmmParams: inter-cluster covariance M2 is rank deficient");
}

Eigen::MatrixXd means_from_gram(int P, const Eigen::MatrixXd& gram, std::uint64_t seed) {
    const Eigen::Index K = gram.rows();
    if (gram.cols() != K) throw ContractViolation("means_from_gram: gram must be square");
    if (P < K) throw ContractViolation("means_from_gram: P must be >= K");
    if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, gram.cwiseAbs().maxCoeff()))
        throw ContractViolation("means_from_gram: gram must be symmetric");

    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("means_from_gram: gram is not positive definite");

    // Orthonormal basis of a random K-dimensional subspace.
    Eigen::MatrixXd G = gaussian_matrix(P, K, seed);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(P, K);

    // M = Q L^T gives M^T M = L L^T = gram.
    return Q * Eigen::MatrixXd(llt.matrixL()).transpose();
}

GmmSample sample(const GmmParams& params, Eigen::Index N, std::uint64_t seed) {
    params.validate();
    if (N < 1) throw ContractViolation("sample: N must be >= 1");

    const int K = params.K;
    const int P = params.P;
    const double sigma = std::sqrt(params.sigma2);

    Eigen::VectorXd cumweights(K);
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
        acc += params.weights(k);
        cumweights(k) = acc;
    }
    cumweights(K - 1) = 1.0;

    GmmSample out;
    out.data.resize(N, P);
    out.labels.resize(static_cast<std::size_t>(N));
    for (Eigen::Index n = 0; n < N; ++n) {
        NormalRng rng(mix_seed(seed, static_cast<std::uint64_t>(n)));
        const double u = rng.next_uniform();
        int label = 0;
        while (label < K - 1 && u >= cumweights(label)) ++label;
        out.labels[static_cast<std::size_t>(n)] = label;
        for (int p = 0; p < P; ++p)
            out.data(n, p) = params.means(p, label) + sigma * rng.next();
    }
    return out;
}

PopulationSpectrum population_spectrum(const GmmParams& params) {
    params.validate();
    const int K = params.K;

    // Reduced eigenproblem: B = diag(sqrt(w)) M^T M diag(sqrt(w)) shares its
    // nonzero spectrum with M2 = sum_k w_k mu_k mu_k^T.
    Eigen::VectorXd sqw = params.weights.cwiseSqrt();
    Eigen::MatrixXd A = params.means * sqw.asDiagonal();  // P x K, M2 = A A^T
    Eigen::MatrixXd B = A.transpose() * A;
    B = 0.5 * (B + B.transpose());
    EigenPairs eig = sym_eig_desc(B);

    if (eig.values(K - 1) <= 1e-10)
        throw std::domain_error("population_spectrum: M2 rank deficient (gamma_K <= 1e-10)");

    PopulationSpectrum spec;
    spec.gamma = eig.values;
    spec.lambda = eig.values.array() + params.sigma2;
    spec.ell = eig.values / params.sigma2;
    spec.basis.resize(params.P, K);
    for (int k = 0; k < K; ++k)
        spec.basis.col(k) = (A * eig.vectors.col(k)) / std::sqrt(eig.values(k));
    return spec;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& data) {
    if (data.rows() < 1) throw ContractViolation("sample_covariance: need at least one row");
    Eigen::MatrixXd S = (data.transpose() * data) / static_cast<double>(data.rows());
    return 0.5 * (S + S.transpose());
}

double estimate_sigma2(const Eigen::MatrixXd& data) {
    if (data.rows() < 1 || data.cols() < 1)
        throw ContractViolation("estimate_sigma2: empty data");
    return data.squaredNorm() / (static_cast<double>(data.rows()) * static_cast<double>(data.cols()));
}

}  // namespace ldw
