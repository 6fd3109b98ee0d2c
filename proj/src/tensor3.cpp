#include "ldw/tensor3.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ldw {

SymTensor3::SymTensor3(int dim) : dim_(dim) {
    if (dim < 1) throw ContractViolation("SymTensor3: dim must be >= 1");
    entries_.assign(static_cast<std::size_t>(dim) * dim * dim, 0.0);
}

double SymTensor3::apply(const Eigen::VectorXd& v) const {
    double acc = 0.0;
    for (int a = 0; a < dim_; ++a)
        for (int b = 0; b < dim_; ++b)
            for (int c = 0; c < dim_; ++c) acc += at(a, b, c) * v(a) * v(b) * v(c);
    return acc;
}

void SymTensor3::symmetrize() {
    for (int a = 0; a < dim_; ++a) {
        for (int b = a; b < dim_; ++b) {
            for (int c = b; c < dim_; ++c) {
                const double avg = (at(a, b, c) + at(a, c, b) + at(b, a, c) + at(b, c, a) +
                                    at(c, a, b) + at(c, b, a)) /
                                   6.0;
                at(a, b, c) = at(a, c, b) = at(b, a, c) = at(b, c, a) = at(c, a, b) =
                    at(c, b, a) = avg;
            }
        }
    }
}

double SymTensor3::max_abs_diff(const SymTensor3& other) const {
    if (other.dim_ != dim_) throw ContractViolation("SymTensor3: dimension mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        m = std::max(m, std::abs(entries_[i] - other.entries_[i]));
    return m;
}

double SymTensor3::max_abs() const {
    double m = 0.0;
    for (double e : entries_) m = std::max(m, std::abs(e));
    return m;
}

SymTensor3& SymTensor3::operator+=(const SymTensor3& other) {
    if (other.dim_ != dim_) throw ContractViolation("SymTensor3: dimension mismatch");
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += other.entries_[i];
    return *this;
}

SymTensor3& SymTensor3::operator*=(double s) {
    for (double& e : entries_) e *= s;
    return *this;
}

SymTensor3 planted_tensor(const Eigen::VectorXd& weights, const Eigen::MatrixXd& vectors) {
    const int K = static_cast<int>(vectors.cols());
    if (weights.size() != K || vectors.rows() != K)
        throw ContractViolation("planted_tensor: vectors must be K x K with K weights");
    if (weights.minCoeff() <= 0.0) throw ContractViolation("planted_tensor: weights must be positive");
    Eigen::MatrixXd gram = vectors.transpose() * vectors;
    if ((gram - Eigen::MatrixXd::Identity(K, K)).cwiseAbs().maxCoeff() > 1e-8)
        throw ContractViolation("planted_tensor: vectors not orthonormal");

    SymTensor3 T(K);
    for (int k = 0; k < K; ++k) {
        const double w = 1.0 / std::sqrt(weights(k));
        for (int a = 0; a < K; ++a)
            for (int b = 0; b < K; ++b)
                for (int c = 0; c < K; ++c)
                    T.at(a, b, c) += w * vectors(a, k) * vectors(b, k) * vectors(c, k);
    }
    return T;
}

SymTensor3 multilinear_transform(const SymTensor3& T, const Eigen::MatrixXd& A) {
    if (A.cols() != T.dim()) throw ContractViolation("multilinear_transform: A column count != T.dim");
    const int n = T.dim();
    const int m = static_cast<int>(A.rows());

    // Contract one mode at a time.
    std::vector<double> t1(static_cast<std::size_t>(m) * n * n, 0.0);
    for (int a = 0; a < m; ++a)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double acc = 0.0;
                for (int i = 0; i < n; ++i) acc += T.at(i, j, k) * A(a, i);
                t1[(static_cast<std::size_t>(a) * n + j) * n + k] = acc;
            }
    std::vector<double> t2(static_cast<std::size_t>(m) * m * n, 0.0);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int k = 0; k < n; ++k) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j)
                    acc += t1[(static_cast<std::size_t>(a) * n + j) * n + k] * A(b, j);
                t2[(static_cast<std::size_t>(a) * m + b) * n + k] = acc;
            }
    SymTensor3 out(m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int c = 0; c < m; ++c) {
                double acc = 0.0;
                for (int k = 0; k < n; ++k)
                    acc += t2[(static_cast<std::size_t>(a) * m + b) * n + k] * A(c, k);
                out.at(a, b, c) = acc;
            }
    out.symmetrize();
    return out;
}

Eigen::MatrixXd contract_to_matrix(const SymTensor3& T, const Eigen::VectorXd& theta) {
    if (theta.size() != T.dim()) throw ContractViolation("contract_to_matrix: dimension mismatch");
    const int n = T.dim();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            double acc = 0.0;
            for (int c = 0; c < n; ++c) acc += T.at(a, b, c) * theta(c);
            M(a, b) = acc;
        }
    return 0.5 * (M + M.transpose());
}

namespace {

Eigen::VectorXd mean_term_coefficients(const WhiteningMap& map, double sigma2_hat,
                                       CoefficientVariant variant) {
    const Eigen::Index K = map.forward.rows();
    Eigen::VectorXd coeff = Eigen::VectorXd::Zero(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        if (!map.active[static_cast<std::size_t>(k)]) continue;
        if (variant == CoefficientVariant::derived) {
            // sigma2 * (F F^T)_kk, the population-limit coefficient.
            coeff(k) = sigma2_hat * map.forward.row(k).squaredNorm();
        } else if (map.kind == MapKind::corrected) {
            const spiked::CorrectedSpike& s = map.spikes[static_cast<std::size_t>(k)];
            coeff(k) = sigma2_hat / (s.lambda_c * s.psi_c);
        } else {
            coeff(k) = sigma2_hat;
        }
    }
    return coeff;
}

}  // namespace

SymTensor3 estimate_m3(const Eigen::MatrixXd& whitened_data, const WhiteningMap& map,
                       double sigma2_hat, CoefficientVariant variant) {
    const Eigen::Index N = whitened_data.rows();
    const int K = static_cast<int>(whitened_data.cols());
    if (N < 1) throw ContractViolation("estimate_m3: no data");
    if (map.forward.rows() != K) throw ContractViolation("estimate_m3: map/data dimension mismatch");

    SymTensor3 T(K);
    for (Eigen::Index n = 0; n < N; ++n) {
        const auto row = whitened_data.row(n);
        for (int a = 0; a < K; ++a)
            for (int b = 0; b < K; ++b)
                for (int c = 0; c < K; ++c) T.at(a, b, c) += row(a) * row(b) * row(c);
    }
    T *= 1.0 / static_cast<double>(N);

    const Eigen::VectorXd xi_bar = whitened_data.colwise().mean();
    const Eigen::VectorXd coeff = mean_term_coefficients(map, sigma2_hat, variant);
    for (int k = 0; k < K; ++k) {
        const double ck = coeff(k);
        if (ck == 0.0) continue;
        for (int a = 0; a < K; ++a) {
            // xi_bar (x) e_k (x) e_k plus the two other placements
            T.at(a, k, k) -= ck * xi_bar(a);
            T.at(k, a, k) -= ck * xi_bar(a);
            T.at(k, k, a) -= ck * xi_bar(a);
        }
    }
    T.symmetrize();
    return T;
}

DecompositionResult decompose(const SymTensor3& T, std::uint64_t seed, double gap_tol,
                              int max_retries) {
    const int K = T.dim();

    // The eigenvectors of the contracted matrix degrade like
    // (perturbation)/(eigenvalue gap), so try every candidate contraction
    // vector and keep the one whose smallest gap is largest relative to the
    // spectral scale. Note the scale is max |eigenvalue|, not the range: a
    // contraction that nearly merges all eigenvalues has a tiny range but a
    // large scale, and must rank as badly conditioned.
    int best_attempt = -1;
    double best_quality = 0.0;
    Eigen::VectorXd best_theta;
    EigenPairs best_eig;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        Eigen::VectorXd theta = gaussian_matrix(K, 1, mix_seed(seed, static_cast<std::uint64_t>(attempt)));
        theta.normalize();
        EigenPairs eig = sym_eig_desc(contract_to_matrix(T, theta));

        const double scale = std::max(std::abs(eig.values(0)), std::abs(eig.values(K - 1)));
        double min_gap = K > 1 ? std::numeric_limits<double>::infinity() : 1.0;
        for (int k = 0; k + 1 < K; ++k)
            min_gap = std::min(min_gap, eig.values(k) - eig.values(k + 1));
        const double quality = K > 1 ? (scale > 0.0 ? min_gap / scale : 0.0) : 1.0;
        if (quality > best_quality) {
            best_quality = quality;
            best_attempt = attempt;
            best_theta = std::move(theta);
            best_eig = std::move(eig);
        }
    }
    if (best_attempt < 0 || best_quality < gap_tol) {
        std::ostringstream msg;
        msg << "decompose: eigenvalue gap below tolerance over " << (max_retries + 1)
            << " contraction draws (best relative gap " << best_quality << ")";
        throw DegenerateSpectrumError(msg.str());
    }

    DecompositionResult out;
    out.vectors.resize(K, K);
    out.weights.resize(K);
    out.reliable.assign(static_cast<std::size_t>(K), true);
    out.contraction_vector = best_theta;
    out.gap = best_quality;
    out.retries = best_attempt;
    for (int k = 0; k < K; ++k) {
        Eigen::VectorXd v = best_eig.vectors.col(k);
        double t = T.apply(v);
        if (t < 0.0) {
            v = -v;
            t = -t;
        }
        out.vectors.col(k) = v;
        if (t > 0.0) {
            out.weights(k) = 1.0 / (t * t);
        } else {
            out.weights(k) = 0.0;
            out.reliable[static_cast<std::size_t>(k)] = false;
        }
    }
    return out;
}

LearnGmmResult learn_gmm(const Eigen::MatrixXd& data, int K, bool use_corrected,
                         CoefficientVariant variant, std::uint64_t seed) {
    const Eigen::Index total = data.rows();
    if (total < 4 || total % 2 != 0) throw ContractViolation("learn_gmm: need an even number (2N) of rows");
    const Eigen::Index N = total / 2;

    const Eigen::MatrixXd first = data.topRows(N);
    const Eigen::MatrixXd second = data.bottomRows(N);

    EmpiricalSpectrum spec = empirical_spectrum(first, K);
    WhiteningMap map = use_corrected ? corrected_from_spectrum(spec) : standard_from_spectrum(spec);

    const Eigen::MatrixXd whitened = second * map.forward.transpose();  // N x K
    SymTensor3 T = estimate_m3(whitened, map, map.sigma2_used, variant);
    DecompositionResult dec = decompose(T, mix_seed(seed, 0x7e3a));

    LearnGmmResult out;
    out.sigma2_hat = map.sigma2_used;
    out.decomposition = dec;
    out.map_active = map.active;
    out.weights = dec.weights;
    out.means.resize(data.cols(), K);
    for (int k = 0; k < K; ++k) {
        const double w = dec.weights(k);
        const double scale = w > 0.0 ? 1.0 / std::sqrt(w) : 0.0;
        out.means.col(k) = scale * (map.unwhiten * dec.vectors.col(k));
    }
    return out;
}

}  // namespace ldw
