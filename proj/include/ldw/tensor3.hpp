#pragma once

// Symmetric order-3 tensors on the whitened K-dimensional space, the
// third-moment estimators (standard and corrected coefficients), the
// random-contraction orthogonal decomposition, and end-to-end mixture
// parameter recovery.

#include "ldw/whitening.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace ldw {

class SymTensor3 {
public:
    SymTensor3() = default;
    explicit SymTensor3(int dim);

    int dim() const { return dim_; }
    double& at(int a, int b, int c) { return entries_[index(a, b, c)]; }
    double at(int a, int b, int c) const { return entries_[index(a, b, c)]; }

    /// T(v, v, v).
    double apply(const Eigen::VectorXd& v) const;

    void symmetrize();
    double max_abs_diff(const SymTensor3& other) const;
    double max_abs() const;

    SymTensor3& operator+=(const SymTensor3& other);
    SymTensor3& operator*=(double s);

private:
    std::size_t index(int a, int b, int c) const {
        return (static_cast<std::size_t>(a) * dim_ + b) * dim_ + c;
    }

    int dim_ = 0;
    std::vector<double> entries_;
};

struct DegenerateSpectrumError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Which correction coefficient multiplies the mean-term of the third-moment
// estimator. `paper` is the conventional sigma^2-based coefficient;
// `derived` rescales it by the squared row norm of the whitening map, which
// is what the population limit of the plug-in moment requires. `derived`
// is the validated default.
enum class CoefficientVariant { paper, derived };

constexpr CoefficientVariant kDefaultCoefficientVariant = CoefficientVariant::derived;

/// sum_k w_k^{-1/2} v_k^{x3} for orthonormal columns v_k.
SymTensor3 planted_tensor(const Eigen::VectorXd& weights, const Eigen::MatrixXd& vectors);

/// out[a,b,c] = sum_{ijk} T[i,j,k] A(a,i) A(b,j) A(c,k).
SymTensor3 multilinear_transform(const SymTensor3& T, const Eigen::MatrixXd& A);

/// out(a,b) = sum_c T[a,b,c] theta(c).
Eigen::MatrixXd contract_to_matrix(const SymTensor3& T, const Eigen::VectorXd& theta);

// Plug-in whitened third moment: empirical third moment of the whitened
// rows minus the noise term built from the whitened sample mean, with the
// per-axis coefficient chosen by (map.kind, variant).
SymTensor3 estimate_m3(const Eigen::MatrixXd& whitened_data, const WhiteningMap& map,
                       double sigma2_hat,
                       CoefficientVariant variant = kDefaultCoefficientVariant);

struct DecompositionResult {
    Eigen::MatrixXd vectors;          // K x K, columns are recovered v_k
    Eigen::VectorXd weights;          // recovered w_k
    Eigen::VectorXd contraction_vector;
    double gap = 0.0;                 // smallest eigenvalue gap / spectral scale
    int retries = 0;                  // index of the contraction draw used
    std::vector<bool> reliable;       // false where T(v,v,v) was nonpositive
};

// Random-contraction decomposition of an orthogonally decomposable tensor:
// contract with a unit Gaussian vector, eigendecompose, read the components
// off the eigenvectors. All max_retries+1 seeded contraction draws are
// evaluated and the best-conditioned one (largest smallest-gap relative to
// the spectral scale) is used; throws if even that falls below gap_tol.
DecompositionResult decompose(const SymTensor3& T, std::uint64_t seed, double gap_tol = 1e-3,
                              int max_retries = 10);

struct LearnGmmResult {
    Eigen::MatrixXd means;     // P x K, column order as produced
    Eigen::VectorXd weights;
    double sigma2_hat = 0.0;
    DecompositionResult decomposition;
    std::vector<bool> map_active;
};

// Two-batch moment pipeline: whitening map from the first half of the rows,
// third moment from the second half, then decomposition and unwhitening.
LearnGmmResult learn_gmm(const Eigen::MatrixXd& data, int K, bool use_corrected,
                         CoefficientVariant variant, std::uint64_t seed);

}  // namespace ldw
