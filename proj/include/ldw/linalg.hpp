#pragma once

// Deterministic dense linear-algebra and sampling primitives shared by the
// rest of the library: symmetric eigendecomposition with a fixed sign/order
// convention, seeded Gaussian matrices, and exhaustive permutation matching.

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ldw {

/// Eigendecomposition of a symmetric matrix, eigenvalues descending,
/// columns of `vectors` are the matching unit eigenvectors.
struct EigenPairs {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

struct ContractViolation : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Symmetric eigendecomposition with deterministic output:
//  - eigenvalues sorted descending;
//  - each eigenvector's largest-magnitude coordinate made positive
//    (lowest index on ties);
//  - among equal eigenvalues, columns ordered lexicographically descending.
// Throws ContractViolation if S is not symmetric (1e-10 relative tolerance).
EigenPairs sym_eig_desc(const Eigen::MatrixXd& S);

// Stream of standard normals driven by a 64-bit seed. Box-Muller on top of
// a splitmix64 counter, so the byte stream does not depend on the standard
// library's distribution internals.
class NormalRng {
public:
    explicit NormalRng(std::uint64_t seed);

    double next();
    /// Uniform in [0, 1).
    double next_uniform();

private:
    std::uint64_t next_u64();

    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derive a sub-seed from a base seed and a stream index (splitmix64 mix).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// rows x cols matrix of i.i.d. standard normals; bit-identical for
/// identical (rows, cols, seed). Entries are filled row-major.
Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

struct PermutationMatch {
    std::vector<int> permutation;        // estimates[permutation[k]] pairs with targets[k]
    Eigen::VectorXd squared_errors;      // per-k ||estimates[pi(k)] - targets[k]||^2
    double total_squared_error = 0.0;
};

// Exhaustive search over all K! pairings (K <= 8) for the permutation
// minimizing the total squared pairing error.
PermutationMatch match_permutation(const std::vector<Eigen::VectorXd>& estimates,
                                   const std::vector<Eigen::VectorXd>& targets);

}  // namespace ldw
