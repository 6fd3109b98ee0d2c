#include "ldw/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace ldw {

namespace {

constexpr double kSymTol = 1e-10;

// Lexicographic comparison of columns, descending.
bool col_lex_greater(const Eigen::MatrixXd& V, Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
        if (V(i, a) != V(i, b)) return V(i, a) > V(i, b);
    }
    return false;
}

void fix_column_sign(Eigen::MatrixXd& V, Eigen::Index col) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < V.rows(); ++i) {
        double m = std::abs(V(i, col));
        if (m > best) {
            best = m;
            arg = i;
        }
    }
    if (V(arg, col) < 0.0) V.col(col) = -V.col(col);
}

}  // namespace

EigenPairs sym_eig_desc(const Eigen::MatrixXd& S) {
    if (S.rows() != S.cols()) throw ContractViolation("sym_eig_desc: matrix must be square");
    const double scale = S.cwiseAbs().maxCoeff();
    const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
    if (scale > 0.0 && asym > kSymTol * scale) {
        std::ostringstream msg;
        msg << "sym_eig_desc: input not symmetric, relative asymmetry " << asym / scale;
        throw ContractViolation(msg.str());
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("sym_eig_desc: eigensolver failed to converge");
    }

    const Eigen::Index m = S.rows();
    EigenPairs out;
    out.values.resize(m);
    out.vectors.resize(m, m);
    // Eigen returns ascending order.
    for (Eigen::Index i = 0; i < m; ++i) {
        out.values(i) = solver.eigenvalues()(m - 1 - i);
        out.vectors.col(i) = solver.eigenvectors().col(m - 1 - i);
    }
    for (Eigen::Index i = 0; i < m; ++i) fix_column_sign(out.vectors, i);

    // Ties: order equal eigenvalues by descending lexicographic column order.
    const double tie_tol = 1e-12 * std::max(1.0, scale);
    Eigen::Index i = 0;
    while (i < m) {
        Eigen::Index j = i + 1;
        while (j < m && out.values(i) - out.values(j) <= tie_tol) ++j;
        if (j - i > 1) {
            std::vector<Eigen::Index> idx(static_cast<std::size_t>(j - i));
            std::iota(idx.begin(), idx.end(), i);
            std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
                return col_lex_greater(out.vectors, a, b);
            });
            Eigen::MatrixXd block(m, j - i);
            Eigen::VectorXd vals(j - i);
            for (Eigen::Index k = 0; k < j - i; ++k) {
                block.col(k) = out.vectors.col(idx[static_cast<std::size_t>(k)]);
                vals(k) = out.values(idx[static_cast<std::size_t>(k)]);
            }
            out.vectors.middleCols(i, j - i) = block;
            out.values.segment(i, j - i) = vals;
        }
        i = j;
    }
    return out;
}

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

NormalRng::NormalRng(std::uint64_t seed) : state_(seed) {}

std::uint64_t NormalRng::next_u64() { return splitmix64(state_); }

double NormalRng::next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double NormalRng::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = next_uniform();
    // u1 must be strictly positive for the log.
    while (u1 <= 0.0) u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL + (stream << 1));
    (void)splitmix64(x);
    return splitmix64(x);
}

Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    if (rows < 1 || cols < 1) throw ContractViolation("gaussian_matrix: rows and cols must be >= 1");
    NormalRng rng(seed);
    Eigen::MatrixXd out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = rng.next();
    return out;
}

PermutationMatch match_permutation(const std::vector<Eigen::VectorXd>& estimates,
                                   const std::vector<Eigen::VectorXd>& targets) {
    const std::size_t K = targets.size();
    if (estimates.size() != K) throw ContractViolation("match_permutation: list sizes differ");
    if (K == 0) throw ContractViolation("match_permutation: empty input");
    if (K > 8) throw ContractViolation("match_permutation: K > 8 unsupported (exhaustive search)");
    for (std::size_t k = 0; k < K; ++k) {
        if (estimates[k].size() != targets[k].size() || estimates[k].size() != targets[0].size())
            throw ContractViolation("match_permutation: vector dimensions differ");
    }

    // Pairwise cost table, then brute force over all K! assignments.
    Eigen::MatrixXd cost(K, K);
    for (std::size_t e = 0; e < K; ++e)
        for (std::size_t t = 0; t < K; ++t)
            cost(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(t)) =
                (estimates[e] - targets[t]).squaredNorm();

    std::vector<int> perm(K);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_total = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (std::size_t k = 0; k < K; ++k) total += cost(perm[k], static_cast<Eigen::Index>(k));
        if (total < best_total) {
            best_total = total;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    PermutationMatch out;
    out.permutation = best;
    out.squared_errors.resize(static_cast<Eigen::Index>(K));
    for (std::size_t k = 0; k < K; ++k)
        out.squared_errors(static_cast<Eigen::Index>(k)) = cost(best[k], static_cast<Eigen::Index>(k));
    out.total_squared_error = best_total;
    return out;
}

}  // namespace ldw
