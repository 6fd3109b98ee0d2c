#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ldw/linalg.hpp"

#include <algorithm>
#include <numeric>

using namespace ldw;

TEST_CASE("sym_eig_desc identity") {
    EigenPairs eig = sym_eig_desc(Eigen::MatrixXd::Identity(3, 3));
    CHECK(eig.values.isApprox(Eigen::Vector3d(1, 1, 1)));
    CHECK(eig.vectors.isApprox(Eigen::MatrixXd::Identity(3, 3), 1e-12));
}

TEST_CASE("sym_eig_desc diagonal permutation") {
    Eigen::MatrixXd S = Eigen::Vector3d(2, 5, 1).asDiagonal();
    EigenPairs eig = sym_eig_desc(S);
    CHECK(eig.values.isApprox(Eigen::Vector3d(5, 2, 1)));
    Eigen::MatrixXd expected(3, 3);
    expected << 0, 1, 0, 1, 0, 0, 0, 0, 1;  // columns e2, e1, e3
    CHECK(eig.vectors.isApprox(expected, 1e-12));
}

TEST_CASE("sym_eig_desc 2x2 hand case") {
    Eigen::MatrixXd S(2, 2);
    S << 2, 1, 1, 2;
    EigenPairs eig = sym_eig_desc(S);
    CHECK(eig.values(0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(eig.values(1) == doctest::Approx(1.0).epsilon(1e-12));
    const double r = 1.0 / std::sqrt(2.0);
    // Sign rule: tied magnitudes, lowest index made positive.
    CHECK(eig.vectors(0, 0) == doctest::Approx(r));
    CHECK(eig.vectors(1, 0) == doctest::Approx(r));
    CHECK(eig.vectors(0, 1) == doctest::Approx(r));
    CHECK(eig.vectors(1, 1) == doctest::Approx(-r));
}

TEST_CASE("sym_eig_desc rejects asymmetry") {
    Eigen::MatrixXd S(2, 2);
    S << 1, 0.5, 0.2, 1;
    CHECK_THROWS_AS(sym_eig_desc(S), ContractViolation);
}

TEST_CASE("sym_eig_desc reconstruction and determinism on random input") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        Eigen::MatrixXd A = gaussian_matrix(8, 8, seed);
        Eigen::MatrixXd S = 0.5 * (A + A.transpose());
        EigenPairs eig = sym_eig_desc(S);
        Eigen::MatrixXd rec = eig.vectors * eig.values.asDiagonal() * eig.vectors.transpose();
        CHECK((S - rec).norm() <= 1e-8 * S.norm());
        for (Eigen::Index i = 0; i < 8; ++i) {
            CHECK(eig.vectors.col(i).norm() == doctest::Approx(1.0).epsilon(1e-10));
            if (i + 1 < 8) CHECK(eig.values(i) >= eig.values(i + 1));
        }
        EigenPairs again = sym_eig_desc(S);
        CHECK(eig.values == again.values);
        CHECK(eig.vectors == again.vectors);
    }
}

TEST_CASE("gram matrices have nonnegative spectrum") {
    for (std::uint64_t seed : {7u, 8u, 9u}) {
        Eigen::MatrixXd A = gaussian_matrix(6, 4, seed);
        EigenPairs eig = sym_eig_desc((A * A.transpose()).eval());
        CHECK(eig.values.minCoeff() >= -1e-10);
    }
}

TEST_CASE("gaussian_matrix determinism and seed sensitivity") {
    Eigen::MatrixXd a = gaussian_matrix(2, 2, 99);
    Eigen::MatrixXd b = gaussian_matrix(2, 2, 99);
    CHECK(a == b);

    Eigen::MatrixXd big1 = gaussian_matrix(1000, 1000, 1234);
    CHECK(std::abs(big1.mean()) < 0.01);
    const double var = big1.array().square().mean() - big1.mean() * big1.mean();
    CHECK(var == doctest::Approx(1.0).epsilon(0.01));

    Eigen::MatrixXd big2 = gaussian_matrix(1000, 1000, 1235);
    const auto differing = (big1.array() != big2.array()).count();
    CHECK(differing >= 990000);
}

namespace {

// Independent minimum-cost enumeration, recursive rather than
// next_permutation, used as the oracle for match_permutation.
double brute_force_best(const std::vector<Eigen::VectorXd>& est,
                        const std::vector<Eigen::VectorXd>& tgt, std::vector<int>& avail,
                        std::size_t k) {
    if (k == tgt.size()) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < avail.size(); ++i) {
        if (avail[i] < 0) continue;
        const int e = avail[i];
        avail[i] = -1;
        const double cost = (est[static_cast<std::size_t>(e)] - tgt[k]).squaredNorm() +
                            brute_force_best(est, tgt, avail, k + 1);
        avail[i] = e;
        best = std::min(best, cost);
    }
    return best;
}

}  // namespace

TEST_CASE("match_permutation basics") {
    std::vector<Eigen::VectorXd> targets = {Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)};

    SUBCASE("identity") {
        PermutationMatch m = match_permutation(targets, targets);
        CHECK(m.permutation == std::vector<int>{0, 1});
        CHECK(m.total_squared_error == 0.0);
    }
    SUBCASE("swap") {
        std::vector<Eigen::VectorXd> est = {targets[1], targets[0]};
        PermutationMatch m = match_permutation(est, targets);
        CHECK(m.permutation == std::vector<int>{1, 0});
        CHECK(m.total_squared_error == 0.0);
    }
    SUBCASE("scaled swap") {
        std::vector<Eigen::VectorXd> est = {1.1 * targets[1], 0.9 * targets[0]};
        PermutationMatch m = match_permutation(est, targets);
        CHECK(m.permutation == std::vector<int>{1, 0});
        CHECK(m.squared_errors(0) == doctest::Approx(0.01));
        CHECK(m.squared_errors(1) == doctest::Approx(0.01));
    }
}

TEST_CASE("match_permutation agrees with independent enumeration") {
    for (std::uint64_t seed : {11u, 12u, 13u, 14u}) {
        const int K = 5;
        Eigen::MatrixXd E = gaussian_matrix(3, K, seed);
        Eigen::MatrixXd T = gaussian_matrix(3, K, seed + 1000);
        std::vector<Eigen::VectorXd> est, tgt;
        for (int k = 0; k < K; ++k) {
            est.push_back(E.col(k));
            tgt.push_back(T.col(k));
        }
        PermutationMatch m = match_permutation(est, tgt);
        std::vector<int> avail(K);
        std::iota(avail.begin(), avail.end(), 0);
        CHECK(m.total_squared_error == doctest::Approx(brute_force_best(est, tgt, avail, 0)));
        CHECK(m.squared_errors.sum() == doctest::Approx(m.total_squared_error));
    }
}

TEST_CASE("match_permutation rejects K > 8") {
    std::vector<Eigen::VectorXd> v(9, Eigen::VectorXd::Zero(2));
    CHECK_THROWS_AS(match_permutation(v, v), ContractViolation);
}
