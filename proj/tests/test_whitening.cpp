#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ldw/whitening.hpp"

#include <cmath>

using namespace ldw;

namespace {

GmmParams make_pair(int P, double cos_theta, double sigma2, Eigen::Vector2d weights,
                    std::uint64_t seed = 5) {
    Eigen::MatrixXd gram(2, 2);
    gram << 1.0, cos_theta, cos_theta, 1.0;
    GmmParams params;
    params.K = 2;
    params.P = P;
    params.weights = weights;
    params.means = means_from_gram(P, gram, seed);
    params.sigma2 = sigma2;
    return params;
}

Eigen::MatrixXd inter_cluster_cov(const GmmParams& params) {
    return params.means * params.weights.asDiagonal() * params.means.transpose();
}

}  // namespace

TEST_CASE("population whitening identities") {
    GmmParams params = make_pair(30, 0.25, 0.25, Eigen::Vector2d(0.567, 0.433));
    WhiteningMap map = population_whitening(params);

    Eigen::MatrixXd M2 = inter_cluster_cov(params);
    CHECK((map.forward * M2 * map.forward.transpose() - Eigen::MatrixXd::Identity(2, 2)).norm() <
          1e-8);

    Eigen::MatrixXd wm = map.forward * params.means;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
    for (int k = 0; k < 2; ++k) acc += params.weights(k) * wm.col(k) * wm.col(k).transpose();
    CHECK((acc - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-8);

    for (int k = 0; k < 2; ++k)
        CHECK(wm.col(k).squaredNorm() == doctest::Approx(1.0 / params.weights(k)).epsilon(1e-8));
    CHECK(std::abs(wm.col(0).dot(wm.col(1))) < 1e-8);

    CHECK((map.forward * map.unwhiten - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-8);
    CHECK(std::abs(map.forward.row(0).dot(map.forward.row(1))) < 1e-8);
}

TEST_CASE("standard map is consistent in the classical regime") {
    // P keeps the noise-variance estimator's signal bias (1/P) well below
    // the tolerance while N keeps c = P/N classical.
    GmmParams params = make_pair(100, 0.25, 0.25, Eigen::Vector2d(0.5, 0.5));
    GmmSample draw = sample(params, 100000, 19);
    WhiteningMap map = estimate_standard(draw.data, 2);
    Eigen::MatrixXd M2 = inter_cluster_cov(params);
    CHECK((map.forward * M2 * map.forward.transpose() - Eigen::MatrixXd::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() < 0.05);
}

TEST_CASE("corrected map approaches the standard map as c -> 0") {
    GmmParams params = make_pair(5, 0.25, 0.25, Eigen::Vector2d(0.5, 0.5));
    GmmSample draw = sample(params, 100000, 23);
    EmpiricalSpectrum spec = empirical_spectrum(draw.data, 2);
    WhiteningMap std_map = standard_from_spectrum(spec);
    WhiteningMap cor_map = corrected_from_spectrum(spec);
    CHECK((std_map.forward - cor_map.forward).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("pure-noise data still yields a standard map") {
    Eigen::MatrixXd noise = gaussian_matrix(2000, 200, 3);
    WhiteningMap map = estimate_standard(noise, 2);
    // Top eigenvalues sit near the bulk edge, above sigma2_hat; the map
    // exists but carries no signal.
    CHECK(map.active_count() >= 1);
}

TEST_CASE("corrected map degenerates below the first transition") {
    GmmParams params = make_pair(400, 0.25, 4.0, Eigen::Vector2d(0.5, 0.5));  // SNR 0.25 << S1*
    GmmSample draw = sample(params, 800, 29);
    EmpiricalSpectrum spec = empirical_spectrum(draw.data, 2);
    CHECK_THROWS_AS(corrected_from_spectrum(spec), DegenerateMapError);
}

TEST_CASE("map invariants for empirical maps") {
    GmmParams params = make_pair(100, 0.25, 0.2, Eigen::Vector2d(0.5, 0.5));
    GmmSample draw = sample(params, 1000, 37);
    EmpiricalSpectrum spec = empirical_spectrum(draw.data, 2);
    for (const WhiteningMap& map : {standard_from_spectrum(spec), corrected_from_spectrum(spec)}) {
        CHECK(std::abs(map.forward.row(0).dot(map.forward.row(1))) < 1e-8);
        Eigen::MatrixXd id = map.forward * map.unwhiten;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const double expect = (i == j && map.active[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
                CHECK(id(i, j) == doctest::Approx(expect).epsilon(1e-8));
            }
    }
}

TEST_CASE("corrected map recovers the projected means exactly when all spikes are active") {
    GmmParams params = make_pair(100, 0.25, 0.1, Eigen::Vector2d(0.5, 0.5));
    GmmSample draw = sample(params, 1000, 41);
    EmpiricalSpectrum spec = empirical_spectrum(draw.data, 2);
    WhiteningMap map = corrected_from_spectrum(spec);
    REQUIRE(map.active_count() == 2);
    Eigen::MatrixXd proj = spec.basis * spec.basis.transpose();
    for (int k = 0; k < 2; ++k) {
        Eigen::VectorXd via_map = map.unwhiten * (map.forward * params.means.col(k));
        CHECK((via_map - proj * params.means.col(k)).norm() < 1e-10);
    }
}

TEST_CASE("residual_alignment") {
    GmmParams params = make_pair(30, 0.25, 0.25, Eigen::Vector2d(0.567, 0.433));
    WhiteningMap map = population_whitening(params);

    Eigen::MatrixXd rho = residual_alignment(map, params.means);
    CHECK(rho(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rho(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rho(0, 1) < 1e-8);
    CHECK(rho(0, 1) == rho(1, 0));

    SUBCASE("global rescaling does not change rho") {
        WhiteningMap scaled = map;
        scaled.forward *= 17.5;
        Eigen::MatrixXd rho2 = residual_alignment(scaled, params.means);
        CHECK(std::abs(rho2(0, 1) - rho(0, 1)) < 1e-12);
    }
    SUBCASE("zero map row flags undefined entries") {
        WhiteningMap degenerate = map;
        degenerate.forward.setZero();
        Eigen::MatrixXd rho3 = residual_alignment(degenerate, params.means);
        CHECK(std::isnan(rho3(0, 1)));
    }
}

TEST_CASE("eigvec_alignment") {
    Eigen::MatrixXd U = Eigen::MatrixXd::Identity(4, 2);
    CHECK(eigvec_alignment(U, U).isApprox(Eigen::Vector2d(1, 1)));
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(4, 2);
    V(2, 0) = 1.0;
    V(3, 1) = 1.0;
    CHECK(eigvec_alignment(V, U).isZero());
}
