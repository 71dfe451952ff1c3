#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "granger/demo.hpp"
#include "granger/var_model.hpp"

#include "test_util.hpp"

using granger::Mat;
using granger::VarModel;

namespace {

VarModel scalar_ar1(double a, double s2 = 1.0) {
    Mat coeff(1, 1), sigma(1, 1);
    coeff << a;
    sigma << s2;
    return VarModel({coeff}, sigma);
}

/// Left-convolution A(z) B(z): coefficient at z^k is
/// B_k - sum_{l=1}^{min(k,p)} A_l B_{k-l}; must vanish for k >= 1.
Mat left_convolution(const VarModel& m, const granger::MaCoefficients& mc, int k) {
    Mat c = mc.at(k);
    for (int l = 1; l <= std::min(k, m.p()); ++l) c -= m.coeff(l) * mc.at(k - l);
    return c;
}

/// Coefficients of B(h)(z) A(z) beyond lag h (the independent route to the
/// h-step AR coefficients): A(h)_k = sum_l B_{k-l} A_l over l with
/// 0 <= k-l <= h-1.
Mat product_multistep_coeff(const VarModel& m, const granger::MaCoefficients& mc, int h, int k) {
    Mat out = Mat::Zero(m.n(), m.n());
    for (int l = 1; l <= std::min(k, m.p()); ++l)
        if (k - l <= h - 1) out += mc.at(k - l) * m.coeff(l);
    return out;
}

}  // namespace

TEST_CASE("VarModel validates its inputs") {
    Mat a = Mat::Zero(2, 2);
    SECTION("dimension mismatch") {
        CHECK_THROWS_AS(VarModel({Mat::Zero(2, 3)}, Mat::Identity(2, 2)),
                        granger::DimensionError);
        CHECK_THROWS_AS(VarModel({a}, Mat::Identity(3, 3)), granger::DimensionError);
        CHECK_THROWS_AS(VarModel({}, Mat::Identity(2, 2)), granger::DimensionError);
    }
    SECTION("asymmetric sigma") {
        Mat sigma(2, 2);
        sigma << 1.0, 0.5, 0.2, 1.0;
        CHECK_THROWS_AS(VarModel({a}, sigma), granger::CovarianceError);
    }
    SECTION("indefinite sigma") {
        Mat sigma(2, 2);
        sigma << 1.0, 2.0, 2.0, 1.0;
        CHECK_THROWS_AS(VarModel({a}, sigma), granger::CovarianceError);
    }
}

TEST_CASE("spectral radius of scalar models is the coefficient") {
    CHECK(granger::spectral_radius(scalar_ar1(0.9)) == Catch::Approx(0.9).margin(1e-12));
    CHECK(granger::spectral_radius(scalar_ar1(1.0)) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("demo model is stable; power iteration agrees with the eigensolver") {
    const auto model = granger::demo_model();
    const double rho = granger::spectral_radius(model);
    CHECK(rho < 1.0);

    // independent oracle: average log growth rate of the companion iteration
    const Mat comp = granger::companion_matrix(model);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(comp.rows());
    v /= v.norm();
    double log_growth = 0.0;
    const int warmup = 400, steps = 4000;
    for (int i = 0; i < warmup + steps; ++i) {
        v = comp * v;
        const double norm = v.norm();
        if (i >= warmup) log_growth += std::log(norm);
        v /= norm;
    }
    CHECK(std::exp(log_growth / steps) == Catch::Approx(rho).epsilon(5e-3));
}

TEST_CASE("unstable demo parameterization is rejected downstream") {
    // rho_self = 0.9 tips the 1<->2 feedback loop over the unit circle
    const auto model = granger::demo_model(0.9);
    CHECK(granger::spectral_radius(model) > 1.0);
    CHECK_THROWS_AS(granger::ma_coefficients(model, 4), granger::StabilityError);
    CHECK_THROWS_AS(granger::autocovariance(model, 4), granger::StabilityError);
}

TEST_CASE("ma_coefficients starts at the identity") {
    const auto mc = granger::ma_coefficients(granger::demo_model(), 0);
    CHECK(mc.order() == 0);
    CHECK(test_util::max_abs_diff(mc.at(0), Mat::Identity(5, 5)) == 0.0);
}

TEST_CASE("pure VAR(1) has MA coefficients A_1^k") {
    granger::Xoshiro256pp rng(7);
    const auto model = test_util::random_stable_model(3, 1, 0.7, rng);
    const auto mc = granger::ma_coefficients(model, 8);
    Mat power = Mat::Identity(3, 3);
    for (int k = 0; k <= 8; ++k) {
        CHECK(test_util::max_abs_diff(mc.at(k), power) < 1e-12);
        power = model.coeff(1) * power;
    }
}

TEST_CASE("MA coefficients satisfy A(z)B(z) = I to depth 40 on the demo model") {
    const auto model = granger::demo_model();
    const auto mc = granger::ma_coefficients(model, 40);
    for (int k = 1; k <= 40; ++k)
        CHECK(granger::detail::max_abs(left_convolution(model, mc, k)) < 1e-10);
}

TEST_CASE("ma_coefficients rejects unstable models") {
    CHECK_THROWS_AS(granger::ma_coefficients(scalar_ar1(1.01), 4), granger::StabilityError);
}

TEST_CASE("multistep_ar: h = 1 returns the model coefficients") {
    const auto model = granger::demo_model();
    const auto ms = granger::multistep_ar(model, 1, model.p());
    for (int k = 1; k <= model.p(); ++k)
        CHECK(test_util::max_abs_diff(ms.at_lag(k), model.coeff(k)) == 0.0);
    CHECK(granger::detail::max_abs(ms.at_lag(0)) == 0.0);
}

TEST_CASE("multistep_ar on a pure VAR(1): only lag h is nonzero, equal to A_1^h") {
    granger::Xoshiro256pp rng(11);
    const auto model = test_util::random_stable_model(2, 1, 0.8, rng);
    for (int h : {1, 2, 5, 9}) {
        const auto ms = granger::multistep_ar(model, h, h + 3);
        Mat power = Mat::Identity(2, 2);
        for (int i = 0; i < h; ++i) power = model.coeff(1) * power;
        CHECK(test_util::max_abs_diff(ms.at_lag(h), power) < 1e-12);
        for (int k = 0; k <= ms.max_lag(); ++k)
            if (k != h) CHECK(granger::detail::max_abs(ms.at_lag(k)) < 1e-14);
    }
}

TEST_CASE("multistep recursion equals the B(h)(z)A(z) product construction") {
    SECTION("demo model, h = 2") {
        const auto model = granger::demo_model();
        const int K = model.p() + 1;
        const auto ms = granger::multistep_ar(model, 2, K);
        const auto mc = granger::ma_coefficients(model, 2);
        for (int k = 2; k <= K; ++k)
            CHECK(test_util::max_abs_diff(ms.at_lag(k),
                                          product_multistep_coeff(model, mc, 2, k)) < 1e-10);
    }
    SECTION("random stable models, h <= 16") {
        granger::Xoshiro256pp rng(23);
        for (int rep = 0; rep < 10; ++rep) {
            const auto model = test_util::random_stable_model(3, 4, 0.35 + 0.5 * rng.uniform01(), rng);
            for (int h : {2, 7, 16}) {
                const int K = h + model.p() - 1;
                const auto ms = granger::multistep_ar(model, h, K);
                const auto mc = granger::ma_coefficients(model, h - 1);
                for (int k = h; k <= K; ++k)
                    CHECK(test_util::max_abs_diff(
                              ms.at_lag(k), product_multistep_coeff(model, mc, h, k)) < 1e-10);
            }
        }
    }
}

TEST_CASE("multistep_ar argument checks") {
    const auto model = granger::demo_model();
    CHECK_THROWS_AS(granger::multistep_ar(model, 3, 2), granger::ArgumentError);
    CHECK_THROWS_AS(granger::multistep_ar(model, 0, 2), granger::ArgumentError);
}

TEST_CASE("scalar AR(1) autocovariance matches the textbook closed form") {
    const auto model = scalar_ar1(0.9);
    const auto acov = granger::autocovariance(model, 30);
    for (int k = 0; k <= 30; ++k)
        CHECK(acov.at(k)(0, 0) ==
              Catch::Approx(std::pow(0.9, k) / (1.0 - 0.81)).margin(1e-10));
}

TEST_CASE("white noise autocovariance is Sigma at lag 0 and zero beyond") {
    Mat sigma(2, 2);
    sigma << 2.0, 0.3, 0.3, 1.0;
    const VarModel model({Mat::Zero(2, 2)}, sigma);
    const auto acov = granger::autocovariance(model, 5);
    CHECK(test_util::max_abs_diff(acov.at(0), sigma) < 1e-14);
    for (int k = 1; k <= 5; ++k) CHECK(granger::detail::max_abs(acov.at(k)) < 1e-14);
}

TEST_CASE("autocovariance satisfies the Yule-Walker consistency identity") {
    granger::Xoshiro256pp rng(31);
    for (int rep = 0; rep < 6; ++rep) {
        const auto model = test_util::random_stable_model(3, 3, 0.3 + 0.55 * rng.uniform01(), rng);
        const auto acov = granger::autocovariance(model, 24);
        const double scale = granger::detail::max_abs(acov.at(0));
        for (int k = 1; k <= 24; ++k) {
            Mat expected = Mat::Zero(3, 3);
            for (int l = 1; l <= model.p(); ++l) expected += model.coeff(l) * acov.at_signed(k - l);
            CHECK(test_util::max_abs_diff(acov.at(k), expected) < 1e-9 * scale);
        }
        CHECK(test_util::max_abs_diff(acov.at(0), acov.at(0).transpose()) < 1e-10 * scale);
    }
}

TEST_CASE("demo autocovariance decays to near machine precision by lag 175") {
    const auto acov = granger::autocovariance(granger::demo_model(), 175);
    CHECK(granger::detail::max_abs(acov.at(175)) <
          1e-12 * granger::detail::max_abs(acov.at(0)));
}

TEST_CASE("autocovariance decay is geometrically bounded by the spectral radius") {
    granger::Xoshiro256pp rng(41);
    const auto model = test_util::random_stable_model(3, 2, 0.6, rng);
    const double rho = granger::spectral_radius(model);
    const auto acov = granger::autocovariance(model, 80);
    const double g0 = granger::detail::max_abs(acov.at(0));
    const double rate = rho + 0.05;  // margin over the asymptotic rate
    for (int k = 40; k <= 80; ++k)
        CHECK(granger::detail::max_abs(acov.at(k)) < 20.0 * g0 * std::pow(rate, k));
}

TEST_CASE("default_autocov_lags lands where the demo tail crosses 1e-12") {
    const auto model = granger::demo_model();
    const int q = granger::default_autocov_lags(model);
    CHECK(q <= 200);
    const auto acov = granger::autocovariance(model, q);
    const double g0 = granger::detail::max_abs(acov.at(0));
    CHECK(granger::detail::max_abs(acov.at(q)) < 1e-12 * g0);
}

TEST_CASE("autocovariance rejects unstable models") {
    CHECK_THROWS_AS(granger::autocovariance(scalar_ar1(1.0), 4), granger::StabilityError);
}
