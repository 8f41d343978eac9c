#include "krrdp/kernel_regression.hpp"
#include "krrdp/market.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

using namespace krrdp;

namespace {

PointMatrix random_points(int n, int d, std::uint64_t seed, double scale = 50.0) {
    Stream rng(seed, {Purpose::Test, 0, 0});
    PointMatrix xs(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) xs(i, j) = 100.0 + scale * (rng.uniform() - 0.5);
    return xs;
}

Vector random_targets(int n, std::uint64_t seed) {
    Stream rng(seed, {Purpose::Test, 1, 0});
    Vector ys(n);
    for (int i = 0; i < n; ++i) ys(i) = 10.0 * rng.uniform();
    return ys;
}

}  // namespace

TEST_CASE("rbf kernel values") {
    const KernelSpec spec{KernelKind::Rbf, 40.0};
    Vector x(3);
    x << 1.0, 2.0, 3.0;
    CHECK(rbf_kernel(x, x, spec) == 1.0);

    Vector a = Vector::Zero(1), b = Vector::Constant(1, 40.0 * std::sqrt(2.0));
    CHECK(rbf_kernel(a, b, spec) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(rbf_kernel(a, b, spec) == doctest::Approx(0.3678794).epsilon(1e-7));

    CHECK_THROWS_AS(rbf_kernel(a, x, spec), std::invalid_argument);
    CHECK_THROWS_AS((KernelSpec{KernelKind::Rbf, 0.0}.validate()), std::invalid_argument);
}

TEST_CASE("gram matrix is symmetric and positive semidefinite") {
    const KernelSpec spec{KernelKind::Rbf, 40.0};
    PointMatrix one(1, 2);
    one << 3.0, 4.0;
    const Eigen::MatrixXd g1 = gram_matrix(one, one, spec);
    CHECK(g1.rows() == 1);
    CHECK(g1(0, 0) == 1.0);

    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (double ell : {5.0, 40.0, 80.0}) {
            const PointMatrix xs = random_points(40, 3, seed);
            const Eigen::MatrixXd g = gram_matrix(xs, xs, KernelSpec{KernelKind::Rbf, ell});
            CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
            CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
        }
    }
}

TEST_CASE("krr fit hand-solved 1x1 system") {
    PointMatrix xs = PointMatrix::Zero(1, 1);
    Vector ys = Vector::Constant(1, 2.0);
    const KrrModel model = krr_fit(xs, ys, 1.0, KernelSpec{});
    CHECK(model.coefficients()(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(model.predict(Vector::Zero(1)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("krr fit of zero targets is the zero predictor") {
    const PointMatrix xs = random_points(20, 2, 3);
    const KrrModel model = krr_fit(xs, Vector::Zero(20), 1e-6, KernelSpec{});
    CHECK(model.coefficients().cwiseAbs().maxCoeff() == 0.0);
    CHECK(model.predict(Vector::Constant(2, 97.0)) == 0.0);
}

TEST_CASE("krr interpolation limit") {
    const KernelSpec spec{KernelKind::Rbf, 10.0};
    const PointMatrix xs = random_points(10, 2, 11);
    const Vector ys = random_targets(10, 11);
    const KrrModel model = krr_fit(xs, ys, 1e-12, spec);
    for (int i = 0; i < 10; ++i) CHECK(std::abs(model.predict(xs.row(i).transpose()) - ys(i)) <= 1e-6);
}

TEST_CASE("krr normal-equation residual") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (double lambda : {1e-6, 1e-3, 1e-1}) {
            const int n = 60;
            const PointMatrix xs = random_points(n, 3, seed);
            const Vector ys = random_targets(n, seed);
            const KernelSpec spec{KernelKind::Rbf, 40.0};
            const KrrModel model = krr_fit(xs, ys, lambda, spec);
            Eigen::MatrixXd a = gram_matrix(xs, xs, spec);
            a.diagonal().array() += lambda * n;
            const double residual = (a * model.coefficients() - ys).cwiseAbs().maxCoeff();
            CHECK(residual <= 1e-8 * ys.cwiseAbs().maxCoeff());
        }
    }
}

TEST_CASE("krr at lambda zero on duplicated points is rescued by the jitter retry") {
    PointMatrix xs(2, 1);
    xs << 1.0, 1.0;
    Vector ys(2);
    ys << 1.0, 2.0;
    // The jitter retry makes the system solvable; the result must still be finite.
    const KrrModel model = krr_fit(xs, ys, 0.0, KernelSpec{});
    CHECK(std::isfinite(model.predict(Vector::Constant(1, 1.0))));
    CHECK_THROWS_AS(krr_fit(xs, ys, -1.0, KernelSpec{}), std::invalid_argument);
}

TEST_CASE("nystrom with all centers reproduces exact krr") {
    const int n = 80;
    const PointMatrix xs = random_points(n, 2, 21);
    const Vector ys = random_targets(n, 21);
    const KernelSpec spec{KernelKind::Rbf, 40.0};
    const KrrModel exact = krr_fit(xs, ys, 1e-3, spec);
    Stream rng(5, {Purpose::NystromCenters, 0, 0});
    const KrrModel approx = nystrom_fit(xs, ys, 1e-3, spec, n, rng);
    for (int i = 0; i < n; ++i) {
        const Vector x = xs.row(i).transpose();
        CHECK(std::abs(exact.predict(x) - approx.predict(x)) <= 1e-6);
    }

    Stream rng0(5, {Purpose::NystromCenters, 0, 0});
    const KrrModel zero = nystrom_fit(xs, Vector::Zero(n), 1e-3, spec, 10, rng0);
    CHECK(zero.predict(xs.row(0).transpose()) == 0.0);

    Stream bad(5, {});
    CHECK_THROWS_AS(nystrom_fit(xs, ys, 1e-3, spec, n + 1, bad), std::invalid_argument);
    CHECK_THROWS_AS(nystrom_fit(xs, ys, 1e-3, spec, 0, bad), std::invalid_argument);
}

TEST_CASE("nystrom on gbm samples stays within twice the exact error") {
    const GbmParams params(0.05, Vector::Constant(2, 0.2), constant_correlation(2, 0.2),
                           Vector::Constant(2, 100.0), 1.0);
    const PointMatrix xs = sample_mu_t(params, 1, 200, 99);
    Vector ys(200);
    for (int i = 0; i < 200; ++i) ys(i) = std::sin(xs.row(i).norm() / 50.0);
    const KernelSpec spec{KernelKind::Rbf, 40.0};
    const KrrModel exact = krr_fit(xs, ys, 1e-6, spec);
    Stream rng(3, {Purpose::NystromCenters, 0, 0});
    const KrrModel approx = nystrom_fit(xs, ys, 1e-6, spec, 100, rng);

    const PointMatrix test = sample_mu_t(params, 1, 500, 100);
    double se_exact = 0.0, se_approx = 0.0;
    for (int i = 0; i < 500; ++i) {
        const Vector x = test.row(i).transpose();
        const double truth = std::sin(x.norm() / 50.0);
        se_exact += std::pow(exact.predict(x) - truth, 2);
        se_approx += std::pow(approx.predict(x) - truth, 2);
    }
    CHECK(std::sqrt(se_approx / 500) <= 2.0 * std::sqrt(se_exact / 500) + 1e-9);
}

TEST_CASE("predict basics and linearity") {
    PointMatrix c(2, 1);
    c << 0.0, 30.0;
    const KernelSpec spec{};
    Vector a1(2), a2(2);
    a1 << 1.0, 0.0;
    a2 << -0.5, 2.0;
    const KrrModel m0(c, Vector::Zero(2), spec, 0.0);
    const KrrModel m1(c, a1, spec, 0.0), m2(c, a2, spec, 0.0), m12(c, a1 + a2, spec, 0.0);
    const Vector x = Vector::Constant(1, 12.5);
    CHECK(m0.predict(x) == 0.0);
    CHECK(m1.predict(Vector::Zero(1)) == 1.0);
    CHECK(m12.predict(x) == doctest::Approx(m1.predict(x) + m2.predict(x)).epsilon(1e-14));
    CHECK_THROWS_AS(m1.predict(Vector::Zero(2)), std::invalid_argument);

    const KrrModel k = KrrModel::constant(3, 4.5, spec, 0.0);
    CHECK(k.predict(Vector::Constant(3, 1.0)) == 4.5);
}

TEST_CASE("clipping") {
    CHECK(clip(5.0, 3.0) == 3.0);
    CHECK(clip(-5.0, 3.0) == -3.0);
    CHECK(clip(2.0, 3.0) == 2.0);

    PointMatrix c = PointMatrix::Zero(1, 1);
    const KrrModel m(c, Vector::Constant(1, 5.0), KernelSpec{}, 0.0, 3.0);
    CHECK(m.clipped_predict(Vector::Zero(1)) == 3.0);
    CHECK_THROWS(m.with_clip_bound(std::nullopt).clipped_predict(Vector::Zero(1)));

    Stream rng(77, {});
    for (int i = 0; i < 10000; ++i) {
        const double a = 20.0 * (rng.uniform() - 0.5), b = 20.0 * (rng.uniform() - 0.5);
        const double bound = 5.0 * rng.uniform();
        CHECK(clip(clip(a, bound), bound) == clip(a, bound));
        CHECK(std::abs(clip(a, bound) - clip(b, bound)) <= std::abs(a - b));
    }
}

TEST_CASE("clipped training predictions stay below the target maximum") {
    const PointMatrix xs = random_points(50, 2, 8);
    const Vector ys = random_targets(50, 8);
    const double bound = ys.maxCoeff();
    const KrrModel m = krr_fit(xs, ys, 1e-9, KernelSpec{KernelKind::Rbf, 5.0}).with_clip_bound(bound);
    for (int i = 0; i < 50; ++i) CHECK(m.clipped_predict(xs.row(i).transpose()) <= bound);
}

TEST_CASE("cross validation error is finite and nonnegative") {
    const PointMatrix xs = random_points(50, 2, 9);
    const Vector ys = random_targets(50, 9);
    Stream rng(1, {Purpose::CrossValidation, 0, 0});
    const double e = cross_validation_error(xs, ys, 1e-6, KernelSpec{}, 5, rng);
    CHECK(std::isfinite(e));
    CHECK(e >= 0.0);
}
