#include <doctest.h>

#include "clogb/logistic.hpp"

#include <cmath>
#include <limits>

using namespace clogb;
using doctest::Approx;

namespace {

ObservationLog random_log(Rng& rng, int d, int n, const Vector& theta) {
    ObservationLog log(d);
    for (int k = 0; k < n; ++k) {
        if (k % 4 == 0) log.begin_round();
        Vector phi(d);
        for (int j = 0; j < d; ++j) phi[j] = uniform(rng, -1.0, 1.0);
        if (phi.norm() > 1.0) phi /= phi.norm();
        log.add(phi, bernoulli(rng, 1.0 / (1.0 + std::exp(-theta.dot(phi)))));
    }
    return log;
}

Vector random_vec(Rng& rng, int d, double s) {
    Vector v(d);
    for (int j = 0; j < d; ++j) v[j] = uniform(rng, -s, s);
    return v;
}

// Loss written out term by term, independent of the library's streaming pass.
double naive_loss(const Vector& theta, const ObservationLog& log, double lambda) {
    const auto f = log.features();
    const auto x = log.outcomes();
    double s = 0.0;
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(-f.row(i).dot(theta)));
        s -= x[i] * std::log(p) + (1.0 - x[i]) * std::log(1.0 - p);
    }
    return s + 0.5 * lambda * theta.squaredNorm();
}

}  // namespace

TEST_CASE("observation log bookkeeping") {
    ObservationLog log(2);
    CHECK(log.empty());
    Vector a(2), b(2);
    a << 1, 0;
    b << 0, 0.5;
    log.begin_round();
    log.add(a, true);
    log.add(b, false);
    log.begin_round();
    log.begin_round();
    log.add(b, true);
    CHECK(log.size() == 3);
    CHECK(log.rounds() == 3);
    CHECK(log.round_size(0) == 2);
    CHECK(log.round_size(1) == 0);
    CHECK(log.round_size(2) == 1);
    CHECK((log.outcome_weighted_sum() - (a + b)).norm() < 1e-15);
    CHECK((log.gram() - (a * a.transpose() + 2 * b * b.transpose())).norm() < 1e-15);
    Vector big(2);
    big << 1, 1;
    CHECK_THROWS_AS(log.add(big, true), std::invalid_argument);
    CHECK_THROWS_AS(log.add(Vector::Zero(3), true), std::invalid_argument);
}

TEST_CASE("regularizer schedule") {
    RegularizerSchedule s{2, 3, 0.01};
    CHECK(s.at(10) == Approx(2 * std::log(4.0 * 31 / 0.01)));
    CHECK(s.at(11) > s.at(10));
}

TEST_CASE("log_loss examples") {
    ObservationLog empty(3);
    CHECK(log_loss(Vector::Zero(3), empty, 2.0) == 0.0);
    ObservationLog one(2);
    Vector phi(2);
    phi << 0.6, 0.8;
    one.add(phi, true);
    CHECK(log_loss(Vector::Zero(2), one, 5.0) == Approx(std::log(2.0)).epsilon(1e-15));
    one.add(phi, false);
    CHECK(log_loss(Vector::Zero(2), one, 5.0) == Approx(2 * std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("log_loss matches the naive sum and stays finite") {
    Rng rng(1);
    for (int k = 0; k < 20; ++k) {
        const ObservationLog log = random_log(rng, 3, 50, random_vec(rng, 3, 1));
        const Vector th = random_vec(rng, 3, 3);
        CHECK(log_loss(th, log, 1.5) == Approx(naive_loss(th, log, 1.5)).epsilon(1e-12));
    }
    ObservationLog far(1);
    far.add(Vector::Ones(1), false);
    Vector huge(1);
    huge << 800.0;
    CHECK(std::isfinite(log_loss(huge, far, 1.0)));
    CHECK(log_loss(huge, far, 0.0) == Approx(800.0));
}

TEST_CASE("log_loss is convex") {
    Rng rng(2);
    const ObservationLog log = random_log(rng, 3, 60, random_vec(rng, 3, 1));
    for (int k = 0; k < 500; ++k) {
        const Vector a = random_vec(rng, 3, 4), b = random_vec(rng, 3, 4);
        const double t = uniform01(rng);
        REQUIRE(log_loss(t * a + (1 - t) * b, log, 1.0) <=
                t * log_loss(a, log, 1.0) + (1 - t) * log_loss(b, log, 1.0) + 1e-10);
    }
}

TEST_CASE("gradient, g-map and Hessian closed forms") {
    ObservationLog empty(2);
    Vector th(2);
    th << 0.3, -0.7;
    CHECK((grad_log_loss(th, empty, 2.0) - 2.0 * th).norm() < 1e-15);
    CHECK((g_map(th, empty, 2.0) - 2.0 * th).norm() < 1e-15);
    CHECK((hessian(th, empty, 2.0) - 2.0 * Matrix::Identity(2, 2)).norm() < 1e-15);

    ObservationLog one(2);
    Vector phi(2);
    phi << 0.6, 0.0;
    one.add(phi, true);
    CHECK((grad_log_loss(Vector::Zero(2), one, 3.0) - (0.5 - 1.0) * phi).norm() < 1e-15);
    CHECK((g_map(Vector::Zero(2), one, 3.0) - 0.5 * phi).norm() < 1e-15);

    ObservationLog e1(2);
    e1.add(Vector::Unit(2, 0), false);
    Matrix v = covariance(e1, 4.0, 2.5);
    CHECK(v(0, 0) == Approx(1 + 10.0));
    CHECK(v(1, 1) == Approx(10.0));
    CHECK(v(0, 1) == 0.0);
    CHECK((covariance(empty, 4.0, 2.5) - 10.0 * Matrix::Identity(2, 2)).norm() < 1e-15);
}

TEST_CASE("gradient and Hessian match finite differences") {
    Rng rng(4);
    for (int k = 0; k < 100; ++k) {
        const int d = 4;
        const ObservationLog log = random_log(rng, d, 30 + k, random_vec(rng, d, 1));
        const Vector th = random_vec(rng, d, 2);
        const double lam = uniform(rng, 0.5, 4);
        const Vector g = grad_log_loss(th, log, lam);
        Vector fd(d);
        Matrix fh(d, d);
        const double h = 1e-5;
        for (int j = 0; j < d; ++j) {
            Vector a = th, b = th;
            a[j] += h;
            b[j] -= h;
            fd[j] = (naive_loss(a, log, lam) - naive_loss(b, log, lam)) / (2 * h);
            fh.col(j) = (grad_log_loss(a, log, lam) - grad_log_loss(b, log, lam)) / (2 * h);
        }
        REQUIRE((g - fd).norm() <= 1e-5 * fd.norm());
        REQUIRE((hessian(th, log, lam) - fh).norm() <= 1e-4 * fh.norm());
        // Gradient identity: g(theta) - sum X phi.
        REQUIRE((g - (g_map(th, log, lam) - log.outcome_weighted_sum())).norm() < 1e-10);
    }
}

TEST_CASE("Hessian dominates V / kappa when kappa covers the predictors") {
    Rng rng(5);
    for (int k = 0; k < 20; ++k) {
        const ObservationLog log = random_log(rng, 3, 40, random_vec(rng, 3, 1));
        const Vector th = random_vec(rng, 3, 0.5);
        const auto f = log.features();
        double min_d = 0.25;
        for (Eigen::Index i = 0; i < f.rows(); ++i) {
            min_d = std::min(min_d, 1.0 / (2.0 + 2.0 * std::cosh(f.row(i).dot(th))));
        }
        const double kappa = 1.0 / min_d;
        const double lam = 2.0;
        const Matrix diff = kappa * hessian(th, log, lam) - covariance(log, kappa, lam);
        Eigen::SelfAdjointEigenSolver<Matrix> es(diff);
        CHECK(es.eigenvalues().minCoeff() >= -1e-9);
        Eigen::SelfAdjointEigenSolver<Matrix> eh(hessian(th, log, lam));
        CHECK(eh.eigenvalues().minCoeff() >= lam - 1e-9);
    }
}

TEST_CASE("fit_mle") {
    SolverOptions opts;
    opts.tol = 1e-8;
    ObservationLog empty(3);
    CHECK(fit_mle(empty, 1.0, opts).theta.norm() == 0.0);

    // d = 1, 200 draws at phi = 1 with theta* = 1, against a dense grid on [-3, 3].
    Rng rng(6);
    ObservationLog log(1);
    for (int k = 0; k < 200; ++k) log.add(Vector::Ones(1), bernoulli(rng, 1.0 / (1.0 + std::exp(-1.0))));
    const FitResult fit = fit_mle(log, 1.0, opts);
    double best = 1e300, arg = 0;
    for (int s = -30000; s <= 30000; ++s) {
        Vector x(1);
        x[0] = s * 1e-4;
        const double v = naive_loss(x, log, 1.0);
        if (v < best) {
            best = v;
            arg = x[0];
        }
    }
    CHECK(std::abs(fit.theta[0] - arg) < 0.05);
    CHECK(std::abs(fit.theta[0] - arg) < 2e-4);
    CHECK(fit.converged);

    for (int k = 0; k < 20; ++k) {
        const ObservationLog l = random_log(rng, 4, 100, random_vec(rng, 4, 1));
        SolverOptions o;
        o.tol = 1.0 / 500;
        const FitResult f = fit_mle(l, 2.0, o);
        REQUIRE(grad_log_loss(f.theta, l, 2.0).norm() <= o.tol);
        REQUIRE((g_map(f.theta, l, 2.0) - l.outcome_weighted_sum()).norm() <= o.tol);
        REQUIRE(log_loss(f.theta, l, 2.0) <= log_loss(Vector::Zero(4), l, 2.0));
        // Warm start reaches the same optimum, and repeated calls are bitwise identical.
        const FitResult w = fit_mle(l, 2.0, o, f.theta);
        REQUIRE((w.theta - f.theta).norm() < 1e-2);
        REQUIRE(fit_mle(l, 2.0, o).theta == f.theta);
    }
}

TEST_CASE("project_to_ellipsoid") {
    Vector c = Vector::Zero(2), p(2);
    p << 0.2, 0.1;
    CHECK(project_to_ellipsoid(p, c, Matrix::Identity(2, 2), 1.0) == p);

    p << 3, 4;
    const Vector q = project_to_ellipsoid(p, c, Matrix::Identity(2, 2), 2.0);
    CHECK((q - 2.0 * p / 5.0).norm() < 1e-8);

    Matrix s = Matrix::Zero(2, 2);
    s.diagonal() << 4, 1;
    p << 2, 0;
    const Vector r = project_to_ellipsoid(p, c, s, 1.0);
    CHECK(r[0] == Approx(0.5).epsilon(1e-8));
    CHECK(std::abs(r[1]) < 1e-12);

    // Random checks: feasible and no random boundary point is closer.
    Rng rng(7);
    for (int k = 0; k < 20; ++k) {
        Matrix a = Matrix::Random(2, 2);
        Matrix shape = a * a.transpose() + 0.2 * Matrix::Identity(2, 2);
        Vector center = Vector::Random(2), pt = 5 * Vector::Random(2);
        const double rad = 0.7;
        const Vector x = project_to_ellipsoid(pt, center, shape, rad);
        Ellipsoid e{center, shape, rad};
        REQUIRE(e.contains(x, 1e-9));
        const Eigen::LLT<Matrix> llt(shape);
        for (int j = 0; j < 500; ++j) {
            const double ang = uniform(rng, 0, 2 * M_PI);
            Vector u(2);
            u << std::cos(ang), std::sin(ang);
            // Boundary point center + rad * L^{-T} u.
            const Vector b = center + rad * llt.matrixU().solve(u);
            REQUIRE((x - pt).norm() <= (b - pt).norm() + 1e-7);
        }
    }
}

TEST_CASE("fit_mle_constrained") {
    Rng rng(9);
    SolverOptions o;
    o.tol = 1e-7;
    const ObservationLog log = random_log(rng, 2, 300, (Vector(2) << 2.0, -1.5).finished());
    const FitResult free_fit = fit_mle(log, 1.0, o);

    Ellipsoid wide{Vector::Zero(2), Matrix::Identity(2, 2), 100.0};
    CHECK((fit_mle_constrained(log, 1.0, wide, o).theta - free_fit.theta).norm() < 1e-6);

    Ellipsoid point{Vector::Zero(2), Matrix::Identity(2, 2), 0.0};
    CHECK(fit_mle_constrained(log, 1.0, point, o).theta.norm() == 0.0);

    Matrix shape = Matrix::Identity(2, 2);
    shape(0, 0) = 3.0;
    Ellipsoid tight{Vector::Zero(2), shape, 0.5};
    REQUIRE(!tight.contains(free_fit.theta));
    const Vector th = fit_mle_constrained(log, 1.0, tight, o).theta;
    CHECK(tight.distance(th) == Approx(0.5).epsilon(1e-6));
    CHECK(tight.contains(th, 1e-9));
    const double best = log_loss(th, log, 1.0);
    const Eigen::LLT<Matrix> llt(shape);
    for (int j = 0; j < 10000; ++j) {
        const double ang = uniform(rng, 0, 2 * M_PI);
        Vector u(2);
        u << std::cos(ang), std::sin(ang);
        const Vector b = 0.5 * llt.matrixU().solve(u);
        REQUIRE(best <= log_loss(b, log, 1.0) + 1e-9);
    }
}

TEST_CASE("non-finite input is rejected") {
    ObservationLog log(1);
    log.add(Vector::Ones(1), true);
    SolverOptions o;
    CHECK_THROWS(fit_mle(log, std::numeric_limits<double>::quiet_NaN(), o));
}
