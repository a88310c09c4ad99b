#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "splinedyn/errors.hpp"
#include "splinedyn/smoothing.hpp"

using namespace splinedyn;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) xs[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
    xs.back() = hi;
    return xs;
}

/// Coefficients representing a target function exactly (when it lies in the
/// span): dense least squares on a fine grid, residual checked by the caller.
Eigen::VectorXd represent(const BSplineBasis& basis, const std::vector<double>& xs,
                          const std::vector<double>& ys) {
    const SmoothFit fit = fit_least_squares(basis, xs, ys);
    return fit.coefficients;
}

}  // namespace

TEST_SUITE("smoothing") {

TEST_CASE("degree-0 basis with one point per span reproduces the data") {
    // One indicator per span and one sample per span: Phi is the identity.
    const int n = 8;
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, n, 0);
    std::vector<double> xs(n), ys(n);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (int k = 0; k < n; ++k) {
        xs[static_cast<std::size_t>(k)] = (k + 0.5) / n;
        ys[static_cast<std::size_t>(k)] = unif(rng);
    }
    const SmoothFit fit = fit_least_squares(basis, xs, ys);
    for (int k = 0; k < n; ++k) {
        CHECK(fit.coefficients(k) == doctest::Approx(ys[static_cast<std::size_t>(k)]).epsilon(1e-14));
    }
}

TEST_CASE("cubic data fitted exactly by a cubic basis") {
    const BSplineBasis basis = make_uniform_basis(0.0, 2.0, 6, 3);
    const std::vector<double> xs = linspace(0.0, 2.0, 60);
    std::vector<double> ys(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double x = xs[k];
        ys[k] = 0.5 * x * x * x - x * x + 3.0 * x - 0.25;
    }
    const SmoothFit fit = fit_least_squares(basis, xs, ys);
    const Eigen::VectorXd fitted = evaluate(fit, xs, 0);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        CHECK(std::abs(fitted(static_cast<Eigen::Index>(k)) - ys[k]) <= 1e-9);
    }
}

TEST_CASE("empty knot span raises a singular-fit error naming the span") {
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 10, 0);
    // All samples inside [0, 0.1): only the first indicator is supported.
    const std::vector<double> xs = linspace(0.0, 0.09, 12);
    const std::vector<double> ys(xs.size(), 1.0);
    try {
        (void)fit_least_squares(basis, xs, ys);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("empty knot span") != std::string::npos);
    }
}

TEST_CASE("penalty matrix: affine null space, symmetry, PSD") {
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 5, 3);
    const PenaltyMatrix pen = penalty_matrix(basis, 2);
    const Eigen::MatrixXd R = pen.dense();

    SUBCASE("affine function has zero roughness") {
        const std::vector<double> xs = linspace(0.0, 1.0, 40);
        std::vector<double> ys(xs.size());
        for (std::size_t k = 0; k < xs.size(); ++k) ys[k] = 3.0 * xs[k] + 1.0;
        const Eigen::VectorXd c = represent(basis, xs, ys);
        CHECK(std::abs(c.dot(R * c)) <= 1e-10);
    }
    SUBCASE("symmetry") {
        CHECK((R - R.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("eigenvalues non-negative") {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
    SUBCASE("quadratic integrand evaluated exactly") {
        // f(x) = x^2 has D2 f = 2, so c'Rc = integral of 4 over [0, 1] = 4.
        const std::vector<double> xs = linspace(0.0, 1.0, 50);
        std::vector<double> ys(xs.size());
        for (std::size_t k = 0; k < xs.size(); ++k) ys[k] = xs[k] * xs[k];
        const Eigen::VectorXd c = represent(basis, xs, ys);
        CHECK(c.dot(R * c) == doctest::Approx(4.0).epsilon(1e-10));
    }
}

TEST_CASE("penalty order must not exceed the degree") {
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 5, 2);
    CHECK_THROWS_AS(penalty_matrix(basis, 3), ConfigError);
    CHECK_THROWS_AS(penalty_matrix(basis, 0), ConfigError);
    CHECK_THROWS_AS(penalty_matrix(basis, 2, 2), ConfigError);  // q < m + 1
}

TEST_CASE("lambda = 0 reproduces the ordinary least-squares fit") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 4 + static_cast<int>(rng() % 5), 3);
        const int n = basis.nbasis() + 10 + static_cast<int>(rng() % 30);
        std::vector<double> xs(static_cast<std::size_t>(n)), ys(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            xs[static_cast<std::size_t>(k)] = (k + 0.13) / n;
            ys[static_cast<std::size_t>(k)] = unif(rng);
        }
        const SmoothFit ols = fit_least_squares(basis, xs, ys);
        const SmoothFit pen = fit_penalized(basis, xs, ys, 0.0, 2);
        CHECK((ols.coefficients - pen.coefficients).cwiseAbs().maxCoeff() <= 1e-8);
    }
}

TEST_CASE("identity normal equations with identity penalty halve the rhs") {
    const Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(6, 6);
    const Eigen::MatrixXd pen = Eigen::MatrixXd::Identity(6, 6);
    Eigen::VectorXd rhs(6);
    rhs << 1, -2, 3, 0.5, -0.25, 10;
    const Eigen::VectorXd c = solve_penalized_normal_equations(gram, pen, 1.0, rhs);
    CHECK((c - rhs / 2.0).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("huge lambda with m = 2 collapses to the regression line") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> noise(0.0, 0.3);
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 8, 3);
    const int n = 120;
    std::vector<double> xs(n), ys(n);
    for (int k = 0; k < n; ++k) {
        const double x = static_cast<double>(k) / (n - 1);
        xs[static_cast<std::size_t>(k)] = x;
        ys[static_cast<std::size_t>(k)] = 2.0 * x * x * x - x + 0.5 + noise(rng);
    }
    // Oracle: direct ordinary regression line of the same data.
    Eigen::MatrixXd A(n, 2);
    Eigen::VectorXd b(n);
    for (int k = 0; k < n; ++k) {
        A(k, 0) = 1.0;
        A(k, 1) = xs[static_cast<std::size_t>(k)];
        b(k) = ys[static_cast<std::size_t>(k)];
    }
    const Eigen::Vector2d line = A.colPivHouseholderQr().solve(b);

    const SmoothFit fit = fit_penalized(basis, xs, ys, 1e12, 2);
    const Eigen::VectorXd fitted = evaluate(fit, xs, 0);
    for (int k = 0; k < n; ++k) {
        const double expect = line(0) + line(1) * xs[static_cast<std::size_t>(k)];
        CHECK(std::abs(fitted(k) - expect) <= 1e-3);
    }
}

TEST_CASE("evaluate returns S*y at the training points for lambda = 0") {
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 5, 3);
    const std::vector<double> xs = linspace(0.0, 1.0, 30);
    std::vector<double> ys(xs.size());
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (auto& y : ys) y = unif(rng);
    const SmoothFit fit = fit_least_squares(basis, xs, ys);
    const Eigen::VectorXd fitted = evaluate(fit, xs, 0);
    const SmoothingDiagnostics diag = diagnostics(basis, xs, ys, 0.0, 2, true);
    const Eigen::Map<const Eigen::VectorXd> yv(ys.data(), static_cast<Eigen::Index>(ys.size()));
    const Eigen::VectorXd sy = diag.S * yv;
    CHECK((fitted - sy).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("fitted parabola has the right first derivative") {
    const BSplineBasis basis = make_uniform_basis(0.0, 3.0, 6, 3);
    const std::vector<double> xs = linspace(0.0, 3.0, 50);
    std::vector<double> ys(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) ys[k] = xs[k] * xs[k];
    const SmoothFit fit = fit_least_squares(basis, xs, ys);
    const std::vector<double> at{2.0};
    CHECK(evaluate(fit, at, 1)(0) == doctest::Approx(4.0).epsilon(1e-6));
    CHECK_THROWS_AS(evaluate(fit, at, 4), ConfigError);
}

TEST_CASE("projection identities at lambda = 0") {
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 6, 3);
    const std::vector<double> xs = linspace(0.0, 1.0, 40);
    std::vector<double> ys(xs.size());
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (auto& y : ys) y = unif(rng);
    const SmoothingDiagnostics diag = diagnostics(basis, xs, ys, 0.0, 2, true);
    CHECK((diag.S * diag.S - diag.S).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(std::abs(diag.trace_S - basis.nbasis()) <= 1e-6);
}

TEST_CASE("hat diagonal bounds for positive lambda") {
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 6, 3);
    const std::vector<double> xs = linspace(0.0, 1.0, 35);
    const Eigen::VectorXd sii = hat_diagonal(basis, xs, 0.5, 2);
    for (Eigen::Index k = 0; k < sii.size(); ++k) CHECK(sii(k) >= -1e-10);
}

TEST_CASE("roughness of the penalized fit is non-increasing in lambda") {
    std::mt19937_64 rng(37);
    std::normal_distribution<double> noise(0.0, 0.2);
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 7, 3);
    const PenaltyMatrix pen = penalty_matrix(basis, 2);
    const Eigen::MatrixXd R = pen.dense();
    const std::vector<double> xs = linspace(0.0, 1.0, 80);
    std::vector<double> ys(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) ys[k] = std::sin(6.0 * xs[k]) + noise(rng);
    double prev = std::numeric_limits<double>::infinity();
    for (double lambda : {1e-8, 1e-6, 1e-4, 1e-2, 1.0, 1e2}) {
        const SmoothFit fit = fit_penalized(basis, xs, ys, lambda, 2);
        const double rough = fit.coefficients.dot(R * fit.coefficients);
        CHECK(rough <= prev * (1.0 + 1e-9));
        prev = rough;
    }
}

TEST_CASE("OCV equals brute-force leave-one-out refits") {
    // Oracle: actually drop each point, refit, and predict it.
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 5, 3);
    const int n = 50;
    std::vector<double> xs(n), ys(n);
    std::mt19937_64 rng(41);
    std::normal_distribution<double> noise(0.0, 0.15);
    for (int k = 0; k < n; ++k) {
        const double x = static_cast<double>(k) / (n - 1);
        xs[static_cast<std::size_t>(k)] = x;
        ys[static_cast<std::size_t>(k)] = std::sin(5.0 * x) + noise(rng);
    }
    const std::vector<double> grid{1e-6, 1e-4, 1e-2};
    const OcvResult ocv = select_lambda_ocv(basis, xs, ys, 2, grid);

    for (std::size_t g = 0; g < grid.size(); ++g) {
        double acc = 0.0;
        for (int drop = 0; drop < n; ++drop) {
            std::vector<double> xs2, ys2;
            for (int k = 0; k < n; ++k) {
                if (k == drop) continue;
                xs2.push_back(xs[static_cast<std::size_t>(k)]);
                ys2.push_back(ys[static_cast<std::size_t>(k)]);
            }
            const SmoothFit fit = fit_penalized(basis, xs2, ys2, grid[g], 2);
            const std::vector<double> at{xs[static_cast<std::size_t>(drop)]};
            const double pred = evaluate(fit, at, 0)(0);
            const double err = ys[static_cast<std::size_t>(drop)] - pred;
            acc += err * err;
        }
        const double brute = acc / n;
        CHECK(ocv.scores[g] == doctest::Approx(brute).epsilon(1e-6));
    }
}

TEST_CASE("OCV on interpolation-capable data") {
    SUBCASE("zero residuals score zero when leverage stays below one") {
        // Cubic truth in the span, many more points than basis functions.
        const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 4, 3);
        const std::vector<double> xs = linspace(0.0, 1.0, 60);
        std::vector<double> ys(xs.size());
        for (std::size_t k = 0; k < xs.size(); ++k) ys[k] = xs[k] * (1.0 - xs[k]);
        const std::vector<double> grid{0.0};
        const OcvResult ocv = select_lambda_ocv(basis, xs, ys, 2, grid);
        CHECK(ocv.scores[0] <= 1e-20);
        CHECK(ocv.best_lambda == 0.0);
    }
    SUBCASE("noiseless line: flat scores, tie broken to the largest lambda") {
        const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 5, 3);
        const std::vector<double> xs = linspace(0.0, 1.0, 40);
        std::vector<double> ys(xs.size());
        for (std::size_t k = 0; k < xs.size(); ++k) ys[k] = 2.0 * xs[k] - 0.7;
        const std::vector<double> grid{1e-6, 1e-3, 1.0, 1e3};
        const OcvResult ocv = select_lambda_ocv(basis, xs, ys, 2, grid);
        for (std::size_t g = 1; g < grid.size(); ++g) {
            CHECK(ocv.scores[g] <= ocv.scores[g - 1] + 1e-18);
        }
        CHECK(ocv.best_lambda == 1e3);
    }
    SUBCASE("saturated leverage is skipped with a warning") {
        // Exactly n = nbasis points at distinct sites: lambda = 0 interpolates
        // and every S_ii is 1.
        const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 4, 3);
        const int n = basis.nbasis();
        std::vector<double> xs(static_cast<std::size_t>(n)), ys(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            xs[static_cast<std::size_t>(k)] = static_cast<double>(k) / (n - 1);
            ys[static_cast<std::size_t>(k)] = std::cos(static_cast<double>(k));
        }
        const std::vector<double> grid{0.0, 1e-3};
        const OcvResult ocv = select_lambda_ocv(basis, xs, ys, 2, grid);
        CHECK(std::isinf(ocv.scores[0]));
        CHECK(!ocv.warnings.empty());
        CHECK(ocv.best_lambda == 1e-3);
    }
}

TEST_CASE("OCV grid validation") {
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 4, 3);
    const std::vector<double> xs = linspace(0.0, 1.0, 20);
    const std::vector<double> ys(xs.size(), 1.0);
    const std::vector<double> empty;
    CHECK_THROWS_AS(select_lambda_ocv(basis, xs, ys, 2, empty), ConfigError);
    const std::vector<double> unsorted{1.0, 0.1};
    CHECK_THROWS_AS(select_lambda_ocv(basis, xs, ys, 2, unsorted), ConfigError);
}

TEST_CASE("penalized fit errors on data confined to one site") {
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 6, 3);
    const std::vector<double> xs(static_cast<std::size_t>(basis.nbasis() + 5), 0.4);
    const std::vector<double> ys(xs.size(), 1.0);
    CHECK_THROWS_AS(fit_penalized(basis, xs, ys, 1e-3, 2), NumericError);
}

}  // TEST_SUITE
