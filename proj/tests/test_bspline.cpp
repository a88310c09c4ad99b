#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "splinedyn/bspline.hpp"
#include "splinedyn/errors.hpp"

using namespace splinedyn;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) xs[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
    xs.back() = hi;
    return xs;
}

/// Cox-de Boor weight alpha_{i,j}(x) = (x - t_i) / (t_{i+j} - t_i), 0 on a
/// vanishing denominator. Used by the recursion-consistency oracle.
double alpha(const std::vector<double>& t, int i, int j, double x) {
    const double den = t[static_cast<std::size_t>(i + j)] - t[static_cast<std::size_t>(i)];
    if (den == 0.0) return 0.0;
    return (x - t[static_cast<std::size_t>(i)]) / den;
}

}  // namespace

TEST_SUITE("bspline") {

TEST_CASE("uniform basis sizes") {
    CHECK(make_uniform_basis(0.88, 1.10, 17, 3).nbasis() == 20);
    CHECK(make_uniform_basis(0.0, 10.0, 5, 3).nbasis() == 8);

    const BSplineBasis indicator = make_uniform_basis(0.0, 1.0, 2, 0);
    CHECK(indicator.nbasis() == 2);
    const std::vector<double> xs{0.25, 0.49, 0.5, 0.75, 1.0};
    const BasisMatrix bm = eval_basis(indicator, xs, 0);
    CHECK(bm.values(0, 0) == 1.0);
    CHECK(bm.values(1, 0) == 1.0);
    CHECK(bm.values(2, 1) == 1.0);  // half-open spans: 0.5 belongs to the right span
    CHECK(bm.values(3, 1) == 1.0);
    CHECK(bm.values(4, 1) == 1.0);  // closed right end
    CHECK(bm.values(0, 1) == 0.0);
}

TEST_CASE("nbasis matches order + breakpoints - 2") {
    for (int degree = 0; degree <= 5; ++degree) {
        for (int grid : {2, 5, 17}) {
            const BSplineBasis basis = make_uniform_basis(0.0, 1.0, grid, degree);
            const int breakpoints = grid + 1;
            CHECK(basis.nbasis() == basis.order() + breakpoints - 2);
            CHECK(basis.nbasis() == degree + grid);
        }
    }
}

TEST_CASE("invalid construction") {
    CHECK_THROWS_AS(make_uniform_basis(1.0, 1.0, 5, 3), ConfigError);
    CHECK_THROWS_AS(make_uniform_basis(2.0, 1.0, 5, 3), ConfigError);
    CHECK_THROWS_AS(make_uniform_basis(0.0, 1.0, 1, 3), ConfigError);
    CHECK_THROWS_AS(make_uniform_basis(0.0, 1.0, 5, -1), ConfigError);
    CHECK_THROWS_AS(make_uniform_basis(0.0, 1.0, 5, 8), ConfigError);
    CHECK_THROWS_AS(BSplineBasis(KnotVector{{0.0, 1.0, 0.5}}, 1), ConfigError);
}

TEST_CASE("order-1 indicator on raw knots") {
    const BSplineBasis basis(KnotVector{{0.0, 1.0, 2.0, 3.0}}, 0);
    CHECK(basis.nbasis() == 3);
    const std::vector<double> xs{0.5};
    const BasisMatrix bm = eval_basis(basis, xs, 0);
    CHECK(bm.values(0, 0) == 1.0);
    CHECK(bm.values(0, 1) == 0.0);
    CHECK(bm.values(0, 2) == 0.0);
}

TEST_CASE("partition of unity at a point") {
    const BSplineBasis basis = make_uniform_basis(0.88, 1.10, 17, 3);
    const std::vector<double> xs{0.99};
    const BasisMatrix bm = eval_basis(basis, xs, 0);
    CHECK(std::abs(bm.values.row(0).sum() - 1.0) <= 1e-12);
}

TEST_CASE("out-of-domain evaluation rejected") {
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 5, 3);
    const std::vector<double> xs{1.5};
    CHECK_THROWS_AS(eval_basis(basis, xs, 0), NumericError);
    const std::vector<double> xs2{-0.1};
    CHECK_THROWS_AS(eval_basis(basis, xs2, 0), NumericError);
}

TEST_CASE("derivative order beyond degree yields flagged zeros") {
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 4, 2);
    const std::vector<double> xs = linspace(0.0, 1.0, 7);
    const BasisMatrix bm = eval_basis(basis, xs, 3);
    CHECK(bm.derivative_exceeds_degree);
    CHECK(bm.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear reproduction via Greville abscissae, derivative = 1") {
    const BSplineBasis basis = make_uniform_basis(-1.0, 2.0, 6, 3);
    const std::vector<double> xi = basis.greville_abscissae();
    const std::vector<double> xs = linspace(-0.99, 1.99, 41);
    const BasisMatrix b0 = eval_basis(basis, xs, 0);
    const BasisMatrix b1 = eval_basis(basis, xs, 1);
    const Eigen::Map<const Eigen::VectorXd> c(xi.data(), static_cast<Eigen::Index>(xi.size()));
    const Eigen::VectorXd fx = b0.values * c;
    const Eigen::VectorXd dfx = b1.values * c;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        CHECK(std::abs(fx[static_cast<Eigen::Index>(k)] - xs[k]) <= 1e-12);
        CHECK(std::abs(dfx[static_cast<Eigen::Index>(k)] - 1.0) <= 1e-6);
    }
}

TEST_CASE("analytic derivative matches central finite differences") {
    // Oracle: central differences of the m=0 evaluation, h = 1e-6, at points
    // at least 1e-3 away from any knot.
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 6; ++rep) {
        const int degree = 2 + static_cast<int>(rng() % 4);  // 2..5
        const int grid = 4 + static_cast<int>(rng() % 6);
        const BSplineBasis basis = make_uniform_basis(0.0, 2.0, grid, degree);
        const double h = 1e-6;
        std::uniform_real_distribution<double> unif(0.01, 1.99);
        int tested = 0;
        while (tested < 25) {
            const double x = unif(rng);
            bool near_knot = false;
            for (double t : basis.knots().values) {
                if (std::abs(x - t) < 1e-3) near_knot = true;
            }
            if (near_knot) continue;
            ++tested;
            const std::vector<double> xm{x - h}, xp{x + h}, xc{x};
            const BasisMatrix fm = eval_basis(basis, xm, 0);
            const BasisMatrix fp = eval_basis(basis, xp, 0);
            const BasisMatrix d1 = eval_basis(basis, xc, 1);
            for (int j = 0; j < basis.nbasis(); ++j) {
                const double fd = (fp.values(0, j) - fm.values(0, j)) / (2.0 * h);
                const double an = d1.values(0, j);
                const double scale = std::max(std::abs(an), 1.0);
                CHECK(std::abs(fd - an) <= 1e-5 * scale);
            }
        }
    }
}

TEST_CASE("properties: partition of unity, non-negativity, local support") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> lo_d(-3.0, 1.0);
    std::uniform_real_distribution<double> len_d(0.5, 5.0);
    for (int rep = 0; rep < 12; ++rep) {
        const int degree = static_cast<int>(rng() % 6);  // 0..5
        const int grid = 2 + static_cast<int>(rng() % 12);
        const double lo = lo_d(rng);
        const double hi = lo + len_d(rng);
        const BSplineBasis basis = make_uniform_basis(lo, hi, grid, degree);
        const std::vector<double> xs = linspace(lo + 1e-9, hi - 1e-9, 1000);
        const BasisMatrix bm = eval_basis(basis, xs, 0);
        const auto& t = basis.knots().values;
        for (int r = 0; r < 1000; ++r) {
            CHECK(std::abs(bm.values.row(r).sum() - 1.0) <= 1e-10);
            for (int j = 0; j < basis.nbasis(); ++j) {
                const double value = bm.values(r, j);
                CHECK(value >= -1e-14);
                // Local support: zero outside [t_j, t_{j+order}].
                const double x = xs[static_cast<std::size_t>(r)];
                if (x < t[static_cast<std::size_t>(j)] ||
                    x > t[static_cast<std::size_t>(j + basis.order())]) {
                    CHECK(value == 0.0);
                }
            }
        }
    }
}

TEST_CASE("recursion consistency with the degree-lowered basis") {
    // phi_{i,d}(x) = alpha_{i,d}(x) phi_{i,d-1}(x) + (1 - alpha_{i+1,d}(x)) phi_{i+1,d-1}(x)
    // evaluated over the same knot sequence.
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 8; ++rep) {
        const int degree = 1 + static_cast<int>(rng() % 5);  // 1..5
        const int grid = 3 + static_cast<int>(rng() % 8);
        const BSplineBasis basis = make_uniform_basis(0.0, 1.0, grid, degree);
        const BSplineBasis lowered(basis.knots(), degree - 1);
        const std::vector<double> xs = linspace(1e-6, 1.0 - 1e-6, 200);
        const BasisMatrix hi_m = eval_basis(basis, xs, 0);
        const BasisMatrix lo_m = eval_basis(lowered, xs, 0);
        const auto& t = basis.knots().values;
        for (std::size_t r = 0; r < xs.size(); ++r) {
            const double x = xs[r];
            for (int i = 0; i < basis.nbasis(); ++i) {
                const double left = alpha(t, i, degree, x) * lo_m.values(static_cast<Eigen::Index>(r), i);
                const double right = (1.0 - alpha(t, i + 1, degree, x)) *
                                     lo_m.values(static_cast<Eigen::Index>(r), i + 1);
                CHECK(std::abs(hi_m.values(static_cast<Eigen::Index>(r), i) - (left + right)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("evaluation at knots and domain ends") {
    const BSplineBasis basis = make_uniform_basis(0.0, 1.0, 5, 3);
    const auto& t = basis.knots().values;
    std::vector<double> xs;
    for (double knot : t) xs.push_back(knot);
    const BasisMatrix bm = eval_basis(basis, xs, 0);
    for (Eigen::Index r = 0; r < bm.values.rows(); ++r) {
        CHECK(std::abs(bm.values.row(r).sum() - 1.0) <= 1e-12);
    }
    // Clamped ends: single basis function active at each endpoint.
    CHECK(bm.values(0, 0) == 1.0);
    CHECK(bm.values(bm.values.rows() - 1, basis.nbasis() - 1) == 1.0);
}

}  // TEST_SUITE
