#include "splinedyn/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "splinedyn/errors.hpp"

namespace splinedyn {

namespace {

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            if (n == 1) p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            const double pn = (n == 1) ? x : p1;
            const double pm = (n == 1) ? 1.0 : p0;
            dp = n * (x * pn - pm) / (x * x - 1.0);
            const double dx = pn / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

Eigen::SparseMatrix<double> build_design(const BSplineBasis& basis, std::span<const double> x) {
    const int order = basis.order();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(x.size() * static_cast<std::size_t>(order));
    Eigen::MatrixXd ders;
    int first = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        basis.eval_local(x[i], 0, first, ders);
        for (int j = 0; j < order; ++j) {
            trips.emplace_back(static_cast<int>(i), first + j, ders(0, j));
        }
    }
    Eigen::SparseMatrix<double> phi(static_cast<Eigen::Index>(x.size()), basis.nbasis());
    phi.setFromTriplets(trips.begin(), trips.end());
    return phi;
}

std::string describe_empty_spans(const BSplineBasis& basis, std::span<const double> x) {
    const auto& t = basis.knots().values;
    std::vector<int> counts(static_cast<std::size_t>(basis.nbasis()), 0);
    for (double xi : x) {
        const int s = basis.find_span(xi) - basis.degree();
        if (s >= 0 && s < static_cast<int>(counts.size())) ++counts[static_cast<std::size_t>(s)];
    }
    std::ostringstream oss;
    int listed = 0;
    for (int s = 0; s < static_cast<int>(counts.size()); ++s) {
        const int k = s + basis.degree();
        if (t[k] < t[k + 1] && counts[static_cast<std::size_t>(s)] == 0) {
            if (listed == 0) oss << "; empty knot span(s):";
            if (listed < 6) {
                oss << " [" << t[k] << ", " << t[k + 1] << ") (index " << k << ")";
            }
            ++listed;
        }
    }
    if (listed > 6) oss << " and " << (listed - 6) << " more";
    return oss.str();
}

/// Solver for the penalized normal equations M = Phi' Phi + lambda R.
///
/// Fast path: sparse Cholesky of M. When that fails or M is so badly
/// conditioned that squaring has destroyed the problem (huge lambda), the
/// fallback re-solves the augmented least-squares system
///   min || [Phi; sqrt(lambda) L] c - [y; 0] ||,  R = L' L,
/// by rank-revealing dense QR, which also detects genuine singularity.
class PenalizedSystem {
public:
    PenalizedSystem(const Eigen::SparseMatrix<double>& phi, const Eigen::SparseMatrix<double>* R,
                    double lambda, const Eigen::VectorXd& y, const BSplineBasis& basis,
                    std::span<const double> x, bool throw_on_singular = true)
        : phi_(phi), y_(y) {
        const Eigen::Index nb = phi.cols();
        Eigen::SparseMatrix<double> M = Eigen::SparseMatrix<double>(phi.transpose() * phi);
        if (R != nullptr && lambda > 0.0) M = M + Eigen::SparseMatrix<double>(lambda * *R);

        llt_.compute(M);
        bool llt_usable = llt_.info() == Eigen::Success;
        if (llt_usable) {
            // Guard against pivots that technically stayed positive on a
            // singular or squared-away system.
            const Eigen::SparseMatrix<double> L = llt_.matrixL();
            double dmin = std::numeric_limits<double>::infinity();
            double dmax = 0.0;
            for (Eigen::Index j = 0; j < L.outerSize(); ++j) {
                const double d = L.coeff(j, j);
                dmin = std::min(dmin, d);
                dmax = std::max(dmax, d);
            }
            if (!(dmin > 0.0) || (dmin / dmax) * (dmin / dmax) < 1e-10) llt_usable = false;
        }
        if (llt_usable) {
            ok_ = true;
            return;
        }

        if (nb > 2000) {
            if (throw_on_singular) {
                throw NumericError(
                    "normal equations unusable and too large for the dense QR fallback" +
                    describe_empty_spans(basis, x));
            }
            return;
        }

        // Square root of the penalty from its eigendecomposition.
        Eigen::MatrixXd sqrt_pen(0, nb);
        if (R != nullptr && lambda > 0.0) {
            const Eigen::MatrixXd Rd = Eigen::MatrixXd(*R);
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Rd);
            const Eigen::VectorXd ev = es.eigenvalues();
            const double tol = 1e-14 * std::max(ev.cwiseAbs().maxCoeff(), 1.0);
            std::vector<Eigen::Index> keep;
            for (Eigen::Index k = 0; k < ev.size(); ++k) {
                if (ev(k) > tol) keep.push_back(k);
            }
            sqrt_pen.resize(static_cast<Eigen::Index>(keep.size()), nb);
            for (std::size_t r = 0; r < keep.size(); ++r) {
                sqrt_pen.row(static_cast<Eigen::Index>(r)) =
                    std::sqrt(lambda * ev(keep[r])) * es.eigenvectors().col(keep[r]).transpose();
            }
        }

        Eigen::MatrixXd augmented(phi.rows() + sqrt_pen.rows(), nb);
        augmented.topRows(phi.rows()) = Eigen::MatrixXd(phi);
        augmented.bottomRows(sqrt_pen.rows()) = sqrt_pen;
        qr_.compute(augmented);
        if (qr_.rank() < nb) {
            if (throw_on_singular) {
                throw NumericError("singular fit: design is rank deficient (rank " +
                                   std::to_string(qr_.rank()) + " of " + std::to_string(nb) + ")" +
                                   describe_empty_spans(basis, x));
            }
            return;
        }
        use_qr_ = true;
        ok_ = true;
    }

    [[nodiscard]] bool ok() const noexcept { return ok_; }

    /// Coefficients of the penalized fit.
    [[nodiscard]] Eigen::VectorXd coefficients() const {
        if (use_qr_) {
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(qr_.rows());
            rhs.head(y_.size()) = y_;
            return qr_.solve(rhs);
        }
        return llt_.solve(phi_.transpose() * y_);
    }

    /// M^-1 rhs, for hat-matrix work. On the QR path this uses the triangular
    /// factor: M = P R1' R1 P'.
    [[nodiscard]] Eigen::VectorXd solve_normal(const Eigen::VectorXd& rhs) const {
        if (!use_qr_) return llt_.solve(rhs);
        const Eigen::Index nb = rhs.size();
        const auto R1 = qr_.matrixQR().topRows(nb).triangularView<Eigen::Upper>();
        Eigen::VectorXd z = qr_.colsPermutation().transpose() * rhs;
        z = R1.transpose().solve(z);
        z = R1.solve(z);
        return qr_.colsPermutation() * z;
    }

private:
    const Eigen::SparseMatrix<double>& phi_;
    const Eigen::VectorXd& y_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
    bool use_qr_ = false;
    bool ok_ = false;
};

/// Central band of M^-1 with the given half bandwidth; band(j, half + off)
/// holds (M^-1)_{j+off, j}.
Eigen::MatrixXd inverse_band(const PenalizedSystem& sys, int nb, int half) {
    Eigen::MatrixXd band = Eigen::MatrixXd::Zero(nb, 2 * half + 1);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(nb);
    for (int j = 0; j < nb; ++j) {
        e(j) = 1.0;
        Eigen::VectorXd col = sys.solve_normal(e);
        e(j) = 0.0;
        for (int off = -half; off <= half; ++off) {
            const int i = j + off;
            if (i >= 0 && i < nb) band(j, half + off) = col(i);
        }
    }
    return band;
}

Eigen::VectorXd hat_diagonal_from_band(const BSplineBasis& basis, std::span<const double> x,
                                       const Eigen::MatrixXd& band, int half) {
    Eigen::VectorXd sii(static_cast<Eigen::Index>(x.size()));
    Eigen::MatrixXd ders;
    int first = 0;
    const int order = basis.order();
    for (std::size_t i = 0; i < x.size(); ++i) {
        basis.eval_local(x[i], 0, first, ders);
        double acc = 0.0;
        for (int a = 0; a < order; ++a) {
            for (int b = 0; b < order; ++b) {
                const int ja = first + a;
                const int jb = first + b;
                const int off = ja - jb;
                if (std::abs(off) <= half) acc += ders(0, a) * ders(0, b) * band(jb, half + off);
            }
        }
        sii(static_cast<Eigen::Index>(i)) = acc;
    }
    return sii;
}

void validate_fit_inputs(const BSplineBasis& basis, std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ConfigError("x and y must have the same length");
    if (static_cast<int>(x.size()) < basis.nbasis()) {
        throw ConfigError("need at least nbasis = " + std::to_string(basis.nbasis()) +
                          " data points, got " + std::to_string(x.size()));
    }
}

SmoothFit fit_core(const BSplineBasis& basis, std::span<const double> x, std::span<const double> y,
                   double lambda, int m, DomainKind domain) {
    validate_fit_inputs(basis, x, y);
    if (lambda < 0.0) throw ConfigError("lambda must be non-negative");

    const Eigen::SparseMatrix<double> phi = build_design(basis, x);
    const Eigen::VectorXd yv = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    Eigen::SparseMatrix<double> R;
    const Eigen::SparseMatrix<double>* rp = nullptr;
    if (lambda > 0.0) {
        R = penalty_matrix(basis, m).R;
        rp = &R;
    }
    const PenalizedSystem sys(phi, rp, lambda, yv, basis, x);
    SmoothFit fit{basis, sys.coefficients(), lambda, m, domain};
    return fit;
}

}  // namespace

SmoothFit fit_least_squares(const BSplineBasis& basis, std::span<const double> x,
                            std::span<const double> y, DomainKind domain) {
    return fit_core(basis, x, y, 0.0, 2, domain);
}

SmoothFit fit_penalized(const BSplineBasis& basis, std::span<const double> x,
                        std::span<const double> y, double lambda, int m, DomainKind domain) {
    if (lambda > 0.0 && (m < 1 || m > basis.degree())) {
        throw ConfigError("penalty order m = " + std::to_string(m) +
                          " must satisfy 1 <= m <= degree = " + std::to_string(basis.degree()));
    }
    return fit_core(basis, x, y, lambda, m, domain);
}

PenaltyMatrix penalty_matrix(const BSplineBasis& basis, int m, int quadrature_points_per_span) {
    if (m < 1 || m > basis.degree()) {
        throw ConfigError("invalid penalty order m = " + std::to_string(m) + " for degree " +
                          std::to_string(basis.degree()));
    }
    int q = quadrature_points_per_span;
    if (q == 0) q = basis.degree() + 1;
    if (q < m + 1) throw ConfigError("need at least m + 1 quadrature points per span");

    std::vector<double> nodes, weights;
    gauss_legendre(q, nodes, weights);

    const auto& t = basis.knots().values;
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::MatrixXd ders;
    int first = 0;
    const int order = basis.order();
    for (int s = basis.degree(); s < basis.nbasis(); ++s) {
        const double a = t[s];
        const double b = t[s + 1];
        if (!(b > a)) continue;
        const double hw = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (int g = 0; g < q; ++g) {
            const double xg = mid + hw * nodes[g];
            const double wg = hw * weights[g];
            basis.eval_local(xg, m, first, ders);
            for (int i = 0; i < order; ++i) {
                const double di = ders(m, i);
                if (di == 0.0) continue;
                for (int j = 0; j < order; ++j) {
                    const double dj = ders(m, j);
                    if (dj == 0.0) continue;
                    trips.emplace_back(first + i, first + j, wg * di * dj);
                }
            }
        }
    }
    PenaltyMatrix pen;
    pen.m = m;
    pen.R.resize(basis.nbasis(), basis.nbasis());
    pen.R.setFromTriplets(trips.begin(), trips.end());
    return pen;
}

Eigen::VectorXd evaluate(const SmoothFit& fit, std::span<const double> points, int derivative_order) {
    if (derivative_order < 0 || derivative_order > fit.basis.degree()) {
        throw ConfigError("derivative order " + std::to_string(derivative_order) +
                          " out of range for spline degree " + std::to_string(fit.basis.degree()));
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(points.size()));
    Eigen::MatrixXd ders;
    int first = 0;
    const int order = fit.basis.order();
    for (std::size_t i = 0; i < points.size(); ++i) {
        fit.basis.eval_local(points[i], derivative_order, first, ders);
        double acc = 0.0;
        for (int j = 0; j < order; ++j) acc += ders(derivative_order, j) * fit.coefficients(first + j);
        out(static_cast<Eigen::Index>(i)) = acc;
    }
    return out;
}

Eigen::VectorXd hat_diagonal(const BSplineBasis& basis, std::span<const double> x, double lambda, int m) {
    const Eigen::SparseMatrix<double> phi = build_design(basis, x);
    Eigen::SparseMatrix<double> M = Eigen::SparseMatrix<double>(phi.transpose() * phi);
    if (lambda > 0.0) {
        const PenaltyMatrix pen = penalty_matrix(basis, m);
        M = M + Eigen::SparseMatrix<double>(lambda * pen.R);
    }
    const PenalizedSystem sys(M, basis, x);
    const Eigen::MatrixXd band = inverse_band(sys, basis.nbasis(), basis.degree());
    return hat_diagonal_from_band(basis, x, band, basis.degree());
}

SmoothingDiagnostics diagnostics(const BSplineBasis& basis, std::span<const double> x,
                                 std::span<const double> y, double lambda, int m, bool with_full_S) {
    validate_fit_inputs(basis, x, y);
    const Eigen::SparseMatrix<double> phi = build_design(basis, x);
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    Eigen::SparseMatrix<double> M = Eigen::SparseMatrix<double>(phi.transpose() * phi);
    if (lambda > 0.0) {
        const PenaltyMatrix pen = penalty_matrix(basis, m);
        M = M + Eigen::SparseMatrix<double>(lambda * pen.R);
    }
    const PenalizedSystem sys(M, basis, x);

    const Eigen::VectorXd c = sys.solve(phi.transpose() * yv);
    const Eigen::VectorXd resid = yv - phi * c;

    SmoothingDiagnostics diag;
    diag.sse = resid.squaredNorm();

    const Eigen::MatrixXd band = inverse_band(sys, basis.nbasis(), basis.degree());
    const Eigen::VectorXd sii = hat_diagonal_from_band(basis, x, band, basis.degree());
    diag.trace_S = sii.sum();

    double ocv = 0.0;
    bool saturated = false;
    for (Eigen::Index i = 0; i < sii.size(); ++i) {
        const double denom = 1.0 - sii(i);
        if (denom <= 0.0) {
            saturated = true;
            break;
        }
        const double r = resid(i) / denom;
        ocv += r * r;
    }
    diag.ocv_score = saturated ? std::numeric_limits<double>::infinity()
                               : ocv / static_cast<double>(sii.size());

    if (with_full_S) {
        if (x.size() > 4000) throw ConfigError("full smoothing matrix requested for n > 4000");
        const Eigen::MatrixXd phid(phi);
        Eigen::MatrixXd Z(basis.nbasis(), phid.rows());
        for (Eigen::Index i = 0; i < phid.rows(); ++i) {
            Z.col(i) = sys.solve(phid.row(i).transpose());
        }
        diag.S = phid * Z;
    }
    return diag;
}

OcvResult select_lambda_ocv(const BSplineBasis& basis, std::span<const double> x,
                            std::span<const double> y, int m, std::span<const double> lambda_grid) {
    validate_fit_inputs(basis, x, y);
    if (lambda_grid.empty()) throw ConfigError("lambda grid must be non-empty");
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        if (lambda_grid[i] < 0.0) throw ConfigError("lambda grid values must be non-negative");
        if (i > 0 && lambda_grid[i] < lambda_grid[i - 1]) {
            throw ConfigError("lambda grid must be sorted ascending");
        }
    }
    if (m < 1 || m > basis.degree()) {
        throw ConfigError("invalid penalty order m = " + std::to_string(m) + " for degree " +
                          std::to_string(basis.degree()));
    }

    const Eigen::SparseMatrix<double> phi = build_design(basis, x);
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    const Eigen::VectorXd rhs = phi.transpose() * yv;
    const Eigen::SparseMatrix<double> gram = Eigen::SparseMatrix<double>(phi.transpose() * phi);
    const PenaltyMatrix pen = penalty_matrix(basis, m);

    const double inf = std::numeric_limits<double>::infinity();
    // Scores this far below the data scale are floating-point residue of an
    // exact fit; treat them as zero so ties resolve toward the larger lambda.
    const double zero_floor = 1e-28 * std::max(1.0, yv.squaredNorm() / static_cast<double>(yv.size()));

    OcvResult result;
    result.scores.reserve(lambda_grid.size());
    double best_adj = inf;
    bool have_best = false;

    for (double lambda : lambda_grid) {
        Eigen::SparseMatrix<double> M = gram;
        if (lambda > 0.0) M = M + Eigen::SparseMatrix<double>(lambda * pen.R);
        const PenalizedSystem sys(M, basis, x, /*throw_on_singular=*/false);
        if (!sys.ok()) {
            result.scores.push_back(inf);
            result.warnings.push_back("lambda=" + std::to_string(lambda) + ": singular system, skipped");
            continue;
        }
        const Eigen::VectorXd c = sys.solve(rhs);
        const Eigen::VectorXd resid = yv - phi * c;
        const Eigen::MatrixXd band = inverse_band(sys, basis.nbasis(), basis.degree());
        const Eigen::VectorXd sii = hat_diagonal_from_band(basis, x, band, basis.degree());

        bool saturated = false;
        double acc = 0.0;
        for (Eigen::Index i = 0; i < sii.size(); ++i) {
            const double denom = 1.0 - sii(i);
            if (denom <= 1e-12) {
                saturated = true;
                break;
            }
            const double r = resid(i) / denom;
            acc += r * r;
        }
        if (saturated) {
            result.scores.push_back(inf);
            result.warnings.push_back("lambda=" + std::to_string(lambda) +
                                      ": leverage-saturated (S_ii >= 1), skipped");
            continue;
        }
        const double score = acc / static_cast<double>(sii.size());
        result.scores.push_back(score);
        const double adj = score < zero_floor ? 0.0 : score;
        if (!have_best || adj <= best_adj * (1.0 + 1e-12)) {
            best_adj = adj;
            result.best_lambda = lambda;
            have_best = true;
        }
    }
    if (!have_best) throw NumericError("OCV: no usable lambda in the grid (all skipped)");
    return result;
}

Eigen::VectorXd solve_penalized_normal_equations(const Eigen::MatrixXd& gram,
                                                 const Eigen::MatrixXd& penalty, double lambda,
                                                 const Eigen::VectorXd& rhs) {
    const Eigen::MatrixXd M = gram + lambda * penalty;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() == Eigen::Success) return llt.solve(rhs);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
    if (qr.rank() < M.rows()) {
        throw NumericError("singular fit: normal equations are rank deficient (rank " +
                           std::to_string(qr.rank()) + " of " + std::to_string(M.rows()) + ")");
    }
    return qr.solve(rhs);
}

}  // namespace splinedyn
