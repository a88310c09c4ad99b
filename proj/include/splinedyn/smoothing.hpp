#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "splinedyn/bspline.hpp"

namespace splinedyn {

enum class DomainKind { time, voltage };

/// A fitted smooth function: basis expansion with coefficient vector c.
/// lambda = 0 marks an ordinary (unpenalized) least-squares fit.
struct SmoothFit {
    BSplineBasis basis;
    Eigen::VectorXd coefficients;
    double lambda = 0.0;
    int penalty_order = 2;
    DomainKind domain = DomainKind::time;
};

/// Gram matrix of m-th basis derivatives, R_jk = integral D^m phi_j D^m phi_k.
/// Assembled per knot span with Gauss-Legendre quadrature, which is exact for
/// the piecewise-polynomial integrand at the default point count.
struct PenaltyMatrix {
    Eigen::SparseMatrix<double> R;
    int m = 2;

    [[nodiscard]] Eigen::MatrixXd dense() const { return Eigen::MatrixXd(R); }
};

/// Hat-matrix based diagnostics of a (penalized) fit.
struct SmoothingDiagnostics {
    double trace_S = 0.0;   ///< effective degrees of freedom
    double sse = 0.0;
    double ocv_score = 0.0;
    Eigen::MatrixXd S;      ///< full n x n smoothing matrix; empty unless requested
};

struct OcvResult {
    double best_lambda = 0.0;
    std::vector<double> scores;  ///< one per grid value; +inf marks skipped entries
    std::vector<std::string> warnings;
};

/// Ordinary least-squares fit of y over x in the given basis. The normal
/// equations are solved by Cholesky with a QR fallback; rank deficiency (for
/// example an empty knot span) raises NumericError naming the empty spans.
SmoothFit fit_least_squares(const BSplineBasis& basis, std::span<const double> x,
                            std::span<const double> y, DomainKind domain = DomainKind::time);

/// Roughness penalty matrix for derivative order m (1 <= m <= degree).
/// quadrature_points_per_span = 0 selects the default degree + 1.
PenaltyMatrix penalty_matrix(const BSplineBasis& basis, int m, int quadrature_points_per_span = 0);

/// Penalized least-squares fit with roughness weight lambda >= 0.
SmoothFit fit_penalized(const BSplineBasis& basis, std::span<const double> x,
                        std::span<const double> y, double lambda, int m,
                        DomainKind domain = DomainKind::time);

/// Ordinary cross validation over an ascending lambda grid. Scores follow
/// OCV(l) = mean(((y - yhat) / (1 - S_ii))^2); grid values with any S_ii >= 1
/// are scored +inf and skipped with a warning. Ties prefer the larger lambda.
OcvResult select_lambda_ocv(const BSplineBasis& basis, std::span<const double> x,
                            std::span<const double> y, int m, std::span<const double> lambda_grid);

/// Evaluate the fitted function or one of its derivatives (<= degree).
Eigen::VectorXd evaluate(const SmoothFit& fit, std::span<const double> points, int derivative_order);

/// Diagonal of the smoothing matrix S = Phi (Phi^T Phi + lambda R)^-1 Phi^T.
Eigen::VectorXd hat_diagonal(const BSplineBasis& basis, std::span<const double> x, double lambda, int m);

/// trace(S), SSE and the OCV score of a fit; with_full_S additionally builds
/// the dense n x n smoothing matrix (small n only).
SmoothingDiagnostics diagnostics(const BSplineBasis& basis, std::span<const double> x,
                                 std::span<const double> y, double lambda, int m,
                                 bool with_full_S = false);

/// Solve (gram + lambda * penalty) c = rhs with the project-wide policy:
/// Cholesky first, column-pivoted QR on failure, error on rank deficiency.
Eigen::VectorXd solve_penalized_normal_equations(const Eigen::MatrixXd& gram,
                                                 const Eigen::MatrixXd& penalty, double lambda,
                                                 const Eigen::VectorXd& rhs);

}  // namespace splinedyn
