#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace splinedyn {

/// Non-decreasing knot sequence. The evaluable domain of a basis built on top
/// of it is [knots[degree], knots[nbasis]]; for clamped vectors that is the
/// full data range.
struct KnotVector {
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double front() const noexcept { return values.front(); }
    [[nodiscard]] double back() const noexcept { return values.back(); }

    /// Throws ConfigError if the sequence is decreasing anywhere.
    void validate() const;
};

/// Dense evaluation of a basis (or one of its derivatives) at a point set.
/// Row i, column j holds D^m phi_j(x_i).
struct BasisMatrix {
    Eigen::MatrixXd values;
    std::vector<double> eval_points;
    int derivative_order = 0;
    /// Set when the requested derivative order exceeds the polynomial degree;
    /// the values are then identically zero (not an error).
    bool derivative_exceeds_degree = false;
};

/// B-spline basis over a knot vector, evaluated with the Cox-de Boor
/// recursion. order = degree + 1; nbasis = knot_count - order.
///
/// Knot spans are treated as half-open [t_i, t_{i+1}) with the final span
/// closed, so the right end of the domain is evaluable. When a recursion
/// denominator vanishes (repeated knots) the corresponding weight is zero.
class BSplineBasis {
public:
    /// Trivial placeholder basis: a single degree-0 span on [0, 1].
    BSplineBasis() : BSplineBasis(KnotVector{{0.0, 1.0}}, 0) {}

    /// Build a basis on an explicit knot vector. The vector is not required
    /// to be clamped; nbasis must come out >= 1.
    BSplineBasis(KnotVector knots, int degree);

    /// Clamped basis with grid_size evenly spaced spans on [lo, hi].
    /// The breakpoint grid has grid_size + 1 points including both ends, and
    /// the end knots are repeated order-fold, giving nbasis = degree + grid_size.
    static BSplineBasis uniform(double lo, double hi, int grid_size, int degree);

    [[nodiscard]] int degree() const noexcept { return degree_; }
    [[nodiscard]] int order() const noexcept { return degree_ + 1; }
    [[nodiscard]] int nbasis() const noexcept { return nbasis_; }
    [[nodiscard]] double domain_lo() const noexcept { return knots_.values[degree_]; }
    [[nodiscard]] double domain_hi() const noexcept { return knots_.values[nbasis_]; }
    [[nodiscard]] const KnotVector& knots() const noexcept { return knots_; }

    /// Index of the knot span containing x. Result i satisfies
    /// knots[i] <= x < knots[i+1] (last span closed), degree <= i < nbasis.
    [[nodiscard]] int find_span(double x) const;

    /// Evaluate the `order` basis functions that are non-zero at x, together
    /// with their derivatives up to max_deriv. On return first_index is the
    /// index of the first of those functions and ders is a
    /// (max_deriv+1) x order table; row m holds the m-th derivatives.
    /// Rows beyond the degree are zero.
    void eval_local(double x, int max_deriv, int& first_index, Eigen::MatrixXd& ders) const;

    /// Throws NumericError when x lies outside the domain (tiny roundoff
    /// slack is tolerated).
    void check_in_domain(double x) const;

    /// Greville abscissae: coefficient sites at which the basis reproduces
    /// f(x) = x when the coefficients equal the abscissae (degree >= 1).
    [[nodiscard]] std::vector<double> greville_abscissae() const;

private:
    KnotVector knots_;
    int degree_ = 0;
    int nbasis_ = 0;
};

/// Clamped basis with evenly spaced knots spanning [domain_lo, domain_hi].
/// grid_size counts the knot spans, so nbasis = degree + grid_size.
BSplineBasis make_uniform_basis(double domain_lo, double domain_hi, int grid_size, int degree);

/// Dense basis (or derivative) matrix at the given points. Points must lie in
/// the basis domain. derivative_order > degree yields the zero matrix with
/// BasisMatrix::derivative_exceeds_degree set instead of an error.
BasisMatrix eval_basis(const BSplineBasis& basis, std::span<const double> points, int derivative_order);

}  // namespace splinedyn
