#include "splinedyn/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "splinedyn/errors.hpp"

namespace splinedyn {

namespace {
constexpr int kMaxDegree = 7;
}

void KnotVector::validate() const {
    if (values.size() < 2) throw ConfigError("knot vector needs at least two knots");
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] < values[i - 1]) {
            throw ConfigError("knot vector must be non-decreasing (violated at index " +
                              std::to_string(i) + ")");
        }
    }
}

BSplineBasis::BSplineBasis(KnotVector knots, int degree) : knots_(std::move(knots)), degree_(degree) {
    if (degree_ < 0) throw ConfigError("spline degree must be non-negative");
    if (degree_ > kMaxDegree) {
        throw ConfigError("spline degree " + std::to_string(degree_) + " exceeds supported maximum " +
                          std::to_string(kMaxDegree));
    }
    knots_.validate();
    nbasis_ = static_cast<int>(knots_.size()) - (degree_ + 1);
    if (nbasis_ < 1) throw ConfigError("knot vector too short for the requested degree");
    if (!(knots_.values[degree_] < knots_.values[nbasis_])) {
        throw ConfigError("basis domain is empty (all span-defining knots coincide)");
    }
}

BSplineBasis BSplineBasis::uniform(double lo, double hi, int grid_size, int degree) {
    if (!(lo < hi)) throw ConfigError("invalid domain: lo must be < hi");
    if (grid_size < 2) throw ConfigError("grid_size must be at least 2");
    if (degree < 0) throw ConfigError("spline degree must be non-negative");
    if (degree > kMaxDegree) {
        throw ConfigError("spline degree " + std::to_string(degree) + " exceeds supported maximum " +
                          std::to_string(kMaxDegree));
    }

    KnotVector kv;
    kv.values.reserve(static_cast<std::size_t>(grid_size + 1 + 2 * degree));
    for (int i = 0; i < degree + 1; ++i) kv.values.push_back(lo);
    const double width = (hi - lo) / grid_size;
    for (int i = 1; i < grid_size; ++i) kv.values.push_back(lo + i * width);
    for (int i = 0; i < degree + 1; ++i) kv.values.push_back(hi);
    return BSplineBasis(std::move(kv), degree);
}

BSplineBasis make_uniform_basis(double domain_lo, double domain_hi, int grid_size, int degree) {
    return BSplineBasis::uniform(domain_lo, domain_hi, grid_size, degree);
}

void BSplineBasis::check_in_domain(double x) const {
    const double lo = domain_lo();
    const double hi = domain_hi();
    const double slack = 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)});
    if (x < lo - slack || x > hi + slack) {
        throw NumericError("evaluation point " + std::to_string(x) + " outside basis domain [" +
                           std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

int BSplineBasis::find_span(double x) const {
    const auto& t = knots_.values;
    const int lo = degree_;
    const int hi = nbasis_;
    if (x >= t[hi]) {
        int i = hi - 1;
        while (i > lo && t[i] == t[i + 1]) --i;
        return i;
    }
    if (x <= t[lo]) {
        int i = lo;
        while (i < hi - 1 && t[i + 1] == t[i]) ++i;
        return i;
    }
    auto it = std::upper_bound(t.begin() + lo, t.begin() + hi + 1, x);
    return static_cast<int>(it - t.begin()) - 1;
}

// Triangular Cox-de Boor table plus the derivative recurrence, after
// Piegl & Tiller A2.3. Degenerate 0/0 ratios from repeated knots are taken
// as zero, matching the recursion's "otherwise 0" branch.
void BSplineBasis::eval_local(double x, int max_deriv, int& first_index, Eigen::MatrixXd& ders) const {
    check_in_domain(x);
    const auto& t = knots_.values;
    const int p = degree_;
    const int span = find_span(x);
    first_index = span - p;

    ders.setZero(max_deriv + 1, p + 1);

    // ndu[j][r]: upper triangle holds basis values of increasing degree,
    // lower triangle the knot differences used by the derivative pass.
    Eigen::MatrixXd ndu(p + 1, p + 1);
    std::vector<double> left(p + 1), right(p + 1);
    ndu(0, 0) = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - t[span + 1 - j];
        right[j] = t[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu(j, r) = right[r + 1] + left[j - r];
            const double temp = ndu(j, r) != 0.0 ? ndu(r, j - 1) / ndu(j, r) : 0.0;
            ndu(r, j) = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu(j, j) = saved;
    }
    for (int j = 0; j <= p; ++j) ders(0, j) = ndu(j, p);

    const int nd = std::min(max_deriv, p);
    if (nd == 0) return;

    Eigen::MatrixXd a(2, p + 1);
    for (int r = 0; r <= p; ++r) {
        int s1 = 0;
        int s2 = 1;
        a.setZero();
        a(0, 0) = 1.0;
        for (int k = 1; k <= nd; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = p - k;
            if (r >= k) {
                const double den = ndu(pk + 1, rk);
                a(s2, 0) = den != 0.0 ? a(s1, 0) / den : 0.0;
                d = a(s2, 0) * ndu(rk, pk);
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = r - 1 <= pk ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                const double den = ndu(pk + 1, rk + j);
                a(s2, j) = den != 0.0 ? (a(s1, j) - a(s1, j - 1)) / den : 0.0;
                d += a(s2, j) * ndu(rk + j, pk);
            }
            if (r <= pk) {
                const double den = ndu(pk + 1, r);
                a(s2, k) = den != 0.0 ? -a(s1, k - 1) / den : 0.0;
                d += a(s2, k) * ndu(r, pk);
            }
            ders(k, r) = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= nd; ++k) {
        for (int j = 0; j <= p; ++j) ders(k, j) *= factor;
        factor *= (p - k);
    }
}

std::vector<double> BSplineBasis::greville_abscissae() const {
    const auto& t = knots_.values;
    std::vector<double> xi(static_cast<std::size_t>(nbasis_));
    for (int i = 0; i < nbasis_; ++i) {
        if (degree_ == 0) {
            xi[i] = 0.5 * (t[i] + t[i + 1]);
        } else {
            double s = 0.0;
            for (int j = 1; j <= degree_; ++j) s += t[i + j];
            xi[i] = s / degree_;
        }
    }
    return xi;
}

BasisMatrix eval_basis(const BSplineBasis& basis, std::span<const double> points, int derivative_order) {
    if (derivative_order < 0) throw ConfigError("derivative order must be non-negative");
    BasisMatrix out;
    out.derivative_order = derivative_order;
    out.eval_points.assign(points.begin(), points.end());
    out.values.setZero(static_cast<Eigen::Index>(points.size()), basis.nbasis());
    out.derivative_exceeds_degree = derivative_order > basis.degree();
    if (out.derivative_exceeds_degree) {
        for (double x : points) basis.check_in_domain(x);  // still a contract violation if outside
        return out;
    }

    Eigen::MatrixXd ders;
    int first = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        basis.eval_local(points[i], derivative_order, first, ders);
        for (int j = 0; j <= basis.degree(); ++j) {
            out.values(static_cast<Eigen::Index>(i), first + j) = ders(derivative_order, j);
        }
    }
    return out;
}

}  // namespace splinedyn
