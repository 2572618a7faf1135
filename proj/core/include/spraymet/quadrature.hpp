#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "spraymet/expr.hpp"

namespace spraymet {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
};

/// Adaptive 8-point Gauss–Legendre on [a, b]. An interval is accepted when
/// the single-panel and two-panel estimates differ by at most its share of
/// `tol`; otherwise it is bisected. Throws QuadratureFailure past max_depth
/// or on a non-finite integrand.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double tol,
                           int max_depth = 40);

/// Piecewise linear path through the given vertices.
struct Polyline {
    std::vector<Point> vertices;

    std::size_t segments() const noexcept { return vertices.empty() ? 0 : vertices.size() - 1; }
};

/// ∫ ω along the polyline, ω given by the four outputs of `omega`
/// (dx1, dx2, dy1, dy2 components). Empty segments contribute nothing.
QuadratureResult line_integral(const CompiledExprs& omega, const Polyline& path, double tol, int max_depth = 40);

}  // namespace spraymet
