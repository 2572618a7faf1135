#include "spraymet/quadrature.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "spraymet/error.hpp"

namespace spraymet {
namespace {

// Nodes and weights on [-1, 1], positive half.
constexpr std::array<double, 4> kNodes{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                       0.9602898564975363};
constexpr std::array<double, 4> kWeights{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                         0.1012285362903763};

struct Panel {
    const std::function<double(double)>& f;
    std::size_t evals = 0;

    double rule(double a, double b) {
        const double m = 0.5 * (a + b);
        const double r = 0.5 * (b - a);
        double s = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            const double lo = f(m - r * kNodes[k]);
            const double hi = f(m + r * kNodes[k]);
            if (!std::isfinite(lo) || !std::isfinite(hi)) {
                std::ostringstream os;
                os.precision(17);
                os << "non-finite integrand near t = " << m;
                throw QuadratureFailure(os.str());
            }
            s += kWeights[k] * (lo + hi);
        }
        evals += 8;
        return r * s;
    }

    double adapt(double a, double b, double whole, double tol, int depth, double& err) {
        const double m = 0.5 * (a + b);
        const double left = rule(a, m);
        const double right = rule(m, b);
        const double diff = std::fabs(left + right - whole);
        // Floor the local target at a few ulps of the panel value so that
        // tiny tolerances cannot force bisection down to roundoff.
        const double floor = 1e-15 * (std::fabs(left) + std::fabs(right));
        if (diff <= std::max(tol, floor)) {
            err += diff;
            return left + right;
        }
        if (depth <= 0) {
            std::ostringstream os;
            os.precision(17);
            os << "maximum bisection depth reached on [" << a << ", " << b << "]";
            throw QuadratureFailure(os.str());
        }
        return adapt(a, m, left, 0.5 * tol, depth - 1, err) + adapt(m, b, right, 0.5 * tol, depth - 1, err);
    }
};

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
    QuadratureResult out;
    if (a == b) return out;
    Panel p{f};
    const double whole = p.rule(a, b);
    out.value = p.adapt(a, b, whole, tol, max_depth, out.error_estimate);
    out.evaluations = p.evals;
    return out;
}

QuadratureResult line_integral(const CompiledExprs& omega, const Polyline& path, double tol, int max_depth) {
    QuadratureResult out;
    const std::size_t n = path.segments();
    if (n == 0) return out;
    const double seg_tol = tol / static_cast<double>(n);
    std::array<double, 4> w{};
    for (std::size_t s = 0; s < n; ++s) {
        const Point& p = path.vertices[s];
        const Point& q = path.vertices[s + 1];
        std::array<double, 4> d{};
        bool empty = true;
        for (std::size_t k = 0; k < 4; ++k) {
            d[k] = q[k] - p[k];
            empty = empty && d[k] == 0.0;
        }
        if (empty) continue;
        auto integrand = [&](double t) {
            Point r;
            for (std::size_t k = 0; k < 4; ++k) r[k] = p[k] + t * d[k];
            if (!omega.try_evaluate(r, w)) return std::nan("");
            return w[0] * d[0] + w[1] * d[1] + w[2] * d[2] + w[3] * d[3];
        };
        const QuadratureResult r = integrate(integrand, 0.0, 1.0, seg_tol, max_depth);
        out.value += r.value;
        out.error_estimate += r.error_estimate;
        out.evaluations += r.evaluations;
    }
    return out;
}

}  // namespace spraymet
