#pragma once

#include <random>
#include <string>

#include "job.hpp"
#include "spraymet/expr.hpp"
#include "spraymet/spraygeo.hpp"

namespace spraymet::fixture {

inline app::JobSpec job(const std::string& name) {
    return app::load_job(std::string(SPRAYMET_FIXTURES_DIR) + "/" + name + ".job");
}

inline Spray poincare() { return job("poincare").spray(); }
inline Spray degenerate() { return job("degenerate").spray(); }
inline Spray nonmetrizable() { return job("nonmetrizable").spray(); }

/// Poincaré spray with G1 + 0.1 y1^3 / |y|; not metrizable.
inline Spray perturbed_poincare() {
    Spray s = poincare();
    s.g1 = s.g1 + parse_expr("0.1*y1^3/((y1^2 + y2^2)^(1/2))");
    return s;
}

inline Spray flat() {
    Spray s = poincare();
    s.g1 = Expr{};
    s.g2 = Expr{};
    return s;
}

/// Random expression built from the grammar's node kinds, shaped so that
/// it is smooth on x2 > 0.
class RandomExpr {
public:
    explicit RandomExpr(std::uint64_t seed) : rng_(seed) {}

    Expr operator()(int depth) {
        std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 8);
        switch (pick(rng_)) {
            case 0: return Expr::variable(kAllVars[std::uniform_int_distribution<int>(0, 3)(rng_)]);
            case 1: return Expr::constant(std::uniform_real_distribution<double>(0.5, 2.0)(rng_));
            case 2: return (*this)(depth - 1) + (*this)(depth - 1);
            case 3: return (*this)(depth - 1) - (*this)(depth - 1);
            case 4: return (*this)(depth - 1) * (*this)(depth - 1);
            case 5: return (*this)(depth - 1) / (Expr::constant(1.0) + pow((*this)(depth - 1), Rational(2)));
            case 6: return pow((*this)(depth - 1), Rational(std::uniform_int_distribution<int>(2, 3)(rng_)));
            case 7: return sqrt(Expr::constant(1.0) + pow((*this)(depth - 1), Rational(2)));
            default: return pow(Expr::constant(1.0) + pow((*this)(depth - 1), Rational(2)), Rational(-3, 2));
        }
    }

    Point point() {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        return Point(u(rng_), 0.5 + 0.5 * (u(rng_) + 1.0), u(rng_), u(rng_));
    }

private:
    std::mt19937_64 rng_;
};

}  // namespace spraymet::fixture
