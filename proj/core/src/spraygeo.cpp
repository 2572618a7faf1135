#include "spraymet/spraygeo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spraymet/error.hpp"

namespace spraymet {

namespace {

const Expr& y(std::size_t i) {
    static const std::array<Expr, 2> ys{Expr::variable(Var::y1), Expr::variable(Var::y2)};
    return ys[i];
}

Var xvar(std::size_t i) { return i == 0 ? Var::x1 : Var::x2; }
Var yvar(std::size_t i) { return i == 0 ? Var::y1 : Var::y2; }

// S(f) = y^k df/dx^k - 2 G^k df/dy^k
Expr spray_derivative(const Spray& s, const Expr& f) {
    const std::array<Expr, 4> coeffs{y(0), y(1), Expr::constant(-2.0) * s.g1, Expr::constant(-2.0) * s.g2};
    return directional(f, coeffs);
}

std::string describe(const Point& p) {
    std::ostringstream os;
    os.precision(17);
    os << p;
    return os.str();
}

}  // namespace

SprayDiagnostics validate_spray(const Spray& s, const RunConfig& cfg) {
    const std::vector<Point> samples = sample_points(s.domain, cfg.samples, cfg.seed);
    SprayDiagnostics d;
    d.samples_checked = samples.size();
    d.g1 = homogeneity_degree_check(s.g1, Rational(2), samples, cfg.tol.homogeneity);
    d.g2 = homogeneity_degree_check(s.g2, Rational(2), samples, cfg.tol.homogeneity);
    for (const auto* h : {&d.g1, &d.g2}) {
        if (!h->ok) {
            std::ostringstream os;
            os << "G" << (h == &d.g1 ? 1 : 2) << " is not 2+-homogeneous: residual " << h->max_residual
               << " at " << describe(h->worst);
            throw HomogeneityViolation(os.str());
        }
    }
    return d;
}

Connection connection(const Spray& s) {
    Connection c;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) c.n[i][j] = partial(s.g(i), yvar(j));
    }
    return c;
}

JacobiEndo jacobi(const Spray& s, const Connection& c) {
    JacobiEndo out;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            Expr r = Expr::constant(2.0) * partial(s.g(i), xvar(j)) - spray_derivative(s, c.n[i][j]);
            for (std::size_t k = 0; k < 2; ++k) r = r - c.n[i][k] * c.n[k][j];
            out.r[i][j] = r;
        }
    }
    return out;
}

JacobiEndo jacobi(const Spray& s) { return jacobi(s, connection(s)); }

double jacobi_spray_residual(const JacobiEndo& j, std::span<const Point> samples) {
    const CompiledExprs prog{j.r[0][0], j.r[0][1], j.r[1][0], j.r[1][1]};
    double worst = 0.0;
    std::array<double, 4> r{};
    for (const Point& p : samples) {
        prog.evaluate(p, r);
        const double scale = std::max({std::fabs(r[0]), std::fabs(r[1]), std::fabs(r[2]), std::fabs(r[3])}) *
                             (std::fabs(p.y1()) + std::fabs(p.y2()));
        const double res = std::fabs(r[0] * p.y1() + r[1] * p.y2()) + std::fabs(r[2] * p.y1() + r[3] * p.y2());
        if (scale > 0.0) worst = std::max(worst, res / scale);
    }
    return worst;
}

JacobiEndo jacobi(const Spray& s, const Connection& c, std::span<const Point> samples, double tol) {
    JacobiEndo j = jacobi(s, c);
    const double res = jacobi_spray_residual(j, samples);
    if (!(res <= tol))
        throw InternalIdentityFailure("Jacobi endomorphism does not annihilate S: residual " + std::to_string(res));
    return j;
}

Isotropy isotropy(const JacobiEndo& j) {
    const auto& R = j.r;
    Isotropy iso;
    iso.rho = R[0][0] + R[1][1];
    const Expr norm2 = pow(y(0), Rational(2)) + pow(y(1), Rational(2));
    iso.alpha1 = (y(0) * R[1][1] - y(1) * R[1][0]) / norm2;
    iso.alpha2 = (y(1) * R[0][0] - y(0) * R[0][1]) / norm2;
    iso.alpha1_quotients = {R[1][1] / y(0), -(R[1][0] / y(1))};
    iso.alpha2_quotients = {R[0][0] / y(1), -(R[0][1] / y(0))};
    return iso;
}

double IsotropyCheck::max() const { return std::max({trace, alpha_of_spray, quotients, isotropic_form}); }

IsotropyCheck check_isotropy(const Isotropy& iso, const JacobiEndo& j, std::span<const Point> samples) {
    const auto& R = j.r;
    const CompiledExprs prog{iso.rho, iso.alpha1, iso.alpha2, R[0][0], R[0][1], R[1][0], R[1][1]};
    IsotropyCheck out;
    std::array<double, 7> v{};
    for (const Point& p : samples) {
        prog.evaluate(p, v);
        const double rho = v[0], a1 = v[1], a2 = v[2];
        const std::array<std::array<double, 2>, 2> r{{{v[3], v[4]}, {v[5], v[6]}}};
        const double y1 = p.y1(), y2 = p.y2();
        const double ny = p.fiber_norm();
        const double rmax = std::max({std::fabs(r[0][0]), std::fabs(r[0][1]), std::fabs(r[1][0]), std::fabs(r[1][1])});
        const double tiny = 1e-300;

        out.trace = std::max(out.trace, std::fabs(rho - (r[0][0] + r[1][1])) / (std::fabs(r[0][0]) + std::fabs(r[1][1]) + tiny));
        out.alpha_of_spray = std::max(
            out.alpha_of_spray,
            std::fabs(a1 * y1 + a2 * y2 - rho) / (std::fabs(a1 * y1) + std::fabs(a2 * y2) + std::fabs(rho) + tiny));

        const double qscale = std::hypot(a1, a2) + rmax / ny + tiny;
        if (std::fabs(y1) >= 0.1 * ny) {
            out.quotients = std::max(out.quotients, std::fabs(a1 - r[1][1] / y1) / qscale);
            out.quotients = std::max(out.quotients, std::fabs(a2 + r[0][1] / y1) / qscale);
        }
        if (std::fabs(y2) >= 0.1 * ny) {
            out.quotients = std::max(out.quotients, std::fabs(a1 + r[1][0] / y2) / qscale);
            out.quotients = std::max(out.quotients, std::fabs(a2 - r[0][0] / y2) / qscale);
        }

        const std::array<double, 2> yy{y1, y2};
        const std::array<double, 2> aa{a1, a2};
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t k = 0; k < 2; ++k) {
                const double model = (i == k ? rho : 0.0) - aa[k] * yy[i];
                out.isotropic_form = std::max(out.isotropic_form, std::fabs(r[i][k] - model) / (rmax + tiny));
            }
        }
    }
    return out;
}

Isotropy isotropy(const JacobiEndo& j, std::span<const Point> samples, double tol) {
    Isotropy iso = isotropy(j);
    const IsotropyCheck c = check_isotropy(iso, j, samples);
    if (!(c.max() <= tol))
        throw IsotropyInconsistency("isotropy cross-check failed: residual " + std::to_string(c.max()));
    return iso;
}

FlatnessResult flatness_probe(const Isotropy& iso, const JacobiEndo& j, std::span<const Point> samples, double tol) {
    const auto& R = j.r;
    const CompiledExprs prog{iso.rho, R[0][0], R[0][1], R[1][0], R[1][1]};
    FlatnessResult out;
    out.non_flat = true;
    out.min_ratio = std::numeric_limits<double>::infinity();
    std::array<double, 5> v{};
    for (const Point& p : samples) {
        prog.evaluate(p, v);
        const double y2n = p.y1() * p.y1() + p.y2() * p.y2();
        const double rmax = std::max({std::fabs(v[1]), std::fabs(v[2]), std::fabs(v[3]), std::fabs(v[4])});
        const double ratio = std::fabs(v[0]) / (y2n + rmax);
        if (ratio < out.min_ratio) {
            out.min_ratio = ratio;
            if (!(ratio >= tol)) {
                out.non_flat = false;
                out.witness = p;
            }
        }
    }
    if (samples.empty()) out.min_ratio = 0.0, out.non_flat = false;
    return out;
}

SprayGeometry analyze(const Spray& s) {
    SprayGeometry g;
    g.spray = s;
    g.conn = connection(s);
    g.jac = jacobi(s, g.conn);
    g.iso = isotropy(g.jac);
    return g;
}

std::vector<LadderEntry> homogeneity_ladder(const SprayGeometry& g, std::span<const Point> samples) {
    std::vector<LadderEntry> out;
    auto add = [&](std::string name, const Expr& e, int k) {
        const auto h = homogeneity_degree_check(e, Rational(k), samples, 0.0);
        out.push_back({std::move(name), k, h.max_residual});
    };
    add("G1", g.spray.g1, 2);
    add("G2", g.spray.g2, 2);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            const std::string ij = std::to_string(i + 1) + std::to_string(j + 1);
            add("N" + ij, g.conn.n[i][j], 1);
            add("R" + ij, g.jac.r[i][j], 2);
        }
    }
    add("alpha1", g.iso.alpha1, 1);
    add("alpha2", g.iso.alpha2, 1);
    add("rho", g.iso.rho, 2);
    return out;
}

}  // namespace spraymet
