#include "spraymet/forms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "spraymet/error.hpp"

namespace spraymet {

TwoForm operator+(const TwoForm& a, const TwoForm& b) {
    TwoForm r;
    for (std::size_t k = 0; k < 6; ++k) r.c[k] = a.c[k] + b.c[k];
    return r;
}

TwoForm operator*(const Expr& f, const TwoForm& t) {
    TwoForm r;
    for (std::size_t k = 0; k < 6; ++k) r.c[k] = f * t.c[k];
    return r;
}

OneForm differential(const Expr& f) {
    OneForm w;
    for (Var v : kAllVars) w.c[static_cast<std::size_t>(v)] = partial(f, v);
    return w;
}

TwoForm exterior_derivative(const OneForm& w) {
    TwoForm t;
    for (std::size_t k = 0; k < 6; ++k) {
        const auto [a, b] = kTwoFormBasis[k];
        t.c[k] = partial(w.c[b], kAllVars[a]) - partial(w.c[a], kAllVars[b]);
    }
    return t;
}

TwoForm wedge(const OneForm& x, const OneForm& y) {
    TwoForm t;
    for (std::size_t k = 0; k < 6; ++k) {
        const auto [a, b] = kTwoFormBasis[k];
        t.c[k] = x.c[a] * y.c[b] - x.c[b] * y.c[a];
    }
    return t;
}

Expr contract(const OneForm& w, const VectorField& x) {
    Expr s;
    for (std::size_t a = 0; a < 4; ++a) s = s + w.c[a] * x.c[a];
    return s;
}

double pair(const std::array<double, 6>& t, const std::array<double, 4>& x, const std::array<double, 4>& y) {
    double s = 0.0;
    for (std::size_t k = 0; k < 6; ++k) {
        const auto [a, b] = kTwoFormBasis[k];
        s += t[k] * (x[a] * y[b] - x[b] * y[a]);
    }
    return s;
}

OneForm alpha_over_rho(const SprayGeometry& g) {
    return OneForm{{g.iso.alpha1 / g.iso.rho, g.iso.alpha2 / g.iso.rho, Expr{}, Expr{}}};
}

OneForm omega_candidate(const SprayGeometry& g) {
    const OneForm theta = alpha_over_rho(g);
    OneForm w;
    for (std::size_t j = 0; j < 2; ++j) w.c[j] = theta.c[0] * g.conn.n[0][j] + theta.c[1] * g.conn.n[1][j];
    w.c[2] = theta.c[0];
    w.c[3] = theta.c[1];
    return w;
}

TwoForm big_omega(const SprayGeometry& g) {
    const OneForm theta = alpha_over_rho(g);
    const OneForm w = omega_candidate(g);
    return exterior_derivative(theta) + Expr::constant(2.0) * wedge(w, theta);
}

double ClosednessResult::fraction_above(double threshold) const {
    if (per_sample.empty()) return 0.0;
    const auto n = std::count_if(per_sample.begin(), per_sample.end(), [&](double r) { return r > threshold; });
    return static_cast<double>(n) / static_cast<double>(per_sample.size());
}

ClosednessResult closedness(const OneForm& w, std::span<const Point> samples, double tol) {
    const TwoForm dw = exterior_derivative(w);
    std::vector<Expr> roots(dw.c.begin(), dw.c.end());
    for (std::size_t b = 0; b < 4; ++b) {
        for (Var v : kAllVars) roots.push_back(partial(w.c[b], v));
    }
    const CompiledExprs prog(roots);

    ClosednessResult out;
    out.symbolically_zero = std::all_of(dw.c.begin(), dw.c.end(), [](const Expr& e) { return simplify(e).expr.is_zero(); });
    out.per_sample.reserve(samples.size());
    std::vector<double> v(roots.size());
    for (const Point& p : samples) {
        prog.evaluate(p, v);
        double num = 0.0, scale = 0.0;
        for (std::size_t k = 0; k < 6; ++k) num = std::max(num, std::fabs(v[k]));
        for (std::size_t k = 6; k < v.size(); ++k) scale = std::max(scale, std::fabs(v[k]));
        const double r = num / (1.0 + scale);
        out.per_sample.push_back(r);
        if (!out.witness || r > out.max_residual) {
            out.max_residual = r;
            out.witness = p;
        }
    }
    if (out.max_residual <= tol) {
        out.kind = ClosedKind::Closed;
        out.witness.reset();
    } else if (out.max_residual > 10.0 * tol) {
        out.kind = ClosedKind::NotClosed;
    } else {
        out.kind = ClosedKind::GrayZone;
    }
    return out;
}

FramedFormEvaluator::FramedFormEvaluator(const TwoForm& t, const BerwaldFrame& f, std::span<const Expr> scalars)
    : num_scalars_(scalars.size()) {
    std::vector<Expr> roots(t.c.begin(), t.c.end());
    for (const VectorField* x : f.fields()) roots.insert(roots.end(), x->c.begin(), x->c.end());
    roots.insert(roots.end(), scalars.begin(), scalars.end());
    prog_ = CompiledExprs(roots);
}

FramedMatrix FramedFormEvaluator::matrix_at(const Point& p, std::vector<double>& scalars) const {
    const std::vector<double> v = prog_.evaluate(p);
    std::array<double, 6> t{};
    std::copy_n(v.begin(), 6, t.begin());
    std::array<std::array<double, 4>, 4> e{};
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t k = 0; k < 4; ++k) e[a][k] = v[6 + 4 * a + k];
    }
    FramedMatrix m{};
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) m[a][b] = a == b ? 0.0 : pair(t, e[a], e[b]);
    }
    scalars.assign(v.begin() + 22, v.begin() + 22 + static_cast<std::ptrdiff_t>(num_scalars_));
    return m;
}

FramedMatrix FramedFormEvaluator::matrix_at(const Point& p) const {
    std::vector<double> ignored;
    return matrix_at(p, ignored);
}

FramedMatrix frame_matrix(const TwoForm& t, const BerwaldFrame& f, const Point& p) {
    return FramedFormEvaluator(t, f).matrix_at(p);
}

std::array<double, 4> singular_values(const FramedMatrix& m) {
    Eigen::Matrix4d a;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) a(i, j) = m[i][j];
    }
    const Eigen::Vector4d s = Eigen::JacobiSVD<Eigen::Matrix4d>(a).singularValues();
    return {s(0), s(1), s(2), s(3)};
}

int numerical_rank(const FramedMatrix& m, double tol) {
    const auto s = singular_values(m);
    if (s[0] == 0.0) return 0;
    return static_cast<int>(std::count_if(s.begin(), s.end(), [&](double v) { return v >= tol * s[0]; }));
}

Expr alpha_bracket_hv_over_rho(const BerwaldFrame& f, const SprayGeometry& g) {
    const VectorField hv = lie_bracket(f.h, f.v);
    return (g.iso.alpha1 * hv.c[0] + g.iso.alpha2 * hv.c[1]) / g.iso.rho;
}

RankResult rank_test(const TwoForm& t, const BerwaldFrame& f, const SprayGeometry& g, std::span<const Point> samples,
                     double tol) {
    const Expr scalar = alpha_bracket_hv_over_rho(f, g);
    const FramedFormEvaluator ev(t, f, std::span<const Expr>(&scalar, 1));
    RankResult out;
    std::vector<double> sc;
    for (const Point& p : samples) {
        const FramedMatrix m = ev.matrix_at(p, sc);
        RankSample rs;
        rs.point = p;
        rs.singular = singular_values(m);
        rs.matrix_rank = static_cast<int>(
            std::count_if(rs.singular.begin(), rs.singular.end(), [&](double v) { return v >= tol * rs.singular[0]; }));
        rs.alpha_hv_over_rho = sc[0];
        rs.scalar_nonzero = std::fabs(sc[0]) >= tol * rs.singular[0] * rs.singular[0];
        if ((rs.matrix_rank == 4) != rs.scalar_nonzero || (rs.matrix_rank != 4 && rs.matrix_rank != 2)) {
            std::ostringstream os;
            os.precision(17);
            os << "rank(Omega) = " << rs.matrix_rank << " but alpha([H,V])/rho = " << sc[0] << " at " << p;
            throw RankDisagreement(os.str());
        }
        out.samples.push_back(rs);
    }
    if (out.samples.empty()) return out;
    const int first = out.samples.front().matrix_rank;
    for (const RankSample& rs : out.samples) {
        if (rs.matrix_rank != first) out.witnesses.push_back(rs.point);
    }
    if (!out.witnesses.empty()) {
        out.witnesses.insert(out.witnesses.begin(), out.samples.front().point);
        out.kind = RankKind::Mixed;
    } else {
        out.kind = first == 4 ? RankKind::Rank4 : RankKind::Rank2;
    }
    return out;
}

OmegaPattern omega_pattern(const TwoForm& t, const BerwaldFrame& f, const SprayGeometry& g,
                           std::span<const Point> samples) {
    const Expr scalar = alpha_bracket_hv_over_rho(f, g);
    const FramedFormEvaluator ev(t, f, std::span<const Expr>(&scalar, 1));
    OmegaPattern out;
    std::vector<double> sc;
    for (const Point& p : samples) {
        const FramedMatrix m = ev.matrix_at(p, sc);
        double scale = 0.0;
        for (const auto& row : m) {
            for (double v : row) scale = std::max(scale, std::fabs(v));
        }
        if (scale == 0.0) continue;
        out.zeros = std::max({out.zeros, std::fabs(m[0][3]) / scale, std::fabs(m[1][2]) / scale,
                              std::fabs(m[2][3]) / scale});
        // Ω(S, C) = dθ(S, C) + 2 (ω∧θ)(S, C) = 1 - 2 i_C ω = -1.
        out.s_c = std::max(out.s_c, std::fabs(m[1][3] + 1.0) / scale);
        out.h_v = std::max(out.h_v, std::fabs(m[0][2] + sc[0]) / scale);
    }
    return out;
}

NormalizationReport normalization_checks(const OneForm& w, std::span<const Point> samples) {
    const VectorField c = liouville();
    const Expr ic = contract(w, c);
    // (L_C ω)_a = C(ω_a) + ω_b dC^b/dx^a; the second term is ω_a for fiber a.
    std::vector<Expr> roots{ic};
    for (std::size_t a = 0; a < 4; ++a) {
        roots.push_back(apply(c, w.c[a]));
        roots.push_back(w.c[a]);
    }
    const CompiledExprs prog(roots);
    NormalizationReport out;
    std::vector<double> v(roots.size());
    for (const Point& p : samples) {
        prog.evaluate(p, v);
        out.contraction = std::max(out.contraction, std::fabs(v[0] - 1.0));
        double scale = 0.0, worst = 0.0;
        for (std::size_t a = 0; a < 4; ++a) {
            const double cw = v[1 + 2 * a];
            const double wa = a >= 2 ? v[2 + 2 * a] : 0.0;
            scale = std::max(scale, std::fabs(cw) + std::fabs(v[2 + 2 * a]));
            worst = std::max(worst, std::fabs(cw + wa));
        }
        if (scale > 0.0) out.lie = std::max(out.lie, worst / scale);
    }
    return out;
}

}  // namespace spraymet
