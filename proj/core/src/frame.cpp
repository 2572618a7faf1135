#include "spraymet/frame.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "spraymet/error.hpp"

namespace spraymet {

namespace {

Expr var(Var v) { return Expr::variable(v); }

double inf_norm(const std::array<double, 4>& v) {
    return std::max({std::fabs(v[0]), std::fabs(v[1]), std::fabs(v[2]), std::fabs(v[3])});
}

Eigen::Matrix4d to_matrix(const std::array<std::array<double, 4>, 4>& frame) {
    Eigen::Matrix4d m;
    for (int col = 0; col < 4; ++col) {
        for (int row = 0; row < 4; ++row) m(row, col) = frame[col][row];
    }
    return m;
}

}  // namespace

VectorField operator+(const VectorField& a, const VectorField& b) {
    VectorField r;
    for (std::size_t k = 0; k < 4; ++k) r.c[k] = a.c[k] + b.c[k];
    return r;
}

VectorField operator-(const VectorField& a, const VectorField& b) {
    VectorField r;
    for (std::size_t k = 0; k < 4; ++k) r.c[k] = a.c[k] - b.c[k];
    return r;
}

VectorField operator-(const VectorField& a) {
    VectorField r;
    for (std::size_t k = 0; k < 4; ++k) r.c[k] = -a.c[k];
    return r;
}

VectorField operator*(const Expr& f, const VectorField& x) {
    VectorField r;
    for (std::size_t k = 0; k < 4; ++k) r.c[k] = f * x.c[k];
    return r;
}

Expr apply(const VectorField& x, const Expr& f) { return directional(f, x.c); }

VectorField along(const VectorField& x, const VectorField& y) {
    VectorField r;
    for (std::size_t k = 0; k < 4; ++k) r.c[k] = apply(x, y.c[k]);
    return r;
}

VectorField lie_bracket(const VectorField& x, const VectorField& y) { return along(x, y) - along(y, x); }

VectorField vertical_endomorphism(const VectorField& x) { return VectorField{{Expr{}, Expr{}, x.c[0], x.c[1]}}; }

VectorField spray_field(const Spray& s) {
    return VectorField{{var(Var::y1), var(Var::y2), Expr::constant(-2.0) * s.g1, Expr::constant(-2.0) * s.g2}};
}

VectorField liouville() { return VectorField{{Expr{}, Expr{}, var(Var::y1), var(Var::y2)}}; }

std::pair<VectorField, VectorField> horizontal_basis(const Connection& c) {
    // δ/δx^i has y^j-component -N^j_i.
    VectorField d1{{Expr::constant(1.0), Expr{}, -c.n[0][0], -c.n[1][0]}};
    VectorField d2{{Expr{}, Expr::constant(1.0), -c.n[0][1], -c.n[1][1]}};
    return {d1, d2};
}

VectorField horizontal_part(const VectorField& x, const Connection& c) {
    VectorField r;
    r.c[0] = x.c[0];
    r.c[1] = x.c[1];
    for (std::size_t j = 0; j < 2; ++j) r.c[2 + j] = -(c.n[j][0] * x.c[0] + c.n[j][1] * x.c[1]);
    return r;
}

VectorField vertical_part(const VectorField& x, const Connection& c) {
    VectorField r;
    for (std::size_t j = 0; j < 2; ++j) r.c[2 + j] = x.c[2 + j] + c.n[j][0] * x.c[0] + c.n[j][1] * x.c[1];
    return r;
}

std::array<VectorField, 4> nabla_terms(const VectorField& x, const SprayGeometry& g) {
    const VectorField s = spray_field(g.spray);
    const VectorField hx = horizontal_part(x, g.conn);
    const VectorField vx = vertical_part(x, g.conn);
    return {horizontal_part(along(s, hx), g.conn), -horizontal_part(along(hx, s), g.conn),
            vertical_part(along(s, vx), g.conn), -vertical_part(along(vx, s), g.conn)};
}

VectorField nabla(const VectorField& x, const SprayGeometry& g) {
    const auto t = nabla_terms(x, g);
    return t[0] + t[1] + t[2] + t[3];
}

BerwaldFrame build_frame(const SprayGeometry& g) {
    const auto [d1, d2] = horizontal_basis(g.conn);
    BerwaldFrame f;
    f.h = (-g.iso.alpha2) * d1 + g.iso.alpha1 * d2;
    f.s = spray_field(g.spray);
    f.v = vertical_endomorphism(f.h);
    f.c = liouville();
    return f;
}

FrameEvaluator::FrameEvaluator(const BerwaldFrame& f, std::span<const VectorField> extra) : num_extra_(extra.size()) {
    std::vector<Expr> roots;
    roots.reserve(16 + 4 * extra.size());
    for (const VectorField* x : f.fields()) roots.insert(roots.end(), x->c.begin(), x->c.end());
    for (const VectorField& x : extra) roots.insert(roots.end(), x.c.begin(), x.c.end());
    prog_ = CompiledExprs(roots);
}

void FrameEvaluator::evaluate(const Point& p, std::array<std::array<double, 4>, 4>& frame,
                              std::vector<std::array<double, 4>>& extra) const {
    const std::vector<double> v = prog_.evaluate(p);
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t k = 0; k < 4; ++k) frame[a][k] = v[4 * a + k];
    }
    extra.resize(num_extra_);
    for (std::size_t e = 0; e < num_extra_; ++e) {
        for (std::size_t k = 0; k < 4; ++k) extra[e][k] = v[16 + 4 * e + k];
    }
}

std::array<std::array<double, 4>, 4> FrameEvaluator::frame_at(const Point& p) const {
    std::array<std::array<double, 4>, 4> frame{};
    std::vector<std::array<double, 4>> extra;
    evaluate(p, frame, extra);
    return frame;
}

std::vector<std::array<double, 4>> FrameEvaluator::extra_at(const Point& p) const {
    std::array<std::array<double, 4>, 4> frame{};
    std::vector<std::array<double, 4>> extra;
    evaluate(p, frame, extra);
    return extra;
}

std::array<double, 4> decompose(const std::array<double, 4>& x, const std::array<std::array<double, 4>, 4>& frame) {
    const Eigen::Matrix4d m = to_matrix(frame);
    const Eigen::Vector4d rhs(x[0], x[1], x[2], x[3]);
    Eigen::JacobiSVD<Eigen::Matrix4d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(3) > 1e-13 * sv(0))) throw SingularFrame("frame is numerically singular");
    const Eigen::Vector4d sol = svd.solve(rhs);
    const double res = (m * sol - rhs).lpNorm<Eigen::Infinity>();
    const double scale = m.lpNorm<Eigen::Infinity>() * sol.lpNorm<Eigen::Infinity>() + rhs.lpNorm<Eigen::Infinity>();
    if (res > 1e-10 * scale) throw SingularFrame("frame decomposition residual " + std::to_string(res / scale));
    return {sol(0), sol(1), sol(2), sol(3)};
}

std::array<double, 4> decompose(const VectorField& x, const BerwaldFrame& f, const Point& p) {
    const FrameEvaluator ev(f, std::span<const VectorField>(&x, 1));
    std::array<std::array<double, 4>, 4> frame{};
    std::vector<std::array<double, 4>> extra;
    ev.evaluate(p, frame, extra);
    return decompose(extra[0], frame);
}

double check_frame_nonsingular(const BerwaldFrame& f, std::span<const Point> samples, double tol) {
    const FrameEvaluator ev(f);
    double worst = std::numeric_limits<double>::infinity();
    for (const Point& p : samples) {
        const auto frame = ev.frame_at(p);
        const Eigen::Matrix4d m = to_matrix(frame);
        double prod = 1.0;
        for (int col = 0; col < 4; ++col) prod *= m.col(col).norm();
        const double rel = prod > 0.0 ? std::fabs(m.determinant()) / prod : 0.0;
        worst = std::min(worst, rel);
        if (!(rel >= tol)) {
            std::ostringstream os;
            os.precision(17);
            os << "Berwald frame singular at " << p << " (relative determinant " << rel << ")";
            throw SingularFrame(os.str());
        }
    }
    return samples.empty() ? 0.0 : worst;
}

double identity_residual(const FieldIdentity& id, const BerwaldFrame& f, std::span<const Point> samples) {
    const FrameEvaluator ev(f, id.terms);
    double worst = 0.0;
    std::array<std::array<double, 4>, 4> frame{};
    std::vector<std::array<double, 4>> terms;
    for (const Point& p : samples) {
        ev.evaluate(p, frame, terms);
        std::array<double, 4> sum{};
        double scale = 0.0;
        for (const auto& t : terms) {
            for (std::size_t k = 0; k < 4; ++k) sum[k] += t[k];
            scale += inf_norm(decompose(t, frame));
        }
        const double num = inf_norm(decompose(sum, frame));
        if (num == 0.0) continue;
        worst = std::max(worst, scale > 0.0 ? num / scale : std::numeric_limits<double>::infinity());
    }
    return worst;
}

std::vector<FieldIdentity> spray_commutation_identities(const BerwaldFrame& f, const SprayGeometry& g) {
    std::vector<FieldIdentity> ids;
    const Expr& rho = g.iso.rho;

    ids.push_back({"[C,V] = 0", {along(f.c, f.v), -along(f.v, f.c)}});

    FieldIdentity sh{"[S,H] = nabla H + rho V", {along(f.s, f.h), -along(f.h, f.s), -(rho * f.v)}};
    for (const auto& t : nabla_terms(f.h, g)) sh.terms.push_back(-t);
    ids.push_back(std::move(sh));

    FieldIdentity sv{"[S,V] = -H + nabla V", {along(f.s, f.v), -along(f.v, f.s), f.h}};
    for (const auto& t : nabla_terms(f.v, g)) sv.terms.push_back(-t);
    ids.push_back(std::move(sv));

    ids.push_back({"[C,H] = H", {along(f.c, f.h), -along(f.h, f.c), -f.h}});
    ids.push_back({"[C,S] = S", {along(f.c, f.s), -along(f.s, f.c), -f.s}});
    return ids;
}

std::vector<IdentityResult> verify_spray_commutations(const BerwaldFrame& f, const SprayGeometry& g, bool non_flat,
                                                      std::span<const Point> samples, double tol) {
    if (!non_flat) throw NotApplicable("commutation formulae require a non-flat spray");
    std::vector<IdentityResult> out;
    for (const FieldIdentity& id : spray_commutation_identities(f, g)) {
        const double r = identity_residual(id, f, samples);
        out.push_back({id.name, r, r <= tol});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Main scalar

namespace {

std::vector<VectorField> main_scalar_fields(const NormalizedBerwaldFrame& f) {
    return {lie_bracket(f.frame.h, f.frame.v)};
}

}  // namespace

MainScalarProbe::MainScalarProbe(const NormalizedBerwaldFrame& f, const SprayGeometry& g, double step)
    : eval_(f.frame, main_scalar_fields(f)), scalars_{g.iso.rho, apply(f.frame.v, g.iso.rho)}, step_(step) {}

double MainScalarProbe::scalar_at(const Point& p) const {
    std::array<std::array<double, 4>, 4> frame{};
    std::vector<std::array<double, 4>> extra;
    eval_.evaluate(p, frame, extra);
    return decompose(extra[0], frame)[0];
}

MainScalar MainScalarProbe::at(const Point& p) const {
    std::array<std::array<double, 4>, 4> frame{};
    std::vector<std::array<double, 4>> extra;
    eval_.evaluate(p, frame, extra);
    const auto coeff = decompose(extra[0], frame);
    MainScalar out{coeff[0], coeff[1], coeff[2], coeff[3], 0.0};

    const double h = step_;
    auto shifted = [&](const Point& q, double t) {
        const auto s = eval_.frame_at(q)[1];
        Point r = q;
        for (std::size_t k = 0; k < 4; ++k) r[k] += t * s[k];
        return r;
    };
    // S(I) at q by a central difference along the spray direction at q.
    auto s_of_i = [&](const Point& q) {
        return (scalar_at(shifted(q, h)) - scalar_at(shifted(q, -h))) / (2.0 * h);
    };
    const double s2i = (s_of_i(shifted(p, h)) - s_of_i(shifted(p, -h))) / (2.0 * h);
    const auto sc = scalars_.evaluate(p);
    out.pde_residual = std::fabs(s2i + out.c_h * sc[0] + sc[1]);
    return out;
}

MainScalar main_scalar(const NormalizedBerwaldFrame& f, const SprayGeometry& g, const Point& p) {
    return MainScalarProbe(f, g).at(p);
}

}  // namespace spraymet
