#include "spraymet/metrize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "spraymet/error.hpp"
#include "spraymet/parallel.hpp"

namespace spraymet {

namespace {

constexpr double kFdStep = 1e-4;
constexpr double kFdTol = 1e-6;
constexpr std::array<int, 4> kDefaultOrder{0, 1, 2, 3};

Expr var(Var v) { return Expr::variable(v); }

// a / b with 0/0 read as an exact zero.
double ratio(double a, double b) {
    if (a == 0.0) return 0.0;
    return b > 0.0 ? a / b : std::numeric_limits<double>::infinity();
}

double norm2(const std::array<double, 4>& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]); }

std::string describe(const Point& p) {
    std::ostringstream os;
    os.precision(17);
    os << p;
    return os.str();
}

Check make_check(std::string name, double residual, double tol) {
    return Check{std::move(name), residual, tol, std::isfinite(residual) && residual <= tol};
}

}  // namespace

std::string_view to_string(VerdictKind k) noexcept {
    switch (k) {
        case VerdictKind::RegularMetrizable: return "RegularMetrizable";
        case VerdictKind::DegenerateMetrizable: return "DegenerateMetrizable";
        case VerdictKind::NotMetrizable: return "NotMetrizable";
        case VerdictKind::FlatOutOfScope: return "FlatOutOfScope";
        case VerdictKind::Indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

std::optional<VerdictKind> verdict_from_string(std::string_view s) noexcept {
    for (VerdictKind k : {VerdictKind::RegularMetrizable, VerdictKind::DegenerateMetrizable, VerdictKind::NotMetrizable,
                          VerdictKind::FlatOutOfScope, VerdictKind::Indeterminate}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

// Classification ------------------------------------------------------------

Classification classify(const Spray& s, const RunConfig& cfg) {
    Classification out;
    out.diagnostics = validate_spray(s, cfg);
    out.samples = sample_points(s.domain, cfg.samples, cfg.seed);
    out.geo = analyze(s);

    const double phi_s = jacobi_spray_residual(out.geo.jac, out.samples);
    if (!(phi_s <= cfg.tol.identity))
        throw InternalIdentityFailure("Jacobi endomorphism does not annihilate S: residual " + std::to_string(phi_s));
    const IsotropyCheck iso = check_isotropy(out.geo.iso, out.geo.jac, out.samples);
    if (!(iso.max() <= cfg.tol.identity))
        throw IsotropyInconsistency("isotropy data inconsistent: residual " + std::to_string(iso.max()));

    Verdict& v = out.verdict;
    v.flatness = flatness_probe(out.geo.iso, out.geo.jac, out.samples, cfg.tol.flat);
    if (!v.flatness.non_flat) {
        v.kind = VerdictKind::FlatOutOfScope;
        v.reason = "Ricci scalar vanishes numerically";
        if (v.flatness.witness) v.reason += " at " + describe(*v.flatness.witness);
        return out;
    }

    out.frame = build_frame(out.geo);
    check_frame_nonsingular(out.frame, out.samples, 1e-12);
    out.omega = omega_candidate(out.geo);
    out.big_omega = big_omega(out.geo);

    v.closedness = closedness(out.omega, out.samples, cfg.tol.closed);
    v.rank = rank_test(out.big_omega, out.frame, out.geo, out.samples, cfg.tol.rank);

    switch (v.closedness->kind) {
        case ClosedKind::NotClosed:
            v.kind = VerdictKind::NotMetrizable;
            break;
        case ClosedKind::GrayZone:
            v.kind = VerdictKind::Indeterminate;
            v.reason = "closedness residual in the gray zone (tol, 10 tol]";
            break;
        case ClosedKind::Closed:
            switch (v.rank->kind) {
                case RankKind::Rank4: v.kind = VerdictKind::RegularMetrizable; break;
                case RankKind::Rank2: v.kind = VerdictKind::DegenerateMetrizable; break;
                case RankKind::Mixed:
                    v.kind = VerdictKind::Indeterminate;
                    v.reason = "rank of Omega varies across the domain";
                    break;
            }
            break;
    }
    return out;
}

// Reconstruction --------------------------------------------------------------

FinslerCandidate::FinslerCandidate(OneForm omega, SamplingDomain domain, Point base_point, double quadrature_tol)
    : omega_(std::move(omega)), domain_(std::move(domain)), p0_(base_point), tol_(quadrature_tol) {
    prog_ = std::make_shared<const CompiledExprs>(std::span<const Expr>(omega_.c));
    std::vector<Expr> shape;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            shape_[i][j] = Expr::constant(2.0) * omega_.c[2 + i] * omega_.c[2 + j] + partial(omega_.c[2 + i], kFiberVars[j]);
            shape.push_back(shape_[i][j]);
        }
    }
    shape_prog_ = std::make_shared<const CompiledExprs>(shape);
}

std::array<double, 4> FinslerCandidate::metric_shape_at(const Point& p) const {
    std::array<double, 4> h{};
    shape_prog_->evaluate(p, h);
    return h;
}

bool FinslerCandidate::segment_ok(const Point& a, const Point& b) const {
    constexpr int kProbes = 32;
    std::array<double, 4> w{};
    for (int k = 0; k <= kProbes; ++k) {
        const double t = static_cast<double>(k) / kProbes;
        Point r;
        for (std::size_t c = 0; c < 4; ++c) r[c] = a[c] + t * (b[c] - a[c]);
        if (!domain_.admissible(r) || !prog_->try_evaluate(r, w)) return false;
    }
    return true;
}

std::optional<Polyline> FinslerCandidate::axis_path(const Point& from, const Point& to,
                                                    const std::array<int, 4>& order) const {
    Polyline path{{from}};
    Point cur = from;
    for (int k : order) {
        if (cur[k] == to[k]) continue;
        Point next = cur;
        next[k] = to[k];
        if (!segment_ok(cur, next)) return std::nullopt;
        path.vertices.push_back(next);
        cur = next;
    }
    return path;
}

Polyline FinslerCandidate::path_to(const Point& p) const {
    if (!domain_.admissible(p)) throw PathBlocked("target " + describe(p) + " is not admissible");
    std::array<int, 4> order = kDefaultOrder;
    do {
        if (auto path = axis_path(p0_, p, order)) return *path;
    } while (std::next_permutation(order.begin(), order.end()));

    // Detour through a waypoint above the midpoint of the x-projection with
    // y on a circle of intermediate radius.
    auto any_axis_path = [&](const Point& a, const Point& b) -> std::optional<Polyline> {
        std::array<int, 4> o = kDefaultOrder;
        do {
            if (auto path = axis_path(a, b, o)) return path;
        } while (std::next_permutation(o.begin(), o.end()));
        return std::nullopt;
    };
    const double r = 0.5 * (p0_.fiber_norm() + p.fiber_norm());
    for (int k = 0; k < 16; ++k) {
        const double a = (22.5 * k) * std::numbers::pi / 180.0;
        const Point w(0.5 * (p0_.x1() + p.x1()), 0.5 * (p0_.x2() + p.x2()), r * std::cos(a), r * std::sin(a));
        if (!domain_.admissible(w)) continue;
        auto leg1 = any_axis_path(p0_, w);
        if (!leg1) continue;
        auto leg2 = any_axis_path(w, p);
        if (!leg2) continue;
        leg1->vertices.insert(leg1->vertices.end(), leg2->vertices.begin() + 1, leg2->vertices.end());
        return *leg1;
    }
    throw PathBlocked("no admissible path from the base point to " + describe(p));
}

double FinslerCandidate::f_along(const Polyline& path) const { return line_integral(*prog_, path, tol_).value; }

double FinslerCandidate::f(const Point& p) const {
    if (p == p0_) return 0.0;
    return f_along(path_to(p));
}

double FinslerCandidate::operator()(const Point& p) const { return std::exp(f(p)); }

std::optional<Expr> recognize_closed_form(const OneForm& omega, std::span<const Point> samples, const Point& p0) {
    const Expr y1 = var(Var::y1), y2 = var(Var::y2);
    const std::array<Expr, 5> bases{abs(y2), abs(y1), sqrt(pow(y1, Rational(2)) + pow(y2, Rational(2))), y1, y2};
    const std::size_t n = std::min<std::size_t>(samples.size(), 64);
    const CompiledExprs target(std::span<const Expr>(omega.c));
    std::vector<std::array<double, 4>> want(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!target.try_evaluate(samples[i], want[i])) return std::nullopt;
    }
    for (const Expr& b : bases) {
        for (int m1 = -2; m1 <= 2; ++m1) {
            for (int m2 = -2; m2 <= 2; ++m2) {
                Expr f = b;
                if (m1 != 0) f = f * pow(var(Var::x1), Rational(m1));
                if (m2 != 0) f = f * pow(var(Var::x2), Rational(m2));
                std::vector<Expr> dlog;
                for (Var v : kAllVars) dlog.push_back(partial(f, v) / f);
                dlog.push_back(f);
                const CompiledExprs prog(dlog);
                std::array<double, 5> got{};
                bool ok = true;
                for (std::size_t i = 0; i < n && ok; ++i) {
                    if (!prog.try_evaluate(samples[i], got)) {
                        ok = false;
                        break;
                    }
                    double scale = 1.0;
                    for (std::size_t k = 0; k < 4; ++k) scale = std::max(scale, std::fabs(want[i][k]));
                    for (std::size_t k = 0; k < 4; ++k) ok = ok && std::fabs(got[k] - want[i][k]) <= 1e-9 * scale;
                }
                if (!ok || !prog.try_evaluate(p0, got) || got[4] == 0.0) continue;
                return got[4] == 1.0 ? f : f / Expr::constant(got[4]);
            }
        }
    }
    return std::nullopt;
}

FinslerCandidate reconstruct(const Classification& cls, const Point& p0, const RunConfig& cfg) {
    if (!cls.verdict.metrizable())
        throw NotApplicable(std::string("reconstruction needs a metrizable verdict, got ") +
                            std::string(to_string(cls.verdict.kind)));
    FinslerCandidate cand(cls.omega, cls.geo.spray.domain, p0, cfg.tol.quadrature);
    std::array<double, 4> w{};
    if (!cls.geo.spray.domain.admissible(p0) || !CompiledExprs(std::span<const Expr>(cls.omega.c)).try_evaluate(p0, w))
        throw DomainError("base point " + describe(p0) + " is not admissible");
    if (auto cf = recognize_closed_form(cls.omega, cls.samples, p0)) cand.set_closed_form(*cf);
    return cand;
}

PathIndependence path_independence_check(const FinslerCandidate& cand,
                                         std::span<const std::pair<Point, Point>> pairs) {
    PathIndependence out;
    for (const auto& [a, b] : pairs) {
        const auto p1 = cand.axis_path(a, b, kDefaultOrder);
        const auto p2 = cand.axis_path(a, b, {3, 2, 1, 0});
        if (!p1 || !p2) continue;
        ++out.pairs;
        const double d = std::fabs(cand.f_along(*p1) - cand.f_along(*p2));
        if (!out.worst || d > out.max_discrepancy) {
            out.max_discrepancy = d;
            out.worst = std::make_pair(a, b);
        }
    }
    return out;
}

namespace {

MetricTensor metric_from(const FinslerCandidate& cand, const Point& p, double f_value, double rank_tol) {
    const auto h = cand.metric_shape_at(p);
    MetricTensor m;
    m.f_value = f_value;
    const double f2 = f_value * f_value;
    m.g = {{{f2 * h[0], f2 * h[1]}, {f2 * h[2], f2 * h[3]}}};
    const double hmax = std::max({std::fabs(h[0]), std::fabs(h[1]), std::fabs(h[2]), std::fabs(h[3])});
    m.symmetry_residual = ratio(std::fabs(h[1] - h[2]), hmax);
    if (m.symmetry_residual > 1e-8) {
        std::ostringstream os;
        os << "metric tensor not symmetric at " << describe(p) << " (residual " << m.symmetry_residual << ")";
        throw InternalIdentityFailure(os.str());
    }
    // Eigenvalues of the symmetrized tensor.
    const double a = m.g[0][0], d = m.g[1][1], b = 0.5 * (m.g[0][1] + m.g[1][0]);
    const double mean = 0.5 * (a + d);
    const double rad = std::hypot(0.5 * (a - d), b);
    std::array<double, 2> s{std::fabs(mean + rad), std::fabs(mean - rad)};
    if (s[0] < s[1]) std::swap(s[0], s[1]);
    m.singular = s;
    m.rank = s[0] == 0.0 ? 0 : (s[1] >= rank_tol * s[0] ? 2 : 1);
    return m;
}

}  // namespace

MetricTensor metric_tensor(const FinslerCandidate& cand, const Point& p, double rank_tol) {
    return metric_from(cand, p, cand(p), rank_tol);
}

// Verification ------------------------------------------------------------------

bool VerificationReport::all_pass() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* VerificationReport::find(std::string_view name) const noexcept {
    for (const Check& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

namespace {

// ω_{F²}/(2F²) = h_ij dx^i ∧ δy^j, δy^j = dy^j + N^j_k dx^k.
TwoForm hilbert_over_f2(const FinslerCandidate& cand, const SprayGeometry& g) {
    TwoForm t;
    const auto& h = cand.metric_shape();
    for (std::size_t i = 0; i < 2; ++i) {
        OneForm dx;
        dx.c[i] = Expr::constant(1.0);
        for (std::size_t j = 0; j < 2; ++j) {
            OneForm dy;
            dy.c[0] = g.conn.n[j][0];
            dy.c[1] = g.conn.n[j][1];
            dy.c[2 + j] = Expr::constant(1.0);
            t = t + h[i][j] * wedge(dx, dy);
        }
    }
    return t;
}


}  // namespace

VerificationReport verify_finsler(const FinslerCandidate& cand, const Classification& cls, const RunConfig& cfg) {
    const SprayGeometry& g = cls.geo;
    const BerwaldFrame& fr = cls.frame;
    const auto& samples = cls.samples;
    const std::size_t n = samples.size();
    const bool degenerate = cls.verdict.kind == VerdictKind::DegenerateMetrizable;
    const double id_tol = cfg.tol.identity;

    // Symbolic scalars evaluated once per sample.
    std::vector<Expr> roots;
    // 0..3 frame H, 4..7 S, 8..11 V
    for (const VectorField* x : {&fr.h, &fr.s, &fr.v}) roots.insert(roots.end(), x->c.begin(), x->c.end());
    // 12..15 N, 16..19 R, 20 rho
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) roots.push_back(g.conn.n[i][j]);
    }
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) roots.push_back(g.jac.r[i][j]);
    }
    roots.push_back(g.iso.rho);
    // 21..24 flag-curvature residual components
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            const Expr delta = Expr::constant(i == j ? 1.0 : 0.0);
            roots.push_back(g.jac.r[i][j] - g.iso.rho * (delta - cand.omega().c[2 + j] * var(kFiberVars[i])));
        }
    }
    // 25..30 Ω, 31..36 Hilbert part
    const TwoForm hil = hilbert_over_f2(cand, g);
    roots.insert(roots.end(), cls.big_omega.c.begin(), cls.big_omega.c.end());
    roots.insert(roots.end(), hil.c.begin(), hil.c.end());
    const std::size_t kBase = roots.size();

    // Degenerate identities: α(X) on the horizontal part and ω(vX) on the
    // vertical part of each field.
    std::vector<std::pair<std::string, VectorField>> deg_fields;
    std::vector<bool> deg_alpha, deg_dv;
    if (degenerate) {
        const VectorField sh = lie_bracket(fr.s, fr.h), sv = lie_bracket(fr.s, fr.v), hv = lie_bracket(fr.h, fr.v);
        deg_fields = {{"nabla_H", nabla(fr.h, g)}, {"nabla_V", nabla(fr.v, g)}, {"SH", sh}, {"SV", sv}, {"HV", hv}};
        deg_alpha = {true, false, true, true, true};
        deg_dv = {false, true, true, true, true};
        for (const auto& [name, x] : deg_fields) roots.insert(roots.end(), x.c.begin(), x.c.end());
        roots.push_back(g.iso.alpha1);
        roots.push_back(g.iso.alpha2);
        roots.push_back(cand.omega().c[2]);
        roots.push_back(cand.omega().c[3]);
    }
    const CompiledExprs prog(roots);

    struct Row {
        double el = 0, hom = 0, hf = 0, vf = 0, sf = 0, sfc = 0, hilbert = 0, kappa = 0;
        int rank = 0;
        std::vector<double> deg;
    };
    std::vector<Row> rows(n);
    parallel_for(n, cfg.threads, [&](std::size_t idx) {
        const Point& p = samples[idx];
        Row& row = rows[idx];
        const std::vector<double> v = prog.evaluate(p);

        const double F = cand(p);
        std::array<double, 4> dF{}, dF2{};
        for (std::size_t a = 0; a < 4; ++a) {
            Point plus = p, minus = p;
            plus[a] += kFdStep;
            minus[a] -= kFdStep;
            const double fp = cand(plus), fm = cand(minus);
            dF[a] = (fp - fm) / (2 * kFdStep);
            dF2[a] = (fp * fp - fm * fm) / (2 * kFdStep);
        }
        const double* N = &v[12];
        for (std::size_t i = 0; i < 2; ++i) {
            const double t0 = dF2[i], t1 = N[0 * 2 + i] * dF2[2], t2 = N[1 * 2 + i] * dF2[3];
            const double scale = std::fabs(dF2[i]) + std::hypot(dF2[2], dF2[3]) * (std::fabs(N[i]) + std::fabs(N[2 + i]));
            row.el = std::max(row.el, ratio(std::fabs(t0 - t1 - t2), scale));
        }
        row.hom = std::fabs(p.y1() * dF[2] + p.y2() * dF[3] - F) / F;
        const double grad = norm2(dF2);
        auto along = [&](std::size_t off) {
            const std::array<double, 4> x{v[off], v[off + 1], v[off + 2], v[off + 3]};
            const double d = x[0] * dF2[0] + x[1] * dF2[1] + x[2] * dF2[2] + x[3] * dF2[3];
            return ratio(std::fabs(d), norm2(x) * grad);
        };
        row.hf = along(0);
        row.sf = along(4);
        row.vf = along(8);

        const double rmax = std::max({std::fabs(v[16]), std::fabs(v[17]), std::fabs(v[18]), std::fabs(v[19])});
        double sfc = 0.0;
        for (std::size_t k = 0; k < 4; ++k) sfc = std::max(sfc, std::fabs(v[21 + k]));
        row.sfc = ratio(sfc, rmax + std::fabs(v[20]));

        double num = 0.0, om = 0.0, hm = 0.0;
        for (std::size_t k = 0; k < 6; ++k) {
            num = std::max(num, std::fabs(v[25 + k] + v[31 + k]));
            om = std::max(om, std::fabs(v[25 + k]));
            hm = std::max(hm, std::fabs(v[31 + k]));
        }
        row.hilbert = ratio(num, om + hm);
        row.kappa = v[20] / (F * F);
        row.rank = metric_from(cand, p, F, cfg.tol.rank).rank;

        if (degenerate) {
            const std::size_t tail = kBase + 4 * deg_fields.size();
            const double a1 = v[tail], a2 = v[tail + 1], w1 = v[tail + 2], w2 = v[tail + 3];
            for (std::size_t f = 0; f < deg_fields.size(); ++f) {
                const double* x = &v[kBase + 4 * f];
                if (deg_alpha[f]) {
                    const double val = a1 * x[0] + a2 * x[1];
                    row.deg.push_back(ratio(std::fabs(val), std::hypot(a1, a2) * std::hypot(x[0], x[1])));
                } else {
                    row.deg.push_back(0.0);
                }
                if (deg_dv[f]) {
                    const double vx1 = x[2] + N[0] * x[0] + N[1] * x[1];
                    const double vx2 = x[3] + N[2] * x[0] + N[3] * x[1];
                    row.deg.push_back(ratio(std::fabs(w1 * vx1 + w2 * vx2), std::hypot(w1, w2) * std::hypot(vx1, vx2)));
                } else {
                    row.deg.push_back(0.0);
                }
            }
        }
    });

    VerificationReport rep;
    auto worst = [&](auto field) {
        double m = 0.0;
        for (const Row& r : rows) m = std::max(m, field(r));
        return m;
    };
    rep.checks.push_back(make_check("euler_lagrange", worst([](const Row& r) { return r.el; }), kFdTol));
    rep.checks.push_back(make_check("homogeneity", worst([](const Row& r) { return r.hom; }), kFdTol));
    rep.checks.push_back(make_check("h_f2", worst([](const Row& r) { return r.hf; }), kFdTol));
    rep.checks.push_back(make_check("v_f2", worst([](const Row& r) { return r.vf; }), kFdTol));
    rep.checks.push_back(make_check("s_f2", worst([](const Row& r) { return r.sf; }), kFdTol));
    rep.checks.push_back(make_check("flag_curvature", worst([](const Row& r) { return r.sfc; }), id_tol));
    rep.checks.push_back(make_check("hilbert_relation", worst([](const Row& r) { return r.hilbert; }), id_tol));

    const int want_rank = degenerate ? 1 : 2;
    std::size_t wrong = 0;
    for (const Row& r : rows) {
        rep.metric_rank.push_back(r.rank);
        rep.kappa.push_back(r.kappa);
        wrong += r.rank != want_rank;
    }
    rep.checks.push_back(make_check("metric_rank", n ? static_cast<double>(wrong) / static_cast<double>(n) : 0.0, 0.0));

    double frame_res = 0.0;
    for (const auto& r : verify_spray_commutations(fr, g, true, samples, id_tol)) frame_res = std::max(frame_res, r.residual);
    rep.checks.push_back(make_check("frame_identities", frame_res, id_tol));

    if (degenerate) {
        for (std::size_t f = 0; f < deg_fields.size(); ++f) {
            for (int kind = 0; kind < 2; ++kind) {
                if (!(kind == 0 ? deg_alpha[f] : deg_dv[f])) continue;
                double m = 0.0;
                for (const Row& r : rows) m = std::max(m, r.deg[2 * f + kind]);
                const std::string name = std::string(kind == 0 ? "degenerate_alpha_" : "degenerate_dvF_") + deg_fields[f].first;
                rep.checks.push_back(make_check(name, m, id_tol));
            }
        }
    }
    return rep;
}

// Regular frame -------------------------------------------------------------------

NormalizedBerwaldFrame finsler_normalize(const Classification& cls, const FinslerCandidate& cand) {
    if (cls.verdict.kind != VerdictKind::RegularMetrizable)
        throw NotApplicable("Finsler normalization needs a regular metrizable spray");
    const auto& h = cand.metric_shape();
    const auto& H = cls.frame.h;
    Expr q;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) q = q + h[i][j] * H.c[i] * H.c[j];
    }
    NormalizedBerwaldFrame nf;
    nf.factor = Expr::constant(1.0) / sqrt(abs(q));
    nf.frame = cls.frame;
    nf.frame.h = nf.factor * cls.frame.h;
    nf.frame.v = nf.factor * cls.frame.v;
    return nf;
}

RegularFrameReport regular_frame_checks(const NormalizedBerwaldFrame& nf, const Classification& cls,
                                        const FinslerCandidate& cand, std::span<const Point> samples,
                                        unsigned threads) {
    const BerwaldFrame& f = nf.frame;
    const SprayGeometry& g = cls.geo;
    RegularFrameReport rep;

    auto terms = [](const std::array<VectorField, 4>& t) { return std::vector<VectorField>(t.begin(), t.end()); };
    rep.nabla_h = identity_residual({"nabla H", terms(nabla_terms(f.h, g))}, f, samples);
    rep.nabla_v = identity_residual({"nabla V", terms(nabla_terms(f.v, g))}, f, samples);
    rep.bracket_sh = identity_residual({"[S,H] = rho V", {along(f.s, f.h), -along(f.h, f.s), -(g.iso.rho * f.v)}}, f, samples);
    rep.bracket_sv = identity_residual({"[S,V] = -H", {along(f.s, f.v), -along(f.v, f.s), f.h}}, f, samples);

    const auto& h = cand.metric_shape();
    Expr gh, gs;
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            gh = gh + h[i][j] * f.h.c[i] * f.h.c[j];
            gs = gs + h[i][j] * var(kFiberVars[i]) * var(kFiberVars[j]);
        }
    }
    const CompiledExprs lengths{gh, gs};

    const MainScalarProbe probe(nf, g);
    rep.per_sample.resize(samples.size());
    std::vector<double> len(samples.size());
    parallel_for(samples.size(), threads, [&](std::size_t i) {
        rep.per_sample[i] = probe.at(samples[i]);
        const auto l = lengths.evaluate(samples[i]);
        len[i] = std::fabs(l[0] / l[1] - 1.0);
    });
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const MainScalar& m = rep.per_sample[i];
        rep.length_ratio = std::max(rep.length_ratio, len[i]);
        rep.c_s = std::max(rep.c_s, std::fabs(m.c_s - 1.0));
        rep.main_scalar = std::max(rep.main_scalar, std::fabs(m.c_h));
        rep.main_scalar_pde = std::max(rep.main_scalar_pde, m.pde_residual);
    }
    return rep;
}

}  // namespace spraymet
