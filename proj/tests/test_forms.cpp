#include <cmath>

#include <gtest/gtest.h>

#include "spraymet/error.hpp"
#include "spraymet/forms.hpp"
#include "spraymet/sampling.hpp"
#include "support/fixtures.hpp"

using namespace spraymet;

namespace {

std::array<double, 4> at(const OneForm& w, const Point& p) {
    const CompiledExprs prog(std::span<const Expr>(w.c));
    std::array<double, 4> v{};
    prog.evaluate(p, v);
    return v;
}

std::array<double, 6> at(const TwoForm& t, const Point& p) {
    const CompiledExprs prog(std::span<const Expr>(t.c));
    std::array<double, 6> v{};
    prog.evaluate(p, v);
    return v;
}

}  // namespace

TEST(Omega, PoincareIsLogDifferentialOfRiemannianNorm) {
    const OneForm w = omega_candidate(analyze(fixture::poincare()));
    const auto v = at(w, Point(0.0, 1.0, 1.0, 1.0));
    EXPECT_NEAR(v[0], 0.0, 1e-14);
    EXPECT_NEAR(v[1], -1.0, 1e-14);
    EXPECT_NEAR(v[2], 0.5, 1e-14);
    EXPECT_NEAR(v[3], 0.5, 1e-14);

    // d log(|y|/x2) everywhere on the samples.
    for (const Point& p : sample_points(fixture::poincare().domain, 50, 4)) {
        const double r2 = p.y1() * p.y1() + p.y2() * p.y2();
        const auto u = at(w, p);
        EXPECT_NEAR(u[0], 0.0, 1e-13);
        EXPECT_NEAR(u[1], -1.0 / p.x2(), 1e-13);
        EXPECT_NEAR(u[2], p.y1() / r2, 1e-13);
        EXPECT_NEAR(u[3], p.y2() / r2, 1e-13);
    }
}

TEST(Omega, DegenerateIsLogDifferentialOfY2) {
    const OneForm w = omega_candidate(analyze(fixture::degenerate()));
    for (const Point& p : sample_points(fixture::degenerate().domain, 50, 4)) {
        const auto u = at(w, p);
        EXPECT_NEAR(u[0], 0.0, 1e-13);
        EXPECT_NEAR(u[1], 0.0, 1e-13);
        EXPECT_NEAR(u[2], 0.0, 1e-13);
        EXPECT_NEAR(u[3], 1.0 / p.y2(), 1e-13);
    }
}

TEST(BigOmega, PoincareComponents) {
    // Ω = -ω_{F²}/(2F²) for F = |y|/x2: the dx1∧dx2 entry is 2 y1/(x2 |y|²).
    const TwoForm t = big_omega(analyze(fixture::poincare()));
    const Point p(0.3, 1.5, 0.4, -1.1);
    const double r2 = p.y1() * p.y1() + p.y2() * p.y2();
    const auto v = at(t, p);
    EXPECT_NEAR(v[0], 2.0 * p.y1() / (p.x2() * r2), 1e-12);
    // dy1∧dy2 vanishes since θ is semi-basic and ω∧θ has no dy∧dy part.
    EXPECT_NEAR(v[5], 0.0, 1e-14);
}

TEST(ExteriorDerivative, SquaresToZero) {
    fixture::RandomExpr gen(5);
    for (int i = 0; i < 20; ++i) {
        const TwoForm dd = exterior_derivative(differential(gen(3)));
        for (int k = 0; k < 5; ++k) {
            const Point p = gen.point();
            std::array<double, 6> v{};
            if (!CompiledExprs(std::span<const Expr>(dd.c)).try_evaluate(p, v)) continue;
            for (double x : v) EXPECT_NEAR(x, 0.0, 1e-9);
        }
    }
}

TEST(Wedge, PairAndAntisymmetry) {
    const OneForm a = differential(Expr::variable(Var::x1));
    const OneForm b = differential(Expr::variable(Var::y2));
    const auto t = at(wedge(a, b), Point(0, 1, 1, 1));
    EXPECT_EQ(t[2], 1.0);
    const std::array<double, 4> e0{1, 0, 0, 0}, e3{0, 0, 0, 1};
    EXPECT_EQ(pair(t, e0, e3), 1.0);
    EXPECT_EQ(pair(t, e3, e0), -1.0);
    const auto u = at(wedge(b, a), Point(0, 1, 1, 1));
    EXPECT_EQ(u[2], -1.0);
}

TEST(Closedness, Fixtures) {
    const RunConfig cfg;
    {
        const Spray s = fixture::poincare();
        const auto r = closedness(omega_candidate(analyze(s)), sample_points(s.domain, 200, 42), 1e-9);
        EXPECT_EQ(r.kind, ClosedKind::Closed);
        EXPECT_LT(r.max_residual, 1e-9);
        EXPECT_EQ(r.per_sample.size(), 200u);
    }
    {
        const Spray s = fixture::nonmetrizable();
        const auto r = closedness(omega_candidate(analyze(s)), sample_points(s.domain, 200, 42), 1e-9);
        EXPECT_EQ(r.kind, ClosedKind::NotClosed);
        EXPECT_GE(r.fraction_above(1e-3), 0.9);
        ASSERT_TRUE(r.witness.has_value());
    }
    {
        const Spray s = fixture::perturbed_poincare();
        const auto r = closedness(omega_candidate(analyze(s)), sample_points(s.domain, 200, 42), 1e-9);
        EXPECT_EQ(r.kind, ClosedKind::NotClosed);
    }
}

TEST(Closedness, GrayZoneBand) {
    // ω = dx1 + ε x1 dx2 has dω = ε dx1∧dx2 and derivative scale ε.
    OneForm w;
    w.c[0] = Expr::constant(1.0);
    const std::vector<Point> pts{Point(0.1, 1, 1, 0), Point(0.2, 1, 0, 1)};
    auto run = [&](double eps) {
        w.c[1] = eps * Expr::variable(Var::x1);
        return closedness(w, pts, 1e-9).kind;
    };
    EXPECT_EQ(run(5e-10), ClosedKind::Closed);
    EXPECT_EQ(run(5e-9), ClosedKind::GrayZone);
    EXPECT_EQ(run(5e-7), ClosedKind::NotClosed);
    w.c[1] = Expr{};
    EXPECT_TRUE(closedness(w, pts, 1e-9).symbolically_zero);
}

TEST(FrameMatrix, PatternAndRank) {
    for (const Spray& s : {fixture::poincare(), fixture::degenerate(), fixture::nonmetrizable()}) {
        const SprayGeometry g = analyze(s);
        const BerwaldFrame f = build_frame(g);
        const auto pts = sample_points(s.domain, 100, 42);
        const OmegaPattern pat = omega_pattern(big_omega(g), f, g, pts);
        EXPECT_LT(pat.zeros, 1e-8);
        EXPECT_LT(pat.s_c, 1e-8);
        EXPECT_LT(pat.h_v, 1e-8);
    }
    const SprayGeometry g = analyze(fixture::poincare());
    const FramedMatrix m = frame_matrix(big_omega(g), build_frame(g), Point(0, 1, 1, 1));
    for (int a = 0; a < 4; ++a) {
        EXPECT_EQ(m[a][a], 0.0);
        for (int b = 0; b < 4; ++b) EXPECT_NEAR(m[a][b], -m[b][a], 1e-14);
    }
    EXPECT_NEAR(m[1][3], -1.0, 1e-12);
}

TEST(Rank, RegularAndDegenerate) {
    const RunConfig cfg;
    auto rank_of = [&](const Spray& s) {
        const SprayGeometry g = analyze(s);
        const BerwaldFrame f = build_frame(g);
        return rank_test(big_omega(g), f, g, sample_points(s.domain, 100, 42), cfg.tol.rank);
    };
    const RankResult p = rank_of(fixture::poincare());
    EXPECT_EQ(p.kind, RankKind::Rank4);
    EXPECT_TRUE(p.witnesses.empty());
    for (const auto& r : p.samples) {
        EXPECT_EQ(r.matrix_rank, 4);
        EXPECT_TRUE(r.scalar_nonzero);
    }
    const RankResult d = rank_of(fixture::degenerate());
    EXPECT_EQ(d.kind, RankKind::Rank2);
    for (const auto& r : d.samples) EXPECT_FALSE(r.scalar_nonzero);
}

TEST(Rank, SingularValuesOfBlockMatrix) {
    FramedMatrix m{};
    m[0][1] = 3.0;
    m[1][0] = -3.0;
    m[2][3] = 1e-12;
    m[3][2] = -1e-12;
    const auto s = singular_values(m);
    EXPECT_NEAR(s[0], 3.0, 1e-12);
    EXPECT_NEAR(s[1], 3.0, 1e-12);
    EXPECT_EQ(numerical_rank(m, 1e-7), 2);
    EXPECT_EQ(numerical_rank(m, 1e-14), 4);
}

TEST(Normalization, ContractionAndLieDerivative) {
    const Spray s = fixture::poincare();
    const auto pts = sample_points(s.domain, 50, 42);
    const OneForm w = omega_candidate(analyze(s));
    const auto ok = normalization_checks(w, pts);
    EXPECT_LT(ok.contraction, 1e-12);
    EXPECT_LT(ok.lie, 1e-12);
    OneForm twice;
    for (std::size_t a = 0; a < 4; ++a) twice.c[a] = 2.0 * w.c[a];
    EXPECT_NEAR(normalization_checks(twice, pts).contraction, 1.0, 1e-12);
}
