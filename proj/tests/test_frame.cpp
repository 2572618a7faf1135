#include <cmath>

#include <gtest/gtest.h>

#include "spraymet/error.hpp"
#include "spraymet/frame.hpp"
#include "spraymet/sampling.hpp"
#include "support/fixtures.hpp"

using namespace spraymet;

namespace {

const Point kP(0.0, 1.0, 1.0, 1.0);

std::array<double, 4> at(const VectorField& x, const Point& p) {
    const CompiledExprs prog(std::span<const Expr>(x.c));
    std::array<double, 4> v{};
    prog.evaluate(p, v);
    return v;
}

double max_abs(const std::array<double, 4>& v) {
    return std::max({std::fabs(v[0]), std::fabs(v[1]), std::fabs(v[2]), std::fabs(v[3])});
}

VectorField random_polynomial_field(fixture::RandomExpr& gen) {
    VectorField x;
    for (auto& c : x.c) c = gen(2);
    return x;
}

}  // namespace

TEST(SprayField, Poincare) {
    const auto s = at(spray_field(fixture::poincare()), kP);
    EXPECT_DOUBLE_EQ(s[0], 1.0);
    EXPECT_DOUBLE_EQ(s[1], 1.0);
    EXPECT_DOUBLE_EQ(s[2], 2.0);
    EXPECT_DOUBLE_EQ(s[3], 0.0);
    const auto f = at(spray_field(fixture::flat()), Point(0, 1, 0.3, -0.7));
    EXPECT_EQ(f, (std::array<double, 4>{0.3, -0.7, 0.0, 0.0}));
}

TEST(Liouville, Basics) {
    const VectorField c = liouville();
    EXPECT_TRUE(c.c[0].is_zero() && c.c[1].is_zero());
    const VectorField js = vertical_endomorphism(spray_field(fixture::poincare()));
    EXPECT_EQ(at(js, Point(0, 1, 0.3, 0.2)), at(c, Point(0, 1, 0.3, 0.2)));
    EXPECT_EQ(max_abs(at(lie_bracket(c, c), kP)), 0.0);
}

TEST(HorizontalBasis, Poincare) {
    const auto [d1, d2] = horizontal_basis(connection(fixture::poincare()));
    const Point p(0.1, 2.0, 0.5, -1.0);
    const auto v = at(d1, p);
    EXPECT_DOUBLE_EQ(v[0], 1.0);
    EXPECT_DOUBLE_EQ(v[1], 0.0);
    EXPECT_DOUBLE_EQ(v[2], p.y2() / p.x2());
    EXPECT_DOUBLE_EQ(v[3], -p.y1() / p.x2());
    const auto [z1, z2] = horizontal_basis(Connection{});
    EXPECT_EQ(at(z1, p), (std::array<double, 4>{1, 0, 0, 0}));
    EXPECT_EQ(at(z2, p), (std::array<double, 4>{0, 1, 0, 0}));
}

TEST(Projectors, HorizontalAndVerticalParts) {
    const SprayGeometry g = analyze(fixture::nonmetrizable());
    const auto [d1, d2] = horizontal_basis(g.conn);
    const VectorField vy{{Expr{}, Expr{}, parse_expr("x1*y2"), parse_expr("y1")}};
    for (const Point& p : sample_points(g.spray.domain, 20, 3)) {
        for (const VectorField* x : {&d1, &d2}) {
            const auto a = at(*x, p), b = at(horizontal_part(*x, g.conn), p);
            for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
            EXPECT_LT(max_abs(at(vertical_part(*x, g.conn), p)), 1e-12);
        }
        EXPECT_LT(max_abs(at(horizontal_part(vy, g.conn), p)), 1e-15);
        const auto s = at(spray_field(g.spray), p);
        const auto h = at(horizontal_part(spray_field(g.spray), g.conn), p);
        for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(s[k], h[k], 1e-12 * (1 + std::fabs(s[k])));
    }
}

TEST(Frame, ConstructionAndDegeneratePattern) {
    const SprayGeometry g = analyze(fixture::poincare());
    const BerwaldFrame f = build_frame(g);
    const Point p(0.0, 2.0, 0.3, 0.7);
    // H = (y2 δ1 - y1 δ2)/x2², a 0+-homogeneous multiple of -y2 δ1 + y1 δ2.
    const auto h = at(f.h, p);
    EXPECT_NEAR(h[0], p.y2() / 4.0, 1e-15);
    EXPECT_NEAR(h[1], -p.y1() / 4.0, 1e-15);
    const auto v = at(f.v, p);
    EXPECT_EQ(v[0], 0.0);
    EXPECT_EQ(v[2], h[0]);
    EXPECT_EQ(v[3], h[1]);

    const BerwaldFrame d = build_frame(analyze(fixture::degenerate()));
    const auto hd = at(d.h, Point(0.0, 0.5, 0.2, 1.0));
    EXPECT_NE(hd[0], 0.0);
    EXPECT_NEAR(hd[1], 0.0, 1e-15);
}

TEST(Frame, AlphaOfHVanishesAndAlphaOfSIsRho) {
    for (const Spray& s : {fixture::poincare(), fixture::degenerate(), fixture::nonmetrizable()}) {
        const SprayGeometry g = analyze(s);
        const BerwaldFrame f = build_frame(g);
        const Expr ah = g.iso.alpha1 * f.h.c[0] + g.iso.alpha2 * f.h.c[1];
        const Expr as = g.iso.alpha1 * f.s.c[0] + g.iso.alpha2 * f.s.c[1];
        const CompiledExprs prog{ah, as, g.iso.rho, g.iso.alpha1 * f.h.c[1]};
        const auto pts = sample_points(s.domain, 100, 11);
        for (const Point& p : pts) {
            const auto v = prog.evaluate(p);
            EXPECT_LE(std::fabs(v[0]), 1e-12 * std::fabs(v[3]) + 1e-300);
            EXPECT_NEAR(v[1], v[2], 1e-12 * std::fabs(v[2]));
        }
        EXPECT_GT(check_frame_nonsingular(f, pts, 1e-12), 1e-6);
    }
}

TEST(Bracket, HomogeneityOfSpray) {
    for (const Spray& s : {fixture::poincare(), fixture::nonmetrizable()}) {
        const VectorField S = spray_field(s);
        const FieldIdentity id{"[C,S] = S", {along(liouville(), S), -along(S, liouville()), -S}};
        const SprayGeometry g = analyze(s);
        EXPECT_LT(identity_residual(id, build_frame(g), sample_points(s.domain, 50, 1)), 1e-12);
    }
    const VectorField dx1{{Expr::constant(1.0), Expr{}, Expr{}, Expr{}}};
    const VectorField dy1{{Expr{}, Expr{}, Expr::constant(1.0), Expr{}}};
    EXPECT_EQ(max_abs(at(lie_bracket(dx1, dy1), kP)), 0.0);
}

TEST(Bracket, AntisymmetryAndJacobiOnRandomFields) {
    fixture::RandomExpr gen(17);
    for (int i = 0; i < 10; ++i) {
        const VectorField x = random_polynomial_field(gen), y = random_polynomial_field(gen),
                          z = random_polynomial_field(gen);
        const VectorField anti = lie_bracket(x, y) + lie_bracket(y, x);
        const VectorField jac = lie_bracket(x, lie_bracket(y, z)) + lie_bracket(y, lie_bracket(z, x)) +
                                lie_bracket(z, lie_bracket(x, y));
        for (int k = 0; k < 10; ++k) {
            const Point p = gen.point();
            std::array<double, 4> a{}, j{};
            const CompiledExprs pa(std::span<const Expr>(anti.c)), pj(std::span<const Expr>(jac.c));
            if (!pa.try_evaluate(p, a) || !pj.try_evaluate(p, j)) continue;
            // Scale by the size of the individual double brackets.
            const auto t = at(lie_bracket(x, lie_bracket(y, z)), p);
            EXPECT_LT(max_abs(a), 1e-10);
            EXPECT_LT(max_abs(j), 1e-10 * std::max(1.0, max_abs(t)));
        }
    }
}

TEST(Nabla, LiouvilleAndSpray) {
    const SprayGeometry g = analyze(fixture::nonmetrizable());
    const auto pts = sample_points(g.spray.domain, 30, 5);
    const BerwaldFrame f = build_frame(g);
    for (const VectorField& x : {liouville(), spray_field(g.spray)}) {
        const auto terms = nabla_terms(x, g);
        EXPECT_LT(identity_residual({"nabla", {terms.begin(), terms.end()}}, f, pts), 1e-12);
    }
}

TEST(Decompose, FrameFieldsAndSingularity) {
    const SprayGeometry g = analyze(fixture::poincare());
    const BerwaldFrame f = build_frame(g);
    const Point p(0.2, 1.2, 0.4, -0.9);
    const auto s = decompose(f.s, f, p);
    EXPECT_NEAR(s[1], 1.0, 1e-14);
    EXPECT_NEAR(std::fabs(s[0]) + std::fabs(s[2]) + std::fabs(s[3]), 0.0, 1e-14);
    const auto c = decompose(f.c, f, p);
    EXPECT_NEAR(c[3], 1.0, 1e-14);
    std::array<std::array<double, 4>, 4> singular{};
    singular[0] = {1, 0, 0, 0};
    singular[1] = {1, 0, 0, 0};
    singular[2] = {0, 0, 1, 0};
    singular[3] = {0, 0, 0, 1};
    EXPECT_THROW(decompose(std::array<double, 4>{0, 1, 0, 0}, singular), SingularFrame);
}

TEST(Commutations, HoldOnAllFixtures) {
    for (const Spray& s : {fixture::poincare(), fixture::degenerate(), fixture::nonmetrizable()}) {
        const SprayGeometry g = analyze(s);
        const BerwaldFrame f = build_frame(g);
        const auto res = verify_spray_commutations(f, g, true, sample_points(s.domain, 100, 42), 1e-9);
        EXPECT_EQ(res.size(), 5u);
        for (const auto& r : res) {
            EXPECT_TRUE(r.pass) << r.name << " " << r.residual;
        }
    }
}

TEST(Commutations, RefuseFlat) {
    const SprayGeometry g = analyze(fixture::poincare());
    EXPECT_THROW(verify_spray_commutations(build_frame(g), g, false, {}, 1e-9), NotApplicable);
}

// α([aH, aV]) = a² α([H, V]) for a 0+-homogeneous a: sign and zero agree.
TEST(Frame, ChoiceInvariance) {
    const Expr a = parse_expr("(1 + x1^2)*(2 + y1/sqrt(y1^2 + y2^2))");
    for (const Spray& s : {fixture::poincare(), fixture::degenerate()}) {
        const SprayGeometry g = analyze(s);
        const BerwaldFrame f = build_frame(g);
        auto alpha_hv = [&](const VectorField& h, const VectorField& v) {
            const VectorField b = lie_bracket(h, v);
            return g.iso.alpha1 * b.c[0] + g.iso.alpha2 * b.c[1];
        };
        const CompiledExprs prog{alpha_hv(f.h, f.v), alpha_hv(a * f.h, a * f.v), a};
        for (const Point& p : sample_points(s.domain, 50, 8)) {
            const auto v = prog.evaluate(p);
            EXPECT_NEAR(v[1], v[2] * v[2] * v[0], 1e-9 * (1 + std::fabs(v[1])));
        }
    }
}
