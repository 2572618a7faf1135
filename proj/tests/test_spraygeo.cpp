#include <cmath>

#include <gtest/gtest.h>

#include "spraymet/error.hpp"
#include "spraymet/sampling.hpp"
#include "spraymet/spraygeo.hpp"
#include "support/fixtures.hpp"

using namespace spraymet;

namespace {

const Point kP(0.0, 1.0, 1.0, 1.0);

std::vector<Point> samples_of(const Spray& s, std::size_t n = 200) { return sample_points(s.domain, n, 42); }

}  // namespace

TEST(Sampling, DeterministicAndInsideDomain) {
    const Spray s = fixture::poincare();
    const auto a = sample_points(s.domain, 200, 42);
    const auto b = sample_points(s.domain, 200, 42);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, sample_points(s.domain, 200, 43));
    for (const Point& p : a) {
        EXPECT_TRUE(s.domain.contains(p));
        EXPECT_GE(p.x2(), 0.5);
        EXPECT_LE(p.fiber_norm(), 2.0 + 1e-12);
        EXPECT_GE(p.fiber_norm(), 0.2 - 1e-12);
    }
}

TEST(Sampling, ConeAndConstraints) {
    const Spray s = fixture::degenerate();
    for (const Point& p : samples_of(s)) EXPECT_GT(p.y2(), 0.1);
    SamplingDomain d = s.domain;
    d.constraints.push_back(Constraint::parse("y2 < 0"));
    EXPECT_THROW(sample_points(d, 10, 1), DomainTooSingular);
    SamplingDomain empty;
    empty.x1 = {1.0, 0.0};
    EXPECT_THROW(empty.validate(), DomainError);
}

TEST(Sampling, DefaultBasePoint) {
    const Point p = default_base_point(fixture::poincare().domain);
    EXPECT_EQ(p, Point(0.0, 1.25, 0.0, 1.0));
}

TEST(Spray, ValidateAcceptsFixturesAndRejectsDegreeOne) {
    RunConfig cfg;
    EXPECT_NO_THROW(validate_spray(fixture::poincare(), cfg));
    EXPECT_NO_THROW(validate_spray(fixture::nonmetrizable(), cfg));
    EXPECT_NO_THROW(validate_spray(fixture::degenerate(), cfg));
    Spray bad = fixture::poincare();
    bad.g1 = parse_expr("y1");
    EXPECT_THROW(validate_spray(bad, cfg), HomogeneityViolation);
}

TEST(Connection, Poincare) {
    const Connection c = connection(fixture::poincare());
    const Point p(0.2, 2.0, 0.6, -1.4);
    EXPECT_DOUBLE_EQ(evaluate(c.n[0][0], p), -p.y2() / p.x2());
    EXPECT_DOUBLE_EQ(evaluate(c.n[0][1], p), -p.y1() / p.x2());
    EXPECT_DOUBLE_EQ(evaluate(c.n[1][0], p), p.y1() / p.x2());
    EXPECT_DOUBLE_EQ(evaluate(c.n[1][1], p), -p.y2() / p.x2());
}

TEST(Connection, DegenerateAndFlat) {
    const Connection c = connection(fixture::degenerate());
    const Point p(0.2, 0.5, 0.6, 1.4);
    const double q = 2.0 * (1.0 + p.x2() * p.x2());
    EXPECT_NEAR(evaluate(c.n[0][0], p), p.x2() * p.y2() / q, 1e-15);
    EXPECT_NEAR(evaluate(c.n[0][1], p), p.x2() * p.y1() / q, 1e-15);
    EXPECT_TRUE(c.n[1][0].is_zero());
    EXPECT_TRUE(c.n[1][1].is_zero());
    for (const auto& row : connection(fixture::flat()).n) {
        for (const Expr& e : row) EXPECT_TRUE(e.is_zero());
    }
}

TEST(Jacobi, PoincareComponents) {
    const JacobiEndo j = jacobi(fixture::poincare());
    const Point p(0.3, 1.7, -0.4, 0.9);
    const double x2sq = p.x2() * p.x2();
    EXPECT_NEAR(evaluate(j.r[0][0], p), -p.y2() * p.y2() / x2sq, 1e-14);
    EXPECT_NEAR(evaluate(j.r[0][1], p), p.y1() * p.y2() / x2sq, 1e-14);
    EXPECT_NEAR(evaluate(j.r[1][0], p), p.y1() * p.y2() / x2sq, 1e-14);
    EXPECT_NEAR(evaluate(j.r[1][1], p), -p.y1() * p.y1() / x2sq, 1e-14);
    EXPECT_NEAR(evaluate(j.r[0][0], kP), -1.0, 1e-15);
    EXPECT_NEAR(evaluate(j.r[0][1], kP), 1.0, 1e-15);
}

TEST(Jacobi, AnnihilatesSprayOnAllFixtures) {
    for (const Spray& s : {fixture::poincare(), fixture::degenerate(), fixture::nonmetrizable()}) {
        const auto pts = samples_of(s);
        const Connection c = connection(s);
        EXPECT_NO_THROW(jacobi(s, c, pts, 1e-9));
        EXPECT_LT(jacobi_spray_residual(jacobi(s, c), pts), 1e-9);
    }
    const JacobiEndo flat = jacobi(fixture::flat());
    for (const auto& row : flat.r) {
        for (const Expr& e : row) EXPECT_TRUE(e.is_zero());
    }
}

TEST(Isotropy, PoincareValues) {
    const Isotropy iso = isotropy(jacobi(fixture::poincare()));
    EXPECT_NEAR(evaluate(iso.rho, kP), -2.0, 1e-15);
    EXPECT_NEAR(evaluate(iso.alpha1, kP), -1.0, 1e-15);
    EXPECT_NEAR(evaluate(iso.alpha2, kP), -1.0, 1e-15);
    const Point p(0.3, 1.7, -0.4, 0.9);
    const double x2sq = p.x2() * p.x2();
    EXPECT_NEAR(evaluate(iso.alpha1, p), -p.y1() / x2sq, 1e-14);
    EXPECT_NEAR(evaluate(iso.alpha2, p), -p.y2() / x2sq, 1e-14);
    EXPECT_NEAR(evaluate(iso.rho, p), -(p.y1() * p.y1() + p.y2() * p.y2()) / x2sq, 1e-14);
}

TEST(Isotropy, DegenerateAlphaOverRho) {
    const Isotropy iso = isotropy(jacobi(fixture::degenerate()));
    for (const Point& p : samples_of(fixture::degenerate(), 50)) {
        const double rho = evaluate(iso.rho, p);
        EXPECT_NEAR(evaluate(iso.alpha1, p) / rho, 0.0, 1e-14);
        EXPECT_NEAR(evaluate(iso.alpha2, p) / rho, 1.0 / p.y2(), 1e-12);
        EXPECT_LT(rho, 0.0);
    }
}

TEST(Isotropy, CrossCheckOnFixtures) {
    for (const Spray& s : {fixture::poincare(), fixture::degenerate(), fixture::nonmetrizable()}) {
        const auto pts = samples_of(s);
        const JacobiEndo j = jacobi(s);
        const IsotropyCheck c = check_isotropy(isotropy(j), j, pts);
        EXPECT_LT(c.max(), 1e-9);
    }
}

TEST(Flatness, Probe) {
    for (const Spray& s : {fixture::poincare(), fixture::degenerate()}) {
        const SprayGeometry g = analyze(s);
        EXPECT_TRUE(flatness_probe(g.iso, g.jac, samples_of(s), 1e-8).non_flat);
    }
    const SprayGeometry f = analyze(fixture::flat());
    const FlatnessResult r = flatness_probe(f.iso, f.jac, samples_of(fixture::flat()), 1e-8);
    EXPECT_FALSE(r.non_flat);
    EXPECT_TRUE(r.witness.has_value());
}

TEST(Homogeneity, Ladder) {
    for (const Spray& s : {fixture::poincare(), fixture::degenerate(), fixture::nonmetrizable()}) {
        const auto ladder = homogeneity_ladder(analyze(s), samples_of(s));
        EXPECT_GE(ladder.size(), 13u);
        for (const LadderEntry& e : ladder) EXPECT_LT(e.residual, 1e-8) << e.name;
    }
}
