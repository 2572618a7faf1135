#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spraymet/expr.hpp"

namespace spraymet {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool empty() const noexcept { return !(lo <= hi); }
    bool contains(double v) const noexcept { return lo <= v && v <= hi; }
    double mid() const noexcept { return 0.5 * (lo + hi); }
};

/// Strict inequality `lhs op rhs`, stored as g > 0.
class Constraint {
public:
    /// Accepts "lhs > rhs", "lhs < rhs", ">=" and "<=" (treated as strict).
    static Constraint parse(std::string_view text);

    Constraint(Expr g, std::string source);

    const Expr& function() const noexcept { return g_; }
    const std::string& source() const noexcept { return source_; }

    /// g(p), or nullopt where g is not evaluable.
    std::optional<double> value(const Point& p) const;
    bool holds(const Point& p, double margin) const;

private:
    Expr g_;
    std::string source_;
    std::shared_ptr<const CompiledExprs> prog_;
};

/// Coordinate box in x, annulus r_min <= |y| <= r_max optionally cut by an
/// angular cone, and extra strict inequalities that exclude singular loci.
struct SamplingDomain {
    Interval x1{-1.0, 1.0};
    Interval x2{-1.0, 1.0};
    Interval radius{0.2, 2.0};
    std::optional<Interval> cone_deg;
    std::vector<Constraint> constraints;
    /// Points closer than this to an excluded locus are rejected.
    double margin = 1e-6;

    /// Throws DomainError when the box, annulus or cone is empty.
    void validate() const;

    bool in_cone(double y1, double y2) const noexcept;
    bool contains(const Point& p) const;

    /// Relaxed test used for integration paths: only the exclusions and a
    /// floor |y| >= radius.lo / 2 apply, the sampling box does not.
    bool admissible(const Point& p) const;
};

/// Deterministic rejection sampler. Throws DomainTooSingular when fewer than
/// n points survive 1000·n draws.
std::vector<Point> sample_points(const SamplingDomain& domain, std::size_t n, std::uint64_t seed);

/// Box center with y on the unit circle, preferring (0, 1), then (1, 0),
/// then the cone bisector.
Point default_base_point(const SamplingDomain& domain);

}  // namespace spraymet
