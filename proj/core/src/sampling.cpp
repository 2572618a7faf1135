#include "spraymet/sampling.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "spraymet/error.hpp"

namespace spraymet {

namespace {

double uniform01(std::mt19937_64& rng) {
    // 53 random bits; avoids the implementation-defined std::uniform_real_distribution.
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

double normalize_deg(double a) {
    a = std::fmod(a, 360.0);
    if (a < 0.0) a += 360.0;
    return a;
}

}  // namespace

Constraint::Constraint(Expr g, std::string source)
    : g_(std::move(g)), source_(std::move(source)), prog_(std::make_shared<CompiledExprs>(std::initializer_list<Expr>{g_})) {}

Constraint Constraint::parse(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '<' && c != '>') continue;
        const bool or_equal = i + 1 < text.size() && text[i + 1] == '=';
        const std::string lhs = trim(text.substr(0, i));
        const std::string rhs = trim(text.substr(i + (or_equal ? 2 : 1)));
        const Expr l = parse_expr(lhs);
        const Expr r = parse_expr(rhs);
        Expr g = c == '>' ? l - r : r - l;
        return Constraint(simplify(g).expr, std::string(trim(text)));
    }
    throw ParseError("constraint needs one of <, >, <=, >=", text.size());
}

std::optional<double> Constraint::value(const Point& p) const {
    double v = 0.0;
    if (!prog_->try_evaluate(p, std::span<double>(&v, 1))) return std::nullopt;
    return v;
}

bool Constraint::holds(const Point& p, double margin) const {
    const auto v = value(p);
    return v && *v > margin;
}

void SamplingDomain::validate() const {
    if (x1.empty() || x2.empty()) throw DomainError("empty x-box");
    if (radius.empty() || radius.lo <= 0.0) throw DomainError("y-annulus must satisfy 0 < r_min <= r_max");
    if (cone_deg && (cone_deg->empty() || cone_deg->hi - cone_deg->lo > 360.0))
        throw DomainError("cone must be a nonempty angular interval of at most 360 degrees");
    if (!(margin >= 0.0)) throw DomainError("margin must be nonnegative");
}

bool SamplingDomain::in_cone(double y1, double y2) const noexcept {
    if (!cone_deg) return true;
    const double a = normalize_deg(std::atan2(y2, y1) * 180.0 / std::numbers::pi);
    const double lo = normalize_deg(cone_deg->lo);
    const double width = cone_deg->hi - cone_deg->lo;
    return normalize_deg(a - lo) <= width;
}

bool SamplingDomain::contains(const Point& p) const {
    if (!x1.contains(p.x1()) || !x2.contains(p.x2())) return false;
    if (!radius.contains(p.fiber_norm())) return false;
    if (!in_cone(p.y1(), p.y2())) return false;
    for (const Constraint& c : constraints) {
        if (!c.holds(p, margin)) return false;
    }
    return true;
}

bool SamplingDomain::admissible(const Point& p) const {
    if (p.fiber_norm() < 0.5 * radius.lo) return false;
    for (const Constraint& c : constraints) {
        if (!c.holds(p, margin)) return false;
    }
    return true;
}

std::vector<Point> sample_points(const SamplingDomain& domain, std::size_t n, std::uint64_t seed) {
    domain.validate();
    std::mt19937_64 rng(seed);
    std::vector<Point> out;
    out.reserve(n);
    const double a_lo = domain.cone_deg ? domain.cone_deg->lo : 0.0;
    const double a_hi = domain.cone_deg ? domain.cone_deg->hi : 360.0;
    const std::size_t budget = 1000 * std::max<std::size_t>(n, 1);
    for (std::size_t draw = 0; out.size() < n; ++draw) {
        if (draw >= budget)
            throw DomainTooSingular("only " + std::to_string(out.size()) + " of " + std::to_string(n) +
                                    " admissible samples after " + std::to_string(budget) + " draws");
        const double x1 = domain.x1.lo + (domain.x1.hi - domain.x1.lo) * uniform01(rng);
        const double x2 = domain.x2.lo + (domain.x2.hi - domain.x2.lo) * uniform01(rng);
        const double r = domain.radius.lo + (domain.radius.hi - domain.radius.lo) * uniform01(rng);
        const double ang = (a_lo + (a_hi - a_lo) * uniform01(rng)) * std::numbers::pi / 180.0;
        const Point p(x1, x2, r * std::cos(ang), r * std::sin(ang));
        if (domain.contains(p)) out.push_back(p);
    }
    return out;
}

Point default_base_point(const SamplingDomain& domain) {
    const double x1 = domain.x1.mid();
    const double x2 = domain.x2.mid();
    std::vector<std::pair<double, double>> candidates{{0.0, 1.0}, {1.0, 0.0}, {0.0, -1.0}, {-1.0, 0.0}};
    if (domain.cone_deg) {
        const double a = domain.cone_deg->mid() * std::numbers::pi / 180.0;
        candidates.emplace_back(std::cos(a), std::sin(a));
    }
    for (int k = 0; k < 16; ++k) {
        const double a = (22.5 * k + 11.25) * std::numbers::pi / 180.0;
        candidates.emplace_back(std::cos(a), std::sin(a));
    }
    for (auto [y1, y2] : candidates) {
        const Point p(x1, x2, y1, y2);
        if (domain.in_cone(y1, y2) && domain.admissible(p)) return p;
    }
    throw DomainError("no admissible default base point; supply one explicitly");
}

}  // namespace spraymet
