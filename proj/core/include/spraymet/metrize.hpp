#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spraymet/config.hpp"
#include "spraymet/forms.hpp"
#include "spraymet/frame.hpp"
#include "spraymet/quadrature.hpp"
#include "spraymet/spraygeo.hpp"

namespace spraymet {

enum class VerdictKind { RegularMetrizable, DegenerateMetrizable, NotMetrizable, FlatOutOfScope, Indeterminate };

std::string_view to_string(VerdictKind k) noexcept;
std::optional<VerdictKind> verdict_from_string(std::string_view s) noexcept;

struct Verdict {
    VerdictKind kind = VerdictKind::Indeterminate;
    std::string reason;  // set for Indeterminate and FlatOutOfScope
    FlatnessResult flatness;
    std::optional<ClosednessResult> closedness;
    std::optional<RankResult> rank;

    bool metrizable() const noexcept {
        return kind == VerdictKind::RegularMetrizable || kind == VerdictKind::DegenerateMetrizable;
    }
};

/// Everything the decision procedure derives. Frame and forms are left
/// empty when the spray is flat.
struct Classification {
    SprayGeometry geo;
    std::vector<Point> samples;
    SprayDiagnostics diagnostics;
    BerwaldFrame frame;
    OneForm omega;
    TwoForm big_omega;
    Verdict verdict;
};

/// flatness -> ω -> closedness -> rank, mapped to a verdict:
///   closed + rank 4        RegularMetrizable
///   closed + rank 2        DegenerateMetrizable
///   not closed             NotMetrizable
///   flat                   FlatOutOfScope
///   gray zone, mixed rank  Indeterminate
Classification classify(const Spray& s, const RunConfig& cfg);

/// F = exp(f), f the line integral of ω from the base point. F(p0) = 1.
class FinslerCandidate {
public:
    FinslerCandidate(OneForm omega, SamplingDomain domain, Point base_point, double quadrature_tol);

    const OneForm& omega() const noexcept { return omega_; }
    const Point& base_point() const noexcept { return p0_; }
    const SamplingDomain& domain() const noexcept { return domain_; }

    /// Default path: axis-aligned polyline changing x1, x2, y1, y2 in that
    /// order; other axis orders and then detours through auxiliary
    /// waypoints are tried when a segment leaves the admissible region.
    /// Throws PathBlocked.
    Polyline path_to(const Point& p) const;
    /// Axis polyline with the given coordinate order, or nullopt when some
    /// segment is not admissible.
    std::optional<Polyline> axis_path(const Point& from, const Point& to, const std::array<int, 4>& order) const;

    double f_along(const Polyline& path) const;
    double f(const Point& p) const;
    double operator()(const Point& p) const;

    /// exp(f) for a closed form recognized by recognize_closed_form.
    const std::optional<Expr>& closed_form() const noexcept { return closed_form_; }
    void set_closed_form(Expr e) { closed_form_ = std::move(e); }

    /// h_ij = 2 ω_i ω_j + d ω_i / d y^j (ω_i the dy-components), so that
    /// g_ij = F² h_ij.
    const std::array<std::array<Expr, 2>, 2>& metric_shape() const noexcept { return shape_; }
    /// h at p, row-major.
    std::array<double, 4> metric_shape_at(const Point& p) const;

private:
    bool segment_ok(const Point& a, const Point& b) const;

    OneForm omega_;
    SamplingDomain domain_;
    Point p0_;
    double tol_;
    std::shared_ptr<const CompiledExprs> prog_;
    std::array<std::array<Expr, 2>, 2> shape_;
    std::shared_ptr<const CompiledExprs> shape_prog_;
    std::optional<Expr> closed_form_;
};

/// Requires a metrizable verdict. Throws NotApplicable otherwise.
FinslerCandidate reconstruct(const Classification& cls, const Point& p0, const RunConfig& cfg);

/// Tries exp-templates b(y)·x1^m1·x2^m2 (b among |y1|, |y2|, y1, y2, |y|;
/// m in [-2, 2]) whose logarithmic differential matches ω at the samples.
/// The result is normalized to 1 at the base point.
std::optional<Expr> recognize_closed_form(const OneForm& omega, std::span<const Point> samples, const Point& p0);

struct PathIndependence {
    double max_discrepancy = 0.0;
    std::size_t pairs = 0;
    std::optional<std::pair<Point, Point>> worst;
};

/// For each pair, integrates ω along the axis path in order x1, x2, y1, y2
/// and in the reversed order and compares. Pairs without two admissible
/// paths are skipped.
PathIndependence path_independence_check(const FinslerCandidate& cand,
                                         std::span<const std::pair<Point, Point>> pairs);

struct MetricTensor {
    std::array<std::array<double, 2>, 2> g{};
    double f_value = 0.0;
    std::array<double, 2> singular{};
    int rank = 0;
    double symmetry_residual = 0.0;
};

/// g_ij = F² (2 ω_i ω_j + d ω_i / d y^j). Rank from σ >= rank_tol·σ_max.
/// Throws InternalIdentityFailure when the symmetry residual exceeds 1e-8.
MetricTensor metric_tensor(const FinslerCandidate& cand, const Point& p, double rank_tol = 1e-7);

struct Check {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct VerificationReport {
    std::vector<Check> checks;
    std::vector<int> metric_rank;  // per sample
    std::vector<double> kappa;     // ρ / F² per sample
    bool all_pass() const noexcept;
    const Check* find(std::string_view name) const noexcept;
};

/// Residual battery at the classification samples. F-derivatives are
/// central differences of the numeric F with step 1e-4.
///   euler_lagrange       max_i |δF²/δx^i| relative to its terms
///   homogeneity          |C(F) - F| / F
///   h_f2, v_f2, s_f2     |X(F²)| / (|X| |dF²|)
///   flag_curvature       R^i_j - ρ (δ^i_j - ω_{y^j} y^i)
///   hilbert_relation     Ω + ω_{F²}/(2F²)
///   metric_rank          rank 2 (regular) or 1 (degenerate) everywhere
///   frame_identities     the spray commutation formulae
/// and, for degenerate sprays, α(X) and d_vF(X) for the brackets and
/// covariant derivatives of the frame.
VerificationReport verify_finsler(const FinslerCandidate& cand, const Classification& cls, const RunConfig& cfg);

/// H̃ = H / sqrt(h(H^x, H^x)) so that G(H̃, H̃) = F². Regular case only.
NormalizedBerwaldFrame finsler_normalize(const Classification& cls, const FinslerCandidate& cand);

struct RegularFrameReport {
    double nabla_h = 0.0;
    double nabla_v = 0.0;
    double bracket_sh = 0.0;  // [S,H] = ρV
    double bracket_sv = 0.0;  // [S,V] = -H
    double length_ratio = 0.0;  // max |G(H,H)/G(S,S) - 1|
    double c_s = 0.0;           // max |c_S - 1|
    double main_scalar = 0.0;   // max |I|
    double main_scalar_pde = 0.0;
    std::vector<MainScalar> per_sample;
};

/// The regular-case identities on a normalized frame.
RegularFrameReport regular_frame_checks(const NormalizedBerwaldFrame& nf, const Classification& cls,
                                        const FinslerCandidate& cand, std::span<const Point> samples,
                                        unsigned threads = 1);

}  // namespace spraymet
