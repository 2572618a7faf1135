#pragma once

#include <array>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "spraymet/expr.hpp"
#include "spraymet/frame.hpp"
#include "spraymet/spraygeo.hpp"

namespace spraymet {

/// 1-form in the coframe (dx1, dx2, dy1, dy2).
struct OneForm {
    std::array<Expr, 4> c;

    const Expr& operator[](std::size_t a) const { return c[a]; }
};

/// Index pairs of the stored 2-form components, in storage order:
/// dx1^dx2, dx1^dy1, dx1^dy2, dx2^dy1, dx2^dy2, dy1^dy2.
inline constexpr std::array<std::pair<std::size_t, std::size_t>, 6> kTwoFormBasis{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

/// 2-form; only the independent components are stored.
struct TwoForm {
    std::array<Expr, 6> c;

    const Expr& operator[](std::size_t k) const { return c[k]; }
};

TwoForm operator+(const TwoForm& a, const TwoForm& b);
TwoForm operator*(const Expr& f, const TwoForm& t);

OneForm differential(const Expr& f);
TwoForm exterior_derivative(const OneForm& w);
TwoForm wedge(const OneForm& a, const OneForm& b);
/// i_X w.
Expr contract(const OneForm& w, const VectorField& x);
/// T(X, Y) evaluated from component values.
double pair(const std::array<double, 6>& t, const std::array<double, 4>& x, const std::array<double, 4>& y);

/// Semi-basic 1-form α/ρ = (α_i/ρ) dx^i.
OneForm alpha_over_rho(const SprayGeometry& g);

/// ω = i_F(α/ρ) = (α_i/ρ) δy^i: dy-components α_i/ρ, dx_j-components
/// (α_i/ρ) N^i_j.
OneForm omega_candidate(const SprayGeometry& g);

/// Ω = d(α/ρ) + 2 ω ∧ (α/ρ).
TwoForm big_omega(const SprayGeometry& g);

enum class ClosedKind { Closed, NotClosed, GrayZone };

struct ClosednessResult {
    ClosedKind kind = ClosedKind::NotClosed;
    /// max over samples of max_k |dω_k| / (1 + max_{a,b} |d_a ω_b|).
    double max_residual = 0.0;
    std::vector<double> per_sample;
    std::optional<Point> witness;
    /// Every component of dω simplified to the literal 0.
    bool symbolically_zero = false;

    /// Share of samples whose residual exceeds `threshold`.
    double fraction_above(double threshold) const;
};

/// Closed when max_residual <= tol, NotClosed beyond 10·tol, GrayZone between.
ClosednessResult closedness(const OneForm& w, std::span<const Point> samples, double tol);

using FramedMatrix = std::array<std::array<double, 4>, 4>;

/// M[a][b] = T(E_a, E_b) with E = (H, S, V, C).
FramedMatrix frame_matrix(const TwoForm& t, const BerwaldFrame& f, const Point& p);

/// Compiles a 2-form together with a frame for repeated frame_matrix calls.
class FramedFormEvaluator {
public:
    FramedFormEvaluator(const TwoForm& t, const BerwaldFrame& f, std::span<const Expr> scalars = {});

    FramedMatrix matrix_at(const Point& p) const;
    /// Matrix plus the extra scalars given at construction.
    FramedMatrix matrix_at(const Point& p, std::vector<double>& scalars) const;

private:
    CompiledExprs prog_;
    std::size_t num_scalars_ = 0;
};

/// Singular values (descending) of a framed matrix.
std::array<double, 4> singular_values(const FramedMatrix& m);
int numerical_rank(const FramedMatrix& m, double tol);

enum class RankKind { Rank4, Rank2, Mixed };

struct RankSample {
    Point point;
    int matrix_rank = 0;
    bool scalar_nonzero = false;  // α([H,V]) test
    double alpha_hv_over_rho = 0.0;
    std::array<double, 4> singular{};
};

struct RankResult {
    RankKind kind = RankKind::Mixed;
    std::vector<RankSample> samples;
    std::vector<Point> witnesses;  // samples whose rank departs from the first
};

/// Numerical rank of the framed matrix (σ >= tol·σ_max) and the scalar test
/// |α([H,V])/ρ| >= tol·σ_max² must agree at every sample, else
/// RankDisagreement. Constant rank gives Rank4/Rank2, otherwise Mixed.
RankResult rank_test(const TwoForm& t, const BerwaldFrame& f, const SprayGeometry& g, std::span<const Point> samples,
                     double tol);

/// α([H, V]) / ρ as an expression.
Expr alpha_bracket_hv_over_rho(const BerwaldFrame& f, const SprayGeometry& g);

/// Fixed entries of Ω in a Berwald frame, each relative to max |M| at the
/// sample: M[H][C], M[S][V], M[V][C] vanish, M[S][C] = -1 and
/// M[H][V] = -α([H,V])/ρ.
struct OmegaPattern {
    double zeros = 0.0;
    double s_c = 0.0;
    double h_v = 0.0;
};

OmegaPattern omega_pattern(const TwoForm& t, const BerwaldFrame& f, const SprayGeometry& g,
                           std::span<const Point> samples);

struct NormalizationReport {
    double contraction = 0.0;  // max |i_C ω - 1|
    double lie = 0.0;          // max |L_C ω| component, relative
};

NormalizationReport normalization_checks(const OneForm& w, std::span<const Point> samples);

}  // namespace spraymet
