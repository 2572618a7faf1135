#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spraymet/expr.hpp"
#include "spraymet/spraygeo.hpp"

namespace spraymet {

/// Vector field on T_0 M in the coordinate basis
/// (d/dx1, d/dx2, d/dy1, d/dy2).
struct VectorField {
    std::array<Expr, 4> c;

    const Expr& operator[](std::size_t a) const { return c[a]; }
};

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a);
VectorField operator*(const Expr& f, const VectorField& x);

/// X(f).
Expr apply(const VectorField& x, const Expr& f);
/// Componentwise X(Y^a); [X, Y] = along(X, Y) - along(Y, X).
VectorField along(const VectorField& x, const VectorField& y);
VectorField lie_bracket(const VectorField& x, const VectorField& y);
/// Tangent structure J = d/dy^i ⊗ dx^i.
VectorField vertical_endomorphism(const VectorField& x);

VectorField spray_field(const Spray& s);
VectorField liouville();
/// δ/δx^i = d/dx^i - N^j_i d/dy^j.
std::pair<VectorField, VectorField> horizontal_basis(const Connection& c);
VectorField horizontal_part(const VectorField& x, const Connection& c);
VectorField vertical_part(const VectorField& x, const Connection& c);

/// Dynamical covariant derivative ∇X = h[S, hX] + v[S, vX].
VectorField nabla(const VectorField& x, const SprayGeometry& g);
/// The four bracket halves whose sum is ∇X: h(S(hX)), -h(hX(S)), v(S(vX)),
/// -v(vX(S)). Used to scale residuals of identities involving ∇.
std::array<VectorField, 4> nabla_terms(const VectorField& x, const SprayGeometry& g);

struct BerwaldFrame {
    VectorField h;
    VectorField s;
    VectorField v;
    VectorField c;

    std::array<const VectorField*, 4> fields() const { return {&h, &s, &v, &c}; }
};

/// H = -α_2 δ/δx^1 + α_1 δ/δx^2, V = JH, plus S and the Liouville field.
/// Orientation of {S, H} follows sign(ρ).
BerwaldFrame build_frame(const SprayGeometry& g);

/// Minimum over samples of |det E| / prod |E_a|, E the 4x4 frame matrix.
/// Throws SingularFrame when it falls below `tol`.
double check_frame_nonsingular(const BerwaldFrame& f, std::span<const Point> samples, double tol);

/// Frame and extra fields compiled for repeated pointwise work.
class FrameEvaluator {
public:
    FrameEvaluator(const BerwaldFrame& f, std::span<const VectorField> extra = {});

    /// Columns H, S, V, C at p.
    std::array<std::array<double, 4>, 4> frame_at(const Point& p) const;
    /// All extra fields at p, in the order given.
    std::vector<std::array<double, 4>> extra_at(const Point& p) const;
    /// Frame and extras in one pass.
    void evaluate(const Point& p, std::array<std::array<double, 4>, 4>& frame,
                  std::vector<std::array<double, 4>>& extra) const;

private:
    CompiledExprs prog_;
    std::size_t num_extra_ = 0;
};

/// Solves X(p) = c_H H + c_S S + c_V V + c_C C. Throws SingularFrame when
/// the relative residual exceeds 1e-10 or the frame is numerically singular.
std::array<double, 4> decompose(const std::array<double, 4>& x, const std::array<std::array<double, 4>, 4>& frame);
std::array<double, 4> decompose(const VectorField& x, const BerwaldFrame& f, const Point& p);

/// A vector identity written as a list of terms that must sum to zero.
struct FieldIdentity {
    std::string name;
    std::vector<VectorField> terms;
};

/// ‖decompose(sum)‖∞ / sum_k ‖decompose(term_k)‖∞ at each sample, maximized.
double identity_residual(const FieldIdentity& id, const BerwaldFrame& f, std::span<const Point> samples);

struct IdentityResult {
    std::string name;
    double residual = 0.0;
    bool pass = false;
};

/// [C,V] = 0, [S,H] = ∇H + ρV, [S,V] = -H + ∇V together with the
/// homogeneity brackets [C,H] = H and [C,S] = S.
std::vector<FieldIdentity> spray_commutation_identities(const BerwaldFrame& f, const SprayGeometry& g);

/// Refuses (NotApplicable) unless `non_flat`.
std::vector<IdentityResult> verify_spray_commutations(const BerwaldFrame& f, const SprayGeometry& g, bool non_flat,
                                                      std::span<const Point> samples, double tol);

/// Berwald frame rescaled so that G(H, H) = F². Produced by
/// finsler_normalize() for regular metrizable sprays only.
struct NormalizedBerwaldFrame {
    BerwaldFrame frame;
    /// 0+-homogeneous factor a with H_normalized = a·H.
    Expr factor;
};

struct MainScalar {
    double c_h = 0.0;  // the main scalar I
    double c_s = 0.0;  // 1 for a correctly normalized frame
    double c_v = 0.0;  // S(I)
    double c_c = 0.0;  // 0
    double pde_residual = 0.0;  // |S²(I) + Iρ + V(ρ)|
};

/// Coefficients of [H, V] in the normalized frame at p, and the residual of
/// S²(I) + Iρ + V(ρ) = 0 from nested central differences of the pointwise
/// I-field along S with step h.
class MainScalarProbe {
public:
    MainScalarProbe(const NormalizedBerwaldFrame& f, const SprayGeometry& g, double step = 1e-4);

    MainScalar at(const Point& p) const;
    double scalar_at(const Point& p) const;

private:
    FrameEvaluator eval_;
    CompiledExprs scalars_;  // ρ, V(ρ)
    double step_;
};

MainScalar main_scalar(const NormalizedBerwaldFrame& f, const SprayGeometry& g, const Point& p);

}  // namespace spraymet
