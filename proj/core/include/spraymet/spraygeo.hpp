#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spraymet/config.hpp"
#include "spraymet/expr.hpp"
#include "spraymet/sampling.hpp"

namespace spraymet {

/// S = y^i d/dx^i - 2 G^i d/dy^i. The coefficients are those of the normal
/// form x''^i + 2 G^i(x, x') = 0.
struct Spray {
    Expr g1;
    Expr g2;
    SamplingDomain domain;

    const Expr& g(std::size_t i) const { return i == 0 ? g1 : g2; }
};

struct SprayDiagnostics {
    HomogeneityResult g1;
    HomogeneityResult g2;
    std::size_t samples_checked = 0;
};

/// Checks that both coefficients evaluate on sampled domain points and are
/// 2+-homogeneous. Throws HomogeneityViolation (witness in the message) or
/// EvaluationError.
SprayDiagnostics validate_spray(const Spray& s, const RunConfig& cfg);

/// Nonlinear connection N^i_j = dG^i/dy^j, stored zero-based: n[i][j].
struct Connection {
    std::array<std::array<Expr, 2>, 2> n;
};

Connection connection(const Spray& s);

/// Jacobi endomorphism components R^i_j, zero-based.
struct JacobiEndo {
    std::array<std::array<Expr, 2>, 2> r;
};

/// R^i_j = 2 dG^i/dx^j - S(N^i_j) - N^i_k N^k_j.
JacobiEndo jacobi(const Spray& s, const Connection& c);
JacobiEndo jacobi(const Spray& s);

/// max over samples of |R y|_1 / (max|R^i_j| |y|_1), i.e. Φ(S) = 0.
double jacobi_spray_residual(const JacobiEndo& j, std::span<const Point> samples);

/// Same as jacobi(s) but verifies Φ(S) = 0 on the samples and throws
/// InternalIdentityFailure past tol.
JacobiEndo jacobi(const Spray& s, const Connection& c, std::span<const Point> samples, double tol);

/// Isotropy data R^i_j = ρ δ^i_j - α_j y^i.
///
/// alpha1/alpha2 are the least-squares quotients
///   α_1 = (y^1 R^2_2 - y^2 R^2_1) / |y|²,  α_2 = (y^2 R^1_1 - y^1 R^1_2) / |y|²,
/// which are smooth off y = 0. The axis quotients R^2_2/y^1, -R^2_1/y^2 (and
/// the α_2 pair) are kept for the cross-check.
struct Isotropy {
    Expr rho;
    Expr alpha1;
    Expr alpha2;
    std::array<Expr, 2> alpha1_quotients;
    std::array<Expr, 2> alpha2_quotients;

    const Expr& alpha(std::size_t i) const { return i == 0 ? alpha1 : alpha2; }
};

Isotropy isotropy(const JacobiEndo& j);

struct IsotropyCheck {
    double trace = 0.0;           // ρ vs R^1_1 + R^2_2
    double alpha_of_spray = 0.0;  // α(S) = α_i y^i vs ρ
    double quotients = 0.0;       // least-squares α vs the axis quotients
    double isotropic_form = 0.0;  // R^i_j vs ρ δ^i_j - α_j y^i
    double max() const;
};

/// Sampled certificate that the spray is isotropic with the given data. The
/// axis quotients are only compared where |y^k| >= 0.1 |y|.
IsotropyCheck check_isotropy(const Isotropy& iso, const JacobiEndo& j, std::span<const Point> samples);

/// isotropy(j) followed by check_isotropy; throws IsotropyInconsistency past tol.
Isotropy isotropy(const JacobiEndo& j, std::span<const Point> samples, double tol);

struct FlatnessResult {
    bool non_flat = false;
    /// min over samples of |ρ| / (|y|² + max|R^i_j|).
    double min_ratio = 0.0;
    std::optional<Point> witness;
};

/// NonFlat iff |ρ| >= tol·|y|²·(1 + max|R^i_j|/|y|²) at every sample.
FlatnessResult flatness_probe(const Isotropy& iso, const JacobiEndo& j, std::span<const Point> samples,
                              double tol);

/// Everything derived from the spray coefficients, built once.
struct SprayGeometry {
    Spray spray;
    Connection conn;
    JacobiEndo jac;
    Isotropy iso;
};

SprayGeometry analyze(const Spray& s);

struct LadderEntry {
    std::string name;
    int degree = 0;
    double residual = 0.0;
};

/// Euler residuals for G (2), N (1), R (2), α (1), ρ (2).
std::vector<LadderEntry> homogeneity_ladder(const SprayGeometry& g, std::span<const Point> samples);

}  // namespace spraymet
