#include "pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "spraymet/metrize.hpp"
#include "spraymet/parallel.hpp"

namespace spraymet::app {

namespace {

constexpr std::size_t kMatrixSamples = 3;
constexpr std::size_t kPathPairs = 20;
constexpr std::size_t kDefaultGrid = 8;

NamedResidual named(std::string name, double residual, double tol) {
    return NamedResidual{std::move(name), residual, tol, std::isfinite(residual) && residual <= tol};
}

std::string closed_kind(ClosedKind k) {
    switch (k) {
        case ClosedKind::Closed: return "Closed";
        case ClosedKind::NotClosed: return "NotClosed";
        case ClosedKind::GrayZone: return "GrayZone";
    }
    return "GrayZone";
}

std::string rank_kind(RankKind k) {
    switch (k) {
        case RankKind::Rank4: return "Rank4";
        case RankKind::Rank2: return "Rank2";
        case RankKind::Mixed: return "Mixed";
    }
    return "Mixed";
}

std::vector<NamedResidual> identity_suite(const Classification& cls, const RunConfig& cfg) {
    const auto& g = cls.geo;
    const auto& samples = cls.samples;
    const double tol = cfg.tol.identity;
    std::vector<NamedResidual> out;
    out.push_back(named("phi_of_S", jacobi_spray_residual(g.jac, samples), tol));
    const IsotropyCheck iso = check_isotropy(g.iso, g.jac, samples);
    out.push_back(named("isotropy_trace", iso.trace, tol));
    out.push_back(named("isotropy_alpha_of_S", iso.alpha_of_spray, tol));
    out.push_back(named("isotropy_quotients", iso.quotients, tol));
    out.push_back(named("isotropy_form", iso.isotropic_form, tol));
    for (const LadderEntry& e : homogeneity_ladder(g, samples))
        out.push_back(named("homogeneity_" + e.name + "_deg" + std::to_string(e.degree), e.residual, cfg.tol.homogeneity));
    if (!cls.verdict.flatness.non_flat) return out;

    for (const IdentityResult& r : verify_spray_commutations(cls.frame, g, true, samples, tol))
        out.push_back(named("commutation " + r.name, r.residual, tol));
    const OmegaPattern pat = omega_pattern(cls.big_omega, cls.frame, g, samples);
    out.push_back(named("omega_matrix_zeros", pat.zeros, tol));
    out.push_back(named("omega_matrix_S_C", pat.s_c, tol));
    out.push_back(named("omega_matrix_H_V", pat.h_v, tol));
    const NormalizationReport norm = normalization_checks(cls.omega, samples);
    out.push_back(named("omega_contraction_C", norm.contraction, 1e-10));
    out.push_back(named("omega_lie_C", norm.lie, 1e-10));
    return out;
}

ReconstructionReport reconstruction(const JobSpec& job, const Classification& cls, const RunConfig& cfg) {
    const Point p0 = job.base_point ? *job.base_point : default_base_point(cls.geo.spray.domain);
    const FinslerCandidate cand = reconstruct(cls, p0, cfg);

    ReconstructionReport rep;
    rep.base_point = p0;
    if (cand.closed_form()) rep.closed_form = to_string(*cand.closed_form());

    std::vector<Point> grid = job.grid;
    if (grid.empty()) {
        grid.push_back(p0);
        const std::size_t n = std::min(kDefaultGrid, cls.samples.size());
        grid.insert(grid.end(), cls.samples.begin(), cls.samples.begin() + static_cast<std::ptrdiff_t>(n));
    }
    rep.grid.resize(grid.size());
    std::optional<CompiledExprs> closed;
    if (cand.closed_form()) closed.emplace(std::initializer_list<Expr>{*cand.closed_form()});
    parallel_for(grid.size(), cfg.threads, [&](std::size_t i) {
        GridRow& row = rep.grid[i];
        row.point = grid[i];
        row.f = cand.f(grid[i]);
        row.F = std::exp(row.f);
        if (closed) {
            std::array<double, 1> v{};
            if (closed->try_evaluate(grid[i], v)) row.closed_form = v[0];
        }
    });

    std::vector<std::pair<Point, Point>> pairs;
    for (std::size_t i = 0; i + 1 < cls.samples.size() && pairs.size() < kPathPairs; i += 2)
        pairs.emplace_back(cls.samples[i], cls.samples[i + 1]);
    const PathIndependence pi = path_independence_check(cand, pairs);
    rep.path_independence = pi.max_discrepancy;
    rep.path_pairs = pi.pairs;

    const VerificationReport ver = verify_finsler(cand, cls, cfg);
    for (const Check& c : ver.checks) rep.verification.push_back({c.name, c.residual, c.tolerance, c.pass});
    rep.verification.push_back(named("path_independence", pi.max_discrepancy, 1e-8));
    if (!ver.kappa.empty()) {
        const auto [kmin, kmax] = std::minmax_element(ver.kappa.begin(), ver.kappa.end());
        rep.kappa_min = *kmin;
        rep.kappa_max = *kmax;
        const auto [rmin, rmax] = std::minmax_element(ver.metric_rank.begin(), ver.metric_rank.end());
        rep.metric_rank_min = *rmin;
        rep.metric_rank_max = *rmax;
    }

    if (cls.verdict.kind == VerdictKind::RegularMetrizable) {
        const NormalizedBerwaldFrame nf = finsler_normalize(cls, cand);
        const RegularFrameReport r = regular_frame_checks(nf, cls, cand, cls.samples, cfg.threads);
        rep.regular_frame = {named("nabla_H", r.nabla_h, 1e-7),
                             named("nabla_V", r.nabla_v, 1e-7),
                             named("bracket_SH_rhoV", r.bracket_sh, cfg.tol.identity),
                             named("bracket_SV_minusH", r.bracket_sv, cfg.tol.identity),
                             named("length_H_over_S", r.length_ratio, cfg.tol.identity),
                             named("bracket_HV_cS", r.c_s, 1e-6),
                             named("main_scalar_pde", r.main_scalar_pde, 1e-4)};
        rep.main_scalar_max_abs = r.main_scalar;
    }
    return rep;
}

}  // namespace

Report run(const JobSpec& job, unsigned threads) {
    const Spray spray = job.spray();
    RunConfig cfg = job.run;
    cfg.threads = std::max(1u, threads);

    const Classification cls = classify(spray, cfg);
    const Verdict& v = cls.verdict;

    Report r;
    r.name = job.name;
    r.g1 = to_string(spray.g1);
    r.g2 = to_string(spray.g2);
    r.verdict = std::string(to_string(v.kind));
    r.reason = v.reason;
    r.flatness_min_ratio = v.flatness.min_ratio;
    r.provenance.version = SPRAYMET_VERSION;
    r.provenance.seed = cfg.seed;
    r.provenance.samples = cfg.samples;
    r.provenance.tol_closed = cfg.tol.closed;
    r.provenance.tol_rank = cfg.tol.rank;
    r.provenance.tol_quadrature = cfg.tol.quadrature;
    r.provenance.tol_identity = cfg.tol.identity;

    if (v.closedness) {
        ClosednessEvidence c;
        c.kind = closed_kind(v.closedness->kind);
        c.max_residual = v.closedness->max_residual;
        c.fraction_above_1e3 = v.closedness->fraction_above(1e-3);
        c.symbolically_zero = v.closedness->symbolically_zero;
        c.witness = v.closedness->witness;
        r.closedness = c;
    }
    if (v.rank) {
        RankEvidence e;
        e.kind = rank_kind(v.rank->kind);
        for (const RankSample& s : v.rank->samples) {
            e.rank4 += s.matrix_rank == 4;
            e.rank2 += s.matrix_rank == 2;
        }
        e.witnesses = v.rank->witnesses;
        r.rank = e;
        for (std::size_t i = 0; i < std::min(kMatrixSamples, cls.samples.size()); ++i) {
            const Point& p = cls.samples[i];
            r.omega_matrix.push_back({p, frame_matrix(cls.big_omega, cls.frame, p), v.rank->samples[i].matrix_rank});
        }
    }
    r.identities = identity_suite(cls, cfg);

    if (job.reconstruct && v.metrizable()) r.reconstruction = reconstruction(job, cls, cfg);
    return r;
}

int exit_code(const Report& r) {
    const auto k = verdict_from_string(r.verdict);
    if (!k) return kExitInputError;
    switch (*k) {
        case VerdictKind::RegularMetrizable:
        case VerdictKind::DegenerateMetrizable: return 0;
        case VerdictKind::NotMetrizable: return 1;
        case VerdictKind::FlatOutOfScope:
        case VerdictKind::Indeterminate: return 2;
    }
    return 2;
}

}  // namespace spraymet::app
