#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spraymet/expr.hpp"
#include "spraymet/forms.hpp"

namespace spraymet::app {

struct NamedResidual {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;

    friend bool operator==(const NamedResidual&, const NamedResidual&) = default;
};

struct ClosednessEvidence {
    std::string kind;
    double max_residual = 0.0;
    double fraction_above_1e3 = 0.0;  // share of samples with residual > 1e-3
    bool symbolically_zero = false;
    std::optional<Point> witness;

    friend bool operator==(const ClosednessEvidence&, const ClosednessEvidence&) = default;
};

struct RankEvidence {
    std::string kind;
    std::size_t rank4 = 0;
    std::size_t rank2 = 0;
    std::vector<Point> witnesses;

    friend bool operator==(const RankEvidence&, const RankEvidence&) = default;
};

struct FramedSample {
    Point point;
    FramedMatrix matrix{};
    int rank = 0;

    friend bool operator==(const FramedSample&, const FramedSample&) = default;
};

struct GridRow {
    Point point;
    double f = 0.0;  // log F
    double F = 0.0;
    std::optional<double> closed_form;

    friend bool operator==(const GridRow&, const GridRow&) = default;
};

struct ReconstructionReport {
    Point base_point;
    std::optional<std::string> closed_form;
    double path_independence = 0.0;
    std::size_t path_pairs = 0;
    double kappa_min = 0.0;
    double kappa_max = 0.0;
    int metric_rank_min = 0;
    int metric_rank_max = 0;
    std::vector<GridRow> grid;
    std::vector<NamedResidual> verification;
    std::vector<NamedResidual> regular_frame;
    /// max |I| over the samples, regular case only.
    std::optional<double> main_scalar_max_abs;

    friend bool operator==(const ReconstructionReport&, const ReconstructionReport&) = default;
};

struct Provenance {
    std::string tool = "spray-metrize";
    std::string version;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    double tol_closed = 0.0;
    double tol_rank = 0.0;
    double tol_quadrature = 0.0;
    double tol_identity = 0.0;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Report {
    std::string name;
    std::string g1;
    std::string g2;
    std::string verdict;
    std::string reason;
    double flatness_min_ratio = 0.0;
    std::optional<ClosednessEvidence> closedness;
    std::optional<RankEvidence> rank;
    std::vector<NamedResidual> identities;
    std::vector<FramedSample> omega_matrix;
    std::optional<ReconstructionReport> reconstruction;
    Provenance provenance;

    friend bool operator==(const Report&, const Report&) = default;
};

/// Canonical JSON: sorted keys, shortest round-trip doubles, two-space indent.
std::string to_json(const Report& r);
Report report_from_json(const std::string& text);

/// Human-readable summary with the Ω frame matrix of the first sample.
std::string to_text(const Report& r);

}  // namespace spraymet::app
