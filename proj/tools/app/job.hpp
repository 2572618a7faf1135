#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spraymet/config.hpp"
#include "spraymet/sampling.hpp"
#include "spraymet/spraygeo.hpp"

namespace spraymet::app {

enum class ReportFormat { Json, Text };

/// One metrizability job. See docs/formats.md for the file layout.
struct JobSpec {
    std::string name = "job";
    std::string g1;
    std::string g2;
    Interval x1{-1.0, 1.0};
    Interval x2{-1.0, 1.0};
    Interval y_radius{0.2, 2.0};
    std::optional<Interval> y_cone_deg;
    std::vector<std::string> constraints;
    double margin = 1e-6;
    RunConfig run;
    std::optional<Point> base_point;
    std::vector<Point> grid;
    bool reconstruct = false;
    ReportFormat report = ReportFormat::Json;

    /// Parses the expressions and constraints and validates the domain.
    /// Throws ParseError or DomainError.
    Spray spray() const;
};

/// Throws std::invalid_argument (malformed document) or the errors of
/// JobSpec::spray() on invalid content.
JobSpec parse_job(std::string_view text);
JobSpec load_job(const std::filesystem::path& path);

/// Grid file: one point per line, four numbers; '#' starts a comment.
std::vector<Point> parse_grid(std::string_view text);
std::vector<Point> load_grid(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace spraymet::app
