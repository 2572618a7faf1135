#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pipeline.hpp"

namespace app = spraymet::app;

int main(int argc, char** argv) {
    CLI::App cli{"Finsler metrizability of two-dimensional sprays", "spray-metrize"};
    cli.set_version_flag("--version", std::string("spray-metrize ") + SPRAYMET_VERSION);
    cli.require_subcommand(1);

    std::string input, grid, out, format;
    std::optional<std::size_t> samples;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol_closed;
    bool reconstruct = false;
    unsigned threads = 1;

    CLI::App* run = cli.add_subcommand("run", "Classify a spray and optionally reconstruct F");
    run->add_option("--input", input, "Job file (JSON)")->required();
    run->add_option("--samples", samples, "Number of domain samples");
    run->add_option("--seed", seed, "Sampler seed");
    run->add_option("--tol-closed", tol_closed, "Closedness tolerance")->check(CLI::PositiveNumber);
    run->add_option("--report", format, "Output format")->check(CLI::IsMember({"json", "text"}));
    run->add_flag("--reconstruct", reconstruct, "Reconstruct and verify F when metrizable");
    run->add_option("--grid", grid, "File of points (x1 x2 y1 y2 per line) for the F table");
    run->add_option("--out", out, "Write the report here instead of stdout");
    run->add_option("--threads", threads, "Worker threads for per-sample work")->check(CLI::Range(1u, 256u));

    try {
        cli.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return cli.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return cli.exit(e);
    } catch (const CLI::ParseError& e) {
        cli.exit(e);
        return app::kExitInputError;
    }

    try {
        app::JobSpec job = app::load_job(input);
        if (samples) {
            if (*samples == 0) throw std::invalid_argument("--samples must be positive");
            job.run.samples = *samples;
        }
        if (seed) job.run.seed = *seed;
        if (tol_closed) job.run.tol.closed = *tol_closed;
        if (reconstruct) job.reconstruct = true;
        if (!grid.empty()) job.grid = app::load_grid(grid);
        if (format == "json") job.report = app::ReportFormat::Json;
        if (format == "text") job.report = app::ReportFormat::Text;

        const app::Report report = app::run(job, threads);
        const std::string bytes = job.report == app::ReportFormat::Json ? app::to_json(report) : app::to_text(report);
        if (out.empty()) {
            std::cout << bytes;
        } else {
            std::ofstream f(out, std::ios::binary);
            if (!f) throw std::invalid_argument("cannot write " + out);
            f << bytes;
        }
        return app::exit_code(report);
    } catch (const std::exception& e) {
        std::cerr << "spray-metrize: error: " << e.what() << "\n";
        return app::kExitInputError;
    }
}
