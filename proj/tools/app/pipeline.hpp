#pragma once

#include "job.hpp"
#include "report.hpp"

namespace spraymet::app {

/// Runs the decision procedure, and the reconstruction and verification
/// battery when the job asks for it. The report does not depend on
/// `threads`.
Report run(const JobSpec& job, unsigned threads = 1);

/// 0 metrizable, 1 not metrizable, 2 indeterminate or flat.
int exit_code(const Report& r);

inline constexpr int kExitInputError = 3;

}  // namespace spraymet::app
