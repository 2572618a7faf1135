#pragma once

#include <cstddef>
#include <cstdint>

namespace spraymet {

struct Tolerances {
    double closed = 1e-9;       // dω residual, relative to derivative scale
    double rank = 1e-7;         // σ counts as nonzero when σ >= rank·σ_max
    double quadrature = 1e-10;  // local tolerance of the adaptive line integral
    double identity = 1e-8;     // frame and isotropy identities
    double homogeneity = 1e-8;  // sampled Euler checks
    double flat = 1e-8;         // floor on |ρ| / |y|²
};

struct RunConfig {
    std::size_t samples = 200;
    std::uint64_t seed = 42;
    Tolerances tol;
    unsigned threads = 1;
};

}  // namespace spraymet
