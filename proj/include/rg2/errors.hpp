#pragma once

#include <stdexcept>
#include <string>

namespace rg2 {

// Every failure the library reports derives from Error; kind() is the
// machine-readable tag written into CLI reports.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

#define RG2_ERROR_KIND(Name, tag)                                   \
    class Name : public Error {                                     \
    public:                                                         \
        using Error::Error;                                         \
        const char* kind() const noexcept override { return tag; }  \
    };

RG2_ERROR_KIND(InvalidGeometry, "invalid-geometry")
RG2_ERROR_KIND(ResolutionError, "resolution")
RG2_ERROR_KIND(SamplingError, "sampling")
RG2_ERROR_KIND(InvalidScale, "invalid-scale")
RG2_ERROR_KIND(RepresentationError, "representation")
RG2_ERROR_KIND(InvalidCoupling, "invalid-coupling")
RG2_ERROR_KIND(SolverError, "linear-solver")
RG2_ERROR_KIND(StepSizeError, "step-size")
RG2_ERROR_KIND(PositivityError, "positivity")
RG2_ERROR_KIND(NotParabolic, "not-parabolic")
RG2_ERROR_KIND(BranchError, "branch")
RG2_ERROR_KIND(ConvergenceError, "convergence")
RG2_ERROR_KIND(GaugeError, "gauge")
RG2_ERROR_KIND(AlignmentError, "alignment")
RG2_ERROR_KIND(InsufficientData, "insufficient-data")
RG2_ERROR_KIND(UnsupportedCase, "unsupported")
RG2_ERROR_KIND(ConfigError, "config")

#undef RG2_ERROR_KIND

} // namespace rg2
