#pragma once

#include <stdexcept>
#include <string>

namespace seplab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define SEPLAB_ERROR(Name)                                              \
    struct Name : Error {                                               \
        using Error::Error;                                             \
        const char* kind() const noexcept override { return #Name; }    \
    }

SEPLAB_ERROR(ParseError);
SEPLAB_ERROR(InvalidModel);
SEPLAB_ERROR(NonRealValue);
SEPLAB_ERROR(SaddleNotHyperbolic);
SEPLAB_ERROR(NonConvergent);
SEPLAB_ERROR(OverlappingZones);
SEPLAB_ERROR(SmallDivisor);
SEPLAB_ERROR(QuadratureBudgetExceeded);
SEPLAB_ERROR(OutOfNeighborhood);
SEPLAB_ERROR(NoAdmissibleTime);
SEPLAB_ERROR(WindowViolation);
SEPLAB_ERROR(NonConvergence);
SEPLAB_ERROR(WrongZone);
SEPLAB_ERROR(ZeroK0);
SEPLAB_ERROR(StepFailure);
SEPLAB_ERROR(OutOfCollar);
SEPLAB_ERROR(NotInDomain);
SEPLAB_ERROR(InsufficientData);
SEPLAB_ERROR(InvalidArgument);

#undef SEPLAB_ERROR

}  // namespace seplab
