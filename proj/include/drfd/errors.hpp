#ifndef DRFD_ERRORS_HPP
#define DRFD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace drfd {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define DRFD_DEFINE_ERROR(Name)                                  \
    struct Name : Error {                                        \
        explicit Name(const std::string& msg) : Error(msg) {}    \
    }

// linalg
DRFD_DEFINE_ERROR(InvalidInput);
DRFD_DEFINE_ERROR(NotSymmetric);
DRFD_DEFINE_ERROR(SingularB);
DRFD_DEFINE_ERROR(NotPsd);
DRFD_DEFINE_ERROR(SingularInput);
DRFD_DEFINE_ERROR(ZeroMatrix);

// ambiguity
DRFD_DEFINE_ERROR(InsufficientData);
DRFD_DEFINE_ERROR(DegenerateCovariance);
DRFD_DEFINE_ERROR(ZeroWidthAxis);
DRFD_DEFINE_ERROR(InvalidAmbiguity);

// bounds
DRFD_DEFINE_ERROR(InvalidAlpha);
DRFD_DEFINE_ERROR(InvalidBranch);

// conic
DRFD_DEFINE_ERROR(InvalidProblem);
struct SolverError : Error {
    explicit SolverError(const std::string& msg, std::string status = "")
        : Error(msg), status(std::move(status)) {}
    std::string status;
};

// design
DRFD_DEFINE_ERROR(DegenerateFaultDirection);
DRFD_DEFINE_ERROR(SingularResidualCovariance);
DRFD_DEFINE_ERROR(DesignFailed);

// sysmodel
DRFD_DEFINE_ERROR(NotObservable);
DRFD_DEFINE_ERROR(NoParityVectors);
DRFD_DEFINE_ERROR(InvalidConfig);

// verify
DRFD_DEFINE_ERROR(CalibrationFailed);
DRFD_DEFINE_ERROR(InvalidDataset);

// io
DRFD_DEFINE_ERROR(IoError);
DRFD_DEFINE_ERROR(ParseError);

#undef DRFD_DEFINE_ERROR

}  // namespace drfd

#endif  // DRFD_ERRORS_HPP
