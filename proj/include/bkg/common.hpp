#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bkg {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rvec = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;

enum class ErrorCode {
    InvalidEdge,
    EmptyGraph,
    DimensionMismatch,
    HermiticityViolation,
    RankDeficient,
    SingularMatrix,
    RankAmbiguous,
    SingularAtK,
    ParameterOutOfRange,
    ToleranceTooCoarse,
    RangeExceeded,
    InsufficientData,
    TailBoundExceeded,
    ConditionViolated,
    ConvergenceFailure,
    Pole,
    ParseError,
    ValidationError,
    ComputeError,
};

// Stable upper-case identifier, used in machine-readable error output.
const char* code_name(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace bkg
