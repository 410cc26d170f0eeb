#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace tnresp {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr cplx I_UNIT{0.0, 1.0};

// Base for all engine errors. Subclasses map onto CLI exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller violated a documented precondition (bad dims, rank cap, leak, ...).
struct PreconditionError : Error {
    using Error::Error;
};

// Configuration text could not be parsed.
struct ConfigError : Error {
    using Error::Error;
};

// A numerical invariant the engine guarantees was breached at run time.
struct NumericalError : Error {
    using Error::Error;
};

inline double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace tnresp
