#pragma once

#include <stdexcept>
#include <string>

namespace tailcal {

// Failure categories; the CLI maps these onto process exit codes.
enum class ErrorKind {
    config,       // bad configuration / parameter out of range
    range,        // argument outside its documented domain
    grid,         // time value not on the sample grid
    schema,       // dataset schema mismatch
    data,         // unusable or empty input data
    size,         // too few samples for the requested fit
    degeneracy,   // singular / collapsed model
    matrix,       // invalid matrix argument (e.g. non-SPD covariance)
    resolution,   // quantile not resolvable at the requested sample count
    unsupported,  // operation not defined for this model class
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

inline int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::schema:
        case ErrorKind::data:
            return 3;
        case ErrorKind::degeneracy:
        case ErrorKind::matrix:
        case ErrorKind::resolution:
            return 4;
        default:
            return 2;
    }
}

}  // namespace tailcal
