#pragma once

#include <stdexcept>
#include <string>

namespace uniesn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on arguments was violated (dimension mismatch, value
/// outside its admissible range, window too short, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A network fit could not reach its tolerance. `achieved` is the best
/// sampled sup error that was observed.
class FitError : public Error {
public:
    FitError(const std::string& what, double achieved, int width)
        : Error(what), achieved_(achieved), width_(width) {}

    double achieved() const noexcept { return achieved_; }
    int width() const noexcept { return width_; }

private:
    double achieved_;
    int width_;
};

/// A construction pipeline stage failed. The stage tag names the step
/// ("choose_K", "fit_G", "compute_c", "fit_identity", "verify_chain",
/// "assemble", "budget").
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace uniesn
