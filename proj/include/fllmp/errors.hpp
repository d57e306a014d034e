#pragma once

#include <stdexcept>
#include <string>

namespace fllmp {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Path index outside the scene's raypath list.
class InvalidPath : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// LOS bearing orthogonal to the motion; NLOS/LOS ratio undefined.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

// Discriminator input product has zero magnitude.
class IndeterminatePhase : public Error {
 public:
  using Error::Error;
};

// Closed-form discriminator evaluated exactly at a beta = 1 null.
class SingularPoint : public Error {
 public:
  using Error::Error;
};

// Equal arriving frequencies: no beat period exists.
class ZeroBeat : public Error {
 public:
  using Error::Error;
};

class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, double residual)
      : Error(what), residual_(residual) {}

  /// Change between the last two point-doubling estimates.
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class LossOfLock : public Error {
 public:
  LossOfLock(const std::string& what, double time)
      : Error(what), time_(time) {}

  /// Simulation time (s) at which lock was declared lost.
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace fllmp
