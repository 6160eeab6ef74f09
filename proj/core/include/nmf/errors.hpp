#pragma once

#include <stdexcept>
#include <string>

namespace nmf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tilt (gamma1, gamma2) does not define a finite measure for the prior.
class NonNormalizable : public Error {
 public:
  using Error::Error;
};

/// Mean parameter outside the support interval of the prior.
class OutOfSupport : public Error {
 public:
  using Error::Error;
};

/// Operation needs a strongly convex effective penalty and none was certified.
class NotConvexCertified : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

/// The b-update of the fixed-point map left the half line b > 0.
class NonPositiveB : public Error {
 public:
  using Error::Error;
};

class VerificationFailed : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class NotGaussianPrior : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace nmf
