#pragma once

#include <stdexcept>
#include <string>

namespace ebethe {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// argument within the pole tolerance of the period lattice (or of another singular point)
class PoleError : public Error {
 public:
  using Error::Error;
};

// argument too far from the real axis for a safe quasi-periodic reduction
class RangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SeedTooCoarse : public Error {
 public:
  using Error::Error;
};

class ResidueViolation : public Error {
 public:
  using Error::Error;
};

class DegenerateMultipliers : public Error {
 public:
  using Error::Error;
};

class MultipleRoot : public Error {
 public:
  using Error::Error;
};

class InvolutionMismatch : public Error {
 public:
  using Error::Error;
};

// the root counter could not account for all zeros of a function in a cell
class RootCountError : public Error {
 public:
  using Error::Error;
};

// some subset of a fiber enumeration failed to produce a certified point
class IncompleteFiber : public Error {
 public:
  using Error::Error;
};

}  // namespace ebethe
