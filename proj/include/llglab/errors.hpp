#pragma once

#include <stdexcept>
#include <string>

namespace llglab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// The frame construction would be singular: m came too close to -e3.
class PoleProximity : public Error {
public:
  PoleProximity(std::size_t index, double m3)
      : Error("spin field enters the pole-exclusion cap at grid index " + std::to_string(index) +
              " (m3 = " + std::to_string(m3) + ")"),
        index_(index), m3_(m3) {}
  std::size_t index() const noexcept { return index_; }
  double m3() const noexcept { return m3_; }

private:
  std::size_t index_;
  double m3_;
};

/// Picard increments grew for consecutive iterations (data too large).
class NonContraction : public Error {
public:
  NonContraction(int iteration, double increment)
      : Error("Picard iteration does not contract (iteration " + std::to_string(iteration) +
              ", increment " + std::to_string(increment) + ")"),
        iteration_(iteration), increment_(increment) {}
  int iteration() const noexcept { return iteration_; }
  double increment() const noexcept { return increment_; }

private:
  int iteration_;
  double increment_;
};

class BlowupSuspected : public Error {
public:
  BlowupSuspected(double last_good_time, const std::string& why)
      : Error("blow-up suspected after t = " + std::to_string(last_good_time) + ": " + why),
        last_good_time_(last_good_time) {}
  double last_good_time() const noexcept { return last_good_time_; }

private:
  double last_good_time_;
};

class MollificationTooWeak : public Error {
public:
  MollificationTooWeak(double min_norm)
      : Error("mollified field leaves the annulus 3/4 <= |m| <= 1 (min |m| = " +
              std::to_string(min_norm) + ")"),
        min_norm_(min_norm) {}
  double min_norm() const noexcept { return min_norm_; }

private:
  double min_norm_;
};

/// Trajectory does not cover the requested space-time region.
class CoverageError : public Error {
public:
  using Error::Error;
};

class SnapshotError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  ConfigError(const std::string& where, const std::string& what) : Error(where + ": " + what) {}
};

} // namespace llglab
