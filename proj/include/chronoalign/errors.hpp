// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace chronoalign {

/// Root of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterDomainError : public Error {
 public:
  using Error::Error;
};

/// Truncation bounds sit so far in the tail that rejection sampling gives up.
class InfeasibleBoundsError : public Error {
 public:
  using Error::Error;
};

class EpisodeClosedError : public Error {
 public:
  using Error::Error;
};

class BudgetExceededError : public Error {
 public:
  using Error::Error;
};

class NotFinalizableError : public Error {
 public:
  using Error::Error;
};

/// A record with t_confirm < t_true; the environment can never produce one.
class CorruptedRecordError : public Error {
 public:
  using Error::Error;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

/// Config problems carry the offending field path (and line, for syntax errors).
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class EndpointError : public Error {
 public:
  using Error::Error;
};

class FixtureError : public Error {
 public:
  using Error::Error;
};

}  // namespace chronoalign
