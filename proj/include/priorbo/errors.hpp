#pragma once

#include <stdexcept>
#include <string>

namespace priorbo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied something invalid. Maps to HTTP 400 / CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not produce a result. Maps to HTTP 500 / exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

#define PRIORBO_DEFINE_ERROR(Name, Base) \
  class Name : public Base {             \
   public:                               \
    using Base::Base;                    \
  }

PRIORBO_DEFINE_ERROR(DimensionMismatch, InputError);
PRIORBO_DEFINE_ERROR(InsufficientData, InputError);
PRIORBO_DEFINE_ERROR(EmptyCandidates, InputError);
PRIORBO_DEFINE_ERROR(NoObservations, InputError);
PRIORBO_DEFINE_ERROR(OutOfBox, InputError);
PRIORBO_DEFINE_ERROR(OutOfDomain, InputError);
PRIORBO_DEFINE_ERROR(NonFiniteValue, InputError);
PRIORBO_DEFINE_ERROR(ConfigError, InputError);
PRIORBO_DEFINE_ERROR(MissingOptimum, InputError);

PRIORBO_DEFINE_ERROR(CholeskyFailure, NumericError);
PRIORBO_DEFINE_ERROR(RejectionBudgetExceeded, NumericError);
PRIORBO_DEFINE_ERROR(NumericFailure, NumericError);

#undef PRIORBO_DEFINE_ERROR

/// Validation failure carrying the offending field path, e.g. "prior.mean".
class ValidationError : public InputError {
 public:
  ValidationError(std::string field, const std::string& message)
      : InputError(field.empty() ? message : field + ": " + message), field_(std::move(field)), message_(message) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string field_;
  std::string message_;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

/// State conflicts: HTTP 409.
class Conflict : public Error {
 public:
  using Error::Error;
};

class PendingSuggestionExists : public Conflict {
 public:
  using Conflict::Conflict;
};

class CampaignArchived : public Conflict {
 public:
  using Conflict::Conflict;
};

}  // namespace priorbo
