#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace execopt {

// Root of every error the library throws. `code()` is a stable short name
// used in persisted diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define EXECOPT_DEFINE_ERROR(Name, Base)                                  \
  class Name : public Base {                                              \
   public:                                                                \
    explicit Name(const std::string& message) : Base(#Name, message) {}   \
                                                                          \
   protected:                                                             \
    Name(std::string code, const std::string& message)                    \
        : Base(std::move(code), message) {}                               \
  };

// Document / schema layer.
EXECOPT_DEFINE_ERROR(MalformedDocument, Error)
EXECOPT_DEFINE_ERROR(SchemaViolation, Error)

class UndeclaredSymbol : public Error {
 public:
  explicit UndeclaredSymbol(std::string symbol)
      : Error("UndeclaredSymbol", "undeclared symbol '" + symbol + "'"),
        symbol_(std::move(symbol)) {}
  const std::string& symbol() const noexcept { return symbol_; }

 private:
  std::string symbol_;
};

// Expression language.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, std::vector<std::string> expected,
              const std::string& detail);
  std::size_t offset() const noexcept { return offset_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

EXECOPT_DEFINE_ERROR(EvaluationError, Error)
EXECOPT_DEFINE_ERROR(UnboundIdentifier, EvaluationError)
EXECOPT_DEFINE_ERROR(DivisionByZero, EvaluationError)
EXECOPT_DEFINE_ERROR(IndexOutOfRange, EvaluationError)
EXECOPT_DEFINE_ERROR(MissingVariable, EvaluationError)

// Numerics.
EXECOPT_DEFINE_ERROR(DimensionMismatch, Error)
EXECOPT_DEFINE_ERROR(ZeroVector, Error)

// Memory store.
EXECOPT_DEFINE_ERROR(EmptyStore, Error)

// MBR.
EXECOPT_DEFINE_ERROR(MissingEmbedding, Error)
EXECOPT_DEFINE_ERROR(WeightMismatch, Error)

// Providers.
EXECOPT_DEFINE_ERROR(ProviderError, Error)
EXECOPT_DEFINE_ERROR(ProviderUnavailable, ProviderError)
EXECOPT_DEFINE_ERROR(RateLimited, ProviderError)
EXECOPT_DEFINE_ERROR(ContractViolation, Error)

// Configuration and harness.
EXECOPT_DEFINE_ERROR(ConfigError, Error)
EXECOPT_DEFINE_ERROR(EmptySuite, Error)

#undef EXECOPT_DEFINE_ERROR

}  // namespace execopt
