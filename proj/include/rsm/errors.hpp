#ifndef RSM_ERRORS_HPP
#define RSM_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rsm {

/// Broad failure class; the CLI maps each one to an exit code.
enum class ErrorCategory { Config, Data, Numeric, Internal };

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string& what)
    : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

private:
  ErrorCategory category_;
};

#define RSM_DEFINE_ERROR(Name, Category)                                      \
  class Name : public Error {                                                 \
  public:                                                                     \
    explicit Name(const std::string& what)                                    \
      : Error(ErrorCategory::Category, #Name ": " + what) {}                  \
  };

// markov_core
RSM_DEFINE_ERROR(NoUniqueStationary, Numeric)
RSM_DEFINE_ERROR(SingularFundamental, Numeric)
RSM_DEFINE_ERROR(InvalidMatrix, Numeric)
RSM_DEFINE_ERROR(ShapeError, Data)

// topology
RSM_DEFINE_ERROR(ContextTooSmall, Data)
RSM_DEFINE_ERROR(DanglingItem, Data)
RSM_DEFINE_ERROR(InvalidInput, Data)

// data / eval
RSM_DEFINE_ERROR(SchemaError, Data)
RSM_DEFINE_ERROR(IoError, Data)
RSM_DEFINE_ERROR(SplitTooSmall, Data)
RSM_DEFINE_ERROR(DegenerateVariance, Numeric)

// learner / cli
RSM_DEFINE_ERROR(ConfigError, Config)
RSM_DEFINE_ERROR(InternalError, Internal)

#undef RSM_DEFINE_ERROR

class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what)
    : Error(ErrorCategory::Data,
            "ParseError: line " + std::to_string(line) + ": " + what),
      line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class GridBudgetExceeded : public Error {
public:
  GridBudgetExceeded(std::size_t required, std::size_t cap)
    : Error(ErrorCategory::Config,
            "GridBudgetExceeded: grid has " + std::to_string(required) +
              " points, cap is " + std::to_string(cap)),
      required_(required) {}

  /// Cap that would admit this grid.
  std::size_t required() const noexcept { return required_; }

private:
  std::size_t required_;
};

} // namespace rsm

#endif // RSM_ERRORS_HPP
