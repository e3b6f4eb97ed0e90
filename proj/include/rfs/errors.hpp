#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rfs
{

/// Mixture whose total weight is not positive.
class DegenerateMixtureError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// Shapes of vectors/matrices do not agree.
class DimensionMismatchError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix that must be inverted (innovation covariance, etc.) is singular.
class SingularMatrixError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Two labels collide where uniqueness is required.
class LabelCollisionError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Fusion produced no hypothesis with a representable weight.
///
/// Carries the numbers a caller needs to decide what to do next.
class IncompatiblePosteriorsError : public std::runtime_error
{
public:
  struct Payload
  {
    double log_normalizer = 0.0;
    std::size_t feasible_pairs = 0;
    std::size_t hypotheses = 0;
  };

  IncompatiblePosteriorsError(std::string const& what, Payload payload)
    : std::runtime_error(what), payload_(payload)
  {
  }

  [[nodiscard]] Payload const& payload() const noexcept { return payload_; }

private:
  Payload payload_;
};

/// Discretization grid does not capture enough probability mass.
class CoverageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Conditional label distribution queried where the unlabeled marginal is zero.
class UndefinedConditionalError : public std::domain_error
{
public:
  using std::domain_error::domain_error;
};

/// Malformed or schema-violating input file / configuration.
class SchemaError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

}  // namespace rfs
