#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dcls {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or parameter outside its domain (theta <= -1, |t| > 1, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// A configured enumeration, quadrature or member budget was exceeded.
class BudgetExceeded : public Error {
public:
  BudgetExceeded(const std::string& what, std::uint64_t reached)
      : Error(what + " (reached " + std::to_string(reached) + ")"), reached_(reached) {}

  std::uint64_t reached() const noexcept { return reached_; }

private:
  std::uint64_t reached_;
};

/// Gramian smallest eigenvalue fell below the rank-deficiency threshold.
class RankDeficient : public Error {
public:
  explicit RankDeficient(double min_eig)
      : Error("rank-deficient Gramian: min eigenvalue " + std::to_string(min_eig)),
        min_eig_(min_eig) {}

  double min_eig() const noexcept { return min_eig_; }

private:
  double min_eig_;
};

class MalformedEncoding : public Error {
public:
  using Error::Error;
};

/// Shapes of inputs do not agree (sample dimension vs index support, ...).
class DimensionMismatch : public Error {
public:
  using Error::Error;
};

class ConvergenceError : public Error {
public:
  using Error::Error;
};

} // namespace dcls
