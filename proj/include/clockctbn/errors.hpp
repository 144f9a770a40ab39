#ifndef CLOCKCTBN_ERRORS_HPP
#define CLOCKCTBN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace clockctbn {

/// Malformed model, parameter table or file contents.
class ModelError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidTrajectory : public std::runtime_error {
public:
  explicit InvalidTrajectory(const std::string& what)
      : std::runtime_error("invalid trajectory: " + what) {}
};

/// Every node has zero hazard; the process cannot leave its current state.
class StalledProcess : public std::runtime_error {
public:
  explicit StalledProcess(const std::string& what) : std::runtime_error("stalled process: " + what) {}
};

class InsufficientData : public std::runtime_error {
public:
  explicit InsufficientData(const std::string& what)
      : std::runtime_error("insufficient data: " + what) {}
};

/// Quadrature failed to reach its tolerance within the refinement budget.
class IntegrationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace clockctbn

#endif  // CLOCKCTBN_ERRORS_HPP
