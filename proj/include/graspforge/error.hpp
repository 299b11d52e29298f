#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace graspforge {

/// Domain error tagged with the name of its failure kind ("DegenerateInput",
/// "OpenMesh", "NoCandidates", ...). The CLI reports kind() verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

}  // namespace graspforge
