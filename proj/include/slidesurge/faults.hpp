#pragma once

#include <stdexcept>
#include <string>

namespace slidesurge {

/// Raised when a conservative update loses or gains more mass than the
/// per-step tolerance allows (indicates a scheme or scenario defect, not a
/// recoverable condition).
class ConservationFault : public std::runtime_error {
 public:
  explicit ConservationFault(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace slidesurge
