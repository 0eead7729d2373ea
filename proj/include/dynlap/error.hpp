#pragma once

#include <stdexcept>
#include <string>

namespace dynlap {

// Every failure raised by the library carries the name of the module that
// produced it, e.g. "[transfer] test point escaped target grid from cell 12".
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error("[" + module + "] " + message), module_(std::move(module)) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

}  // namespace dynlap
