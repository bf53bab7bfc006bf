#pragma once

#include <stdexcept>
#include <string>

namespace mqg {

// Raised for every contract violation surfaced by the toolkit (bad input files,
// failed preconditions, infeasible configurations).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mqg
