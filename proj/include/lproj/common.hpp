#pragma once

#include <stdexcept>
#include <string>

namespace lproj {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: config 2, estimation 3, identification 4.
struct ingest_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct singular_design_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct estimation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct identification_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* version_string = "0.1.0";

}  // namespace lproj
