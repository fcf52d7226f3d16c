#include "dormancy/parallel.hpp"

#include <cstdlib>
#include <string>

#include "dormancy/errors.hpp"

namespace dormancy {

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DORMANCY_LAB_THREADS"); env && *env) {
    try {
      const long value = std::stol(env);
      if (value > 0) return static_cast<unsigned>(value);
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("DORMANCY_LAB_THREADS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace dormancy
