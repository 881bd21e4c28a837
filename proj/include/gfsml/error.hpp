#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gfsml {

enum class Errc {
  io = 1,
  parse = 2,
  invalid = 3,
  infeasible = 4,
  internal = 5,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Episode generation ran out of eligible examples for a class.
class EpisodeInfeasible : public Error {
 public:
  EpisodeInfeasible(std::string cls, std::int64_t needed, std::int64_t available,
                    const std::string& prefix = "")
      : Error(Errc::infeasible,
              prefix + "episode infeasible: class '" + cls + "' needs " +
                  std::to_string(needed) + " more examples, " +
                  std::to_string(available) + " available"),
        cls_(std::move(cls)),
        needed_(needed),
        available_(available) {}

  const std::string& cls() const noexcept { return cls_; }
  std::int64_t needed() const noexcept { return needed_; }
  std::int64_t available() const noexcept { return available_; }

 private:
  std::string cls_;
  std::int64_t needed_;
  std::int64_t available_;
};

}  // namespace gfsml
