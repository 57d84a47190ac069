#pragma once

#include <stdexcept>
#include <string>

namespace gmmgrid {

// Every precondition or pipeline failure surfaces as this type. `stage` names
// the pipeline step that raised it (empty for direct library calls).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, std::string stage = {})
      : std::runtime_error(what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

}  // namespace detail
}  // namespace gmmgrid
