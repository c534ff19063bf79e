#pragma once

#include <cstdint>

namespace tenkit {

/// Multiply-add tally filled in by instrumented kernels. Pass nullptr to skip counting.
struct OpCounter {
  std::int64_t madds = 0;

  void add(std::int64_t n) { madds += n; }
};

inline void count(OpCounter* c, std::int64_t n) {
  if (c) c->add(n);
}

}  // namespace tenkit
