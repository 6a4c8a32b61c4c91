#pragma once

#include <cstddef>
#include <functional>

namespace hsi {

// Runs body(i) for i in [0, n) over up to `threads` workers. Each index is
// handled exactly once, so callers that write only to slot i get results
// independent of scheduling. threads == 0 picks hardware concurrency.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

}  // namespace hsi
