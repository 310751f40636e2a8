#pragma once

#include <cstddef>
#include <functional>

namespace qml {

// Runs fn(i) for i in [0, n) across worker threads. Each call must write
// only to caller-owned slot i, so results are independent of scheduling;
// reductions stay with the caller, in index order. Thread count defaults
// to the hardware concurrency and can be capped with QMLLAB_THREADS.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace qml
