#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace tlab {

// Gauss-Legendre nodes and weights on [a, b].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n, double a, double b);

// Threaded index loop with deterministic output: fn(i) must write only to
// slot i of caller-owned storage. Chunking is fixed by n alone, so results
// do not depend on the thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

} // namespace tlab
