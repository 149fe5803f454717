#pragma once

#include <functional>
#include <string>
#include <vector>

namespace spinepatch {

// Runs fn(i) for i in [0, n) on up to `jobs` worker threads. Work items must
// be independent; exceptions are collected and the first one is rethrown
// after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

void ensure_dir(const std::string& path);

}  // namespace spinepatch
