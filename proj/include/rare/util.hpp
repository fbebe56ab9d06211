#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace rare {

std::uint64_t splitmix64(std::uint64_t x);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

/// Worker count: RARE_SAMPLER_THREADS if set (>= 1), else hardware concurrency.
std::size_t thread_limit();

/// Runs fn(i) for i in [0, n) on up to thread_limit() threads. The first
/// exception thrown by any task is rethrown after all tasks finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
double parse_double(std::string_view s);
long parse_long(std::string_view s);

}  // namespace rare
