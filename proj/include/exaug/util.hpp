#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace exaug {

/// Writes via a temp file in the same directory, then renames into place.
void atomic_write_file(const std::string& path, const std::string& content);

/// Worker count: the EXAUG_THREADS environment variable overrides the
/// requested value; zero falls back to hardware concurrency.
unsigned resolve_threads(unsigned requested);

/// Runs fn(0..count-1) on up to `threads` workers. Results must be written
/// to pre-sized slots so the output order is independent of scheduling.
void parallel_for_index(std::size_t count, unsigned threads,
                        const std::function<void(std::size_t)>& fn);

} // namespace exaug
