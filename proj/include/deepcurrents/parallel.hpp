#pragma once

#include <cstddef>
#include <functional>

namespace deepcurrents {

/// Worker cap for batch evaluation, grid sampling and marching cubes.
/// Defaults to 1; results never depend on the value.
void set_thread_count(int threads);
int thread_count();

/// Runs body(chunk) for chunk in [0, chunks). Chunks are claimed by at most
/// thread_count() workers; callers that reduce must write per-chunk
/// buffers and combine them in chunk order.
void parallel_for_chunks(std::size_t chunks, const std::function<void(std::size_t)>& body);

/// Training allocates and frees multi-megabyte temporaries every step. With
/// glibc's defaults those go through mmap and are page-faulted in afresh
/// each time, which costs more than the arithmetic for small networks. This
/// raises the mmap and trim thresholds once per process (no-op elsewhere).
void retain_large_allocations();

}  // namespace deepcurrents
