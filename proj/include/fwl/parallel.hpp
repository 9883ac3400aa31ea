#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace fwl {

int thread_count();
void set_thread_count(int n);

inline constexpr std::size_t kDefaultChunk = 8192;

// Runs fn(chunk_index, begin, end) over [0, n) in fixed-size chunks.
// Chunk boundaries depend only on n and chunk_size, never on the worker
// count, which is what keeps reductions byte-identical across --threads.
void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

template <class T, class ChunkFn>
std::vector<T> chunk_map(std::size_t n, std::size_t chunk_size, ChunkFn&& fn) {
  std::size_t chunks = n ? (n + chunk_size - 1) / chunk_size : 0;
  std::vector<T> parts(chunks);
  parallel_chunks(n, chunk_size, [&](std::size_t ci, std::size_t b, std::size_t e) {
    parts[ci] = fn(b, e);
  });
  return parts;
}

}  // namespace fwl
