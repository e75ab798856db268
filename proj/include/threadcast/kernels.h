#pragma once

#include <cstddef>
#include <span>
#include <vector>

// Data-parallel inner loops. Each kernel has a plain serial reference that
// the tests and the benchmark compare against. The parallel versions keep the
// per-element accumulation order of the reference, so results are identical
// bit for bit regardless of thread count.
namespace threadcast::kernels {

// Row-major C[m x n] = A[m x k] * B[k x n]; with `accumulate`, C += A * B.
template <typename T>
void gemm_reference(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a, std::span<const T> b,
                    std::span<T> c, bool accumulate);

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a, std::span<const T> b,
          std::span<T> c, bool accumulate);

template <typename T>
void transpose(std::size_t rows, std::size_t cols, std::span<const T> in, std::span<T> out);

// Hop distances between every pair of vertices of an undirected graph given
// as adjacency lists, row-major n x n. Unreachable pairs are -1.
std::vector<int> all_pairs_bfs_reference(const std::vector<std::vector<int>>& adjacency);
std::vector<int> all_pairs_bfs(const std::vector<std::vector<int>>& adjacency);

// Work below this many multiply-adds stays on the calling thread.
inline constexpr std::size_t kParallelGemmThreshold = 1 << 15;

}  // namespace threadcast::kernels
