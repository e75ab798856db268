#include "threadcast/kernels.h"

#include <omp.h>

#include <vector>

namespace threadcast::kernels {

template <typename T>
void gemm_reference(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a, std::span<const T> b,
                    std::span<T> c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T sum = 0;
      for (std::size_t p = 0; p < k; ++p) sum += a[i * k + p] * b[p * n + j];
      c[i * n + j] = accumulate ? c[i * n + j] + sum : sum;
    }
  }
}

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, std::span<const T> a, std::span<const T> b,
          std::span<T> c, bool accumulate) {
  const T* pa = a.data();
  const T* pb = b.data();
  T* pc = c.data();
  const bool parallel = m > 1 && m * n * k >= kParallelGemmThreshold;
#pragma omp parallel if (parallel)
  {
    std::vector<T> row(n);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
      T* acc = row.data();
      for (std::size_t j = 0; j < n; ++j) acc[j] = 0;
      const T* arow = pa + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const T av = arow[p];
        const T* brow = pb + p * n;
        for (std::size_t j = 0; j < n; ++j) acc[j] += av * brow[j];
      }
      T* crow = pc + i * n;
      if (accumulate) {
        for (std::size_t j = 0; j < n; ++j) crow[j] += acc[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) crow[j] = acc[j];
      }
    }
  }
}

template <typename T>
void transpose(std::size_t rows, std::size_t cols, std::span<const T> in, std::span<T> out) {
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = in[i * cols + j];
  }
}

namespace {

void bfs_from(const std::vector<std::vector<int>>& adjacency, int source, int* dist, std::vector<int>& queue) {
  const int n = static_cast<int>(adjacency.size());
  for (int v = 0; v < n; ++v) dist[v] = -1;
  queue.clear();
  queue.push_back(source);
  dist[source] = 0;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (int v : adjacency[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
}

}  // namespace

std::vector<int> all_pairs_bfs_reference(const std::vector<std::vector<int>>& adjacency) {
  const std::size_t n = adjacency.size();
  std::vector<int> dist(n * n, -1);
  std::vector<int> queue;
  for (std::size_t s = 0; s < n; ++s) bfs_from(adjacency, static_cast<int>(s), dist.data() + s * n, queue);
  return dist;
}

std::vector<int> all_pairs_bfs(const std::vector<std::vector<int>>& adjacency) {
  const long n = static_cast<long>(adjacency.size());
  std::vector<int> dist(static_cast<std::size_t>(n * n), -1);
#pragma omp parallel if (n >= 64)
  {
    std::vector<int> queue;
#pragma omp for schedule(dynamic, 8)
    for (long s = 0; s < n; ++s) bfs_from(adjacency, static_cast<int>(s), dist.data() + s * n, queue);
  }
  return dist;
}

template void gemm_reference<float>(std::size_t, std::size_t, std::size_t, std::span<const float>,
                                    std::span<const float>, std::span<float>, bool);
template void gemm_reference<double>(std::size_t, std::size_t, std::size_t, std::span<const double>,
                                     std::span<const double>, std::span<double>, bool);
template void gemm<float>(std::size_t, std::size_t, std::size_t, std::span<const float>, std::span<const float>,
                          std::span<float>, bool);
template void gemm<double>(std::size_t, std::size_t, std::size_t, std::span<const double>,
                           std::span<const double>, std::span<double>, bool);
template void transpose<float>(std::size_t, std::size_t, std::span<const float>, std::span<float>);
template void transpose<double>(std::size_t, std::size_t, std::span<const double>, std::span<double>);

}  // namespace threadcast::kernels
