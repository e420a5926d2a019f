#include <cmath>

#include "ips/simd/kernels.hpp"
#include "fuse_voxel.inl"

namespace ips::simd {

namespace {

void gemv(const double* w, const double* x, const double* b, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc + (b ? b[r] : 0.0);
  }
}

void gemv_t_acc(const double* w, const double* g, double* out, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    const double gr = g[r];
    for (std::size_t c = 0; c < cols; ++c) out[c] += gr * row[c];
  }
}

void rank1_acc(double* grad_w, const double* g, const double* x, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = grad_w + r * cols;
    const double gr = g[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

std::size_t fuse_column(const ColumnFusion& c) {
  std::size_t newly = 0;
  for (int k = 0; k < c.count; ++k) newly += detail::fuse_voxel(c, k) ? 1 : 0;
  return newly;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar, gemv, gemv_t_acc, rank1_acc, dot, fuse_column};
  return table;
}

}  // namespace ips::simd
