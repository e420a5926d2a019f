#pragma once

// Data-parallel inner loops with a scalar reference implementation and an
// AVX2/FMA variant selected at runtime.
//
// The dense linear-algebra kernels may differ from the reference in the last
// bits (different summation order, fused multiply-add). The TSDF column
// fusion kernel performs exactly the same IEEE operations in both variants and
// must match bit for bit.

#include <cstddef>
#include <string_view>

namespace ips::simd {

enum class Isa { Scalar, Avx2 };

/// One contiguous z-run of voxels to fuse with a depth + detection frame.
/// Voxel k of the run has camera-frame center `origin + k * step`.
struct ColumnFusion {
  float origin[3];
  float step[3];
  int count;

  float focal;
  float principal_x;
  float principal_y;
  int width;
  int height;
  float near_clip;
  float truncation;
  float inv_truncation;
  /// Voxels up to this far in front of the surface take the pixel's detection score.
  float detection_band;
  float max_weight;

  const float* depth;
  const float* score;

  float* tsdf;
  float* weight;
  float* det;
  float* det_weight;
};

struct KernelTable {
  Isa isa;
  /// y = W x + b, W row-major rows x cols.
  void (*gemv)(const double* w, const double* x, const double* b, double* y, std::size_t rows, std::size_t cols);
  /// out += W^T g.
  void (*gemv_t_acc)(const double* w, const double* g, double* out, std::size_t rows, std::size_t cols);
  /// grad_w += g x^T.
  void (*rank1_acc)(double* grad_w, const double* g, const double* x, std::size_t rows, std::size_t cols);
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// Returns the number of voxels whose weight went from 0 to positive.
  std::size_t (*fuse_column)(const ColumnFusion& c);
};

const KernelTable& scalar_kernels();
/// nullptr when the build or the CPU lacks AVX2 + FMA.
const KernelTable* avx2_kernels();

/// Best table for this machine unless overridden by `select` or IPS_SIMD=scalar.
const KernelTable& kernels();
void select(Isa isa);
Isa detect_best();
std::string_view name(Isa isa);

}  // namespace ips::simd
