// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <bit>
#include <cmath>
#include <cstdint>

#include "ips/simd/kernels.hpp"
#include "fuse_voxel.inl"

namespace ips::simd {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void gemv(const double* w, const double* x, const double* b, double* y, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(w + r * cols, x, cols) + (b ? b[r] : 0.0);
}

/// out += s * v
inline void axpy(double s, const double* v, double* out, std::size_t n) {
  const __m256d sv = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(sv, _mm256_loadu_pd(v + i), _mm256_loadu_pd(out + i)));
  for (; i < n; ++i) out[i] += s * v[i];
}

void gemv_t_acc(const double* w, const double* g, double* out, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy(g[r], w + r * cols, out, cols);
}

void rank1_acc(double* grad_w, const double* g, const double* x, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy(g[r], x, grad_w + r * cols, cols);
}

std::size_t fuse_column_tail(const ColumnFusion& c, int begin);

std::size_t fuse_column(const ColumnFusion& c) {
  const __m256 lane = _mm256_setr_ps(0, 1, 2, 3, 4, 5, 6, 7);
  const __m256 zero = _mm256_setzero_ps(), one = _mm256_set1_ps(1.0f);
  const __m256 ox = _mm256_set1_ps(c.origin[0]), oy = _mm256_set1_ps(c.origin[1]), oz = _mm256_set1_ps(c.origin[2]);
  const __m256 sx = _mm256_set1_ps(c.step[0]), sy = _mm256_set1_ps(c.step[1]), sz = _mm256_set1_ps(c.step[2]);
  const __m256 focal = _mm256_set1_ps(c.focal);
  const __m256 px = _mm256_set1_ps(c.principal_x), py = _mm256_set1_ps(c.principal_y);
  const __m256 width = _mm256_set1_ps(static_cast<float>(c.width));
  const __m256 height = _mm256_set1_ps(static_cast<float>(c.height));
  const __m256i width_i = _mm256_set1_epi32(c.width);
  const __m256 near_clip = _mm256_set1_ps(c.near_clip);
  const __m256 neg_trunc = _mm256_set1_ps(-c.truncation);
  const __m256 inv_trunc = _mm256_set1_ps(c.inv_truncation);
  const __m256 band = _mm256_set1_ps(c.detection_band);
  const __m256 max_w = _mm256_set1_ps(c.max_weight);

  std::size_t newly = 0;
  int k = 0;
  for (; k + 8 <= c.count; k += 8) {
    const __m256 fk = _mm256_add_ps(_mm256_set1_ps(static_cast<float>(k)), lane);
    const __m256 x = _mm256_add_ps(ox, _mm256_mul_ps(fk, sx));
    const __m256 y = _mm256_add_ps(oy, _mm256_mul_ps(fk, sy));
    const __m256 z = _mm256_add_ps(oz, _mm256_mul_ps(fk, sz));
    __m256 mask = _mm256_cmp_ps(z, zero, _CMP_GT_OQ);
    if (_mm256_movemask_ps(mask) == 0) continue;

    const __m256 u = _mm256_add_ps(_mm256_mul_ps(_mm256_div_ps(x, z), focal), px);
    const __m256 v = _mm256_add_ps(_mm256_mul_ps(_mm256_div_ps(y, z), focal), py);
    const __m256 fu = _mm256_floor_ps(u), fv = _mm256_floor_ps(v);
    mask = _mm256_and_ps(mask, _mm256_cmp_ps(fu, zero, _CMP_GE_OQ));
    mask = _mm256_and_ps(mask, _mm256_cmp_ps(fu, width, _CMP_LT_OQ));
    mask = _mm256_and_ps(mask, _mm256_cmp_ps(fv, zero, _CMP_GE_OQ));
    mask = _mm256_and_ps(mask, _mm256_cmp_ps(fv, height, _CMP_LT_OQ));
    if (_mm256_movemask_ps(mask) == 0) continue;

    const __m256i mask_i = _mm256_castps_si256(mask);
    __m256i idx = _mm256_add_epi32(_mm256_mullo_epi32(_mm256_cvttps_epi32(fv), width_i), _mm256_cvttps_epi32(fu));
    idx = _mm256_and_si256(idx, mask_i);
    const __m256 d = _mm256_mask_i32gather_ps(zero, c.depth, idx, mask, 4);
    mask = _mm256_and_ps(mask, _mm256_cmp_ps(d, zero, _CMP_GT_OQ));

    const __m256 dist = _mm256_sqrt_ps(
        _mm256_add_ps(_mm256_add_ps(_mm256_mul_ps(x, x), _mm256_mul_ps(y, y)), _mm256_mul_ps(z, z)));
    mask = _mm256_and_ps(mask, _mm256_cmp_ps(dist, near_clip, _CMP_GT_OQ));
    const __m256 sd = _mm256_sub_ps(d, dist);
    mask = _mm256_and_ps(mask, _mm256_cmp_ps(sd, neg_trunc, _CMP_GT_OQ));
    if (_mm256_movemask_ps(mask) == 0) continue;

    const __m256 obs = _mm256_min_ps(one, _mm256_mul_ps(sd, inv_trunc));
    const __m256 w = _mm256_loadu_ps(c.weight + k);
    const __m256 t = _mm256_loadu_ps(c.tsdf + k);
    const __m256 fresh = _mm256_and_ps(mask, _mm256_cmp_ps(w, zero, _CMP_EQ_OQ));
    newly += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(_mm256_movemask_ps(fresh))));
    const __m256 w1 = _mm256_add_ps(w, one);
    const __m256 t_new = _mm256_div_ps(_mm256_add_ps(_mm256_mul_ps(w, t), obs), w1);
    _mm256_storeu_ps(c.tsdf + k, _mm256_blendv_ps(t, t_new, mask));
    _mm256_storeu_ps(c.weight + k, _mm256_blendv_ps(w, _mm256_min_ps(w1, max_w), mask));

    const __m256 score = _mm256_mask_i32gather_ps(zero, c.score, idx, mask, 4);
    const __m256 s = _mm256_blendv_ps(zero, score, _mm256_cmp_ps(sd, band, _CMP_LE_OQ));
    const __m256 dw = _mm256_loadu_ps(c.det_weight + k);
    const __m256 det = _mm256_loadu_ps(c.det + k);
    const __m256 dw1 = _mm256_add_ps(dw, one);
    const __m256 det_new = _mm256_div_ps(_mm256_add_ps(_mm256_mul_ps(dw, det), s), dw1);
    _mm256_storeu_ps(c.det + k, _mm256_blendv_ps(det, det_new, mask));
    _mm256_storeu_ps(c.det_weight + k, _mm256_blendv_ps(dw, _mm256_min_ps(dw1, max_w), mask));
  }
  return newly + fuse_column_tail(c, k);
}

std::size_t fuse_column_tail(const ColumnFusion& c, int begin) {
  std::size_t newly = 0;
  for (int k = begin; k < c.count; ++k) newly += detail::fuse_voxel(c, k) ? 1 : 0;
  return newly;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Isa::Avx2, gemv, gemv_t_acc, rank1_acc, dot, fuse_column};
  return table;
}

}  // namespace ips::simd
