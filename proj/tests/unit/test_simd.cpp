#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "ips/rng.hpp"
#include "ips/simd/kernels.hpp"

using namespace ips;
using namespace ips::simd;

namespace {

struct ColumnData {
  std::vector<float> depth, score, tsdf, weight, det, det_weight;
  ColumnFusion c{};
};

ColumnData random_column(Rng& rng, int count) {
  ColumnData d;
  const int w = 64, h = 48;
  d.depth.resize(static_cast<std::size_t>(w) * h);
  d.score.resize(d.depth.size());
  for (std::size_t i = 0; i < d.depth.size(); ++i) {
    d.depth[i] = rng.bernoulli(0.1) ? 0.0f : static_cast<float>(rng.uniform(0.05, 0.8));
    d.score[i] = static_cast<float>(rng.uniform());
  }
  d.tsdf.resize(static_cast<std::size_t>(count));
  d.weight.resize(d.tsdf.size());
  d.det.resize(d.tsdf.size());
  d.det_weight.resize(d.tsdf.size());
  for (int k = 0; k < count; ++k) {
    const bool seen = rng.bernoulli(0.5);
    d.tsdf[k] = seen ? static_cast<float>(rng.uniform(-1.0, 1.0)) : 1.0f;
    d.weight[k] = seen ? static_cast<float>(rng.uniform(0.5, 2.0)) : 0.0f;
    d.det[k] = seen ? static_cast<float>(rng.uniform()) : 0.0f;
    d.det_weight[k] = d.weight[k];
  }
  ColumnFusion& c = d.c;
  for (int a = 0; a < 3; ++a) {
    c.origin[a] = static_cast<float>(rng.uniform(-0.2, 0.2));
    c.step[a] = static_cast<float>(rng.uniform(-0.01, 0.01));
  }
  c.origin[2] = static_cast<float>(rng.uniform(-0.05, 0.6));
  c.count = count;
  c.focal = 45.7f;
  c.principal_x = 0.5f * w;
  c.principal_y = 0.5f * h;
  c.width = w;
  c.height = h;
  c.near_clip = 0.05f;
  c.truncation = 0.04f;
  c.inv_truncation = 25.0f;
  c.detection_band = 0.006f;
  c.max_weight = 2.0f;
  c.depth = d.depth.data();
  c.score = d.score.data();
  c.tsdf = d.tsdf.data();
  c.weight = d.weight.data();
  c.det = d.det.data();
  c.det_weight = d.det_weight.data();
  return d;
}

void rebind(ColumnData& d) {
  d.c.depth = d.depth.data();
  d.c.score = d.score.data();
  d.c.tsdf = d.tsdf.data();
  d.c.weight = d.weight.data();
  d.c.det = d.det.data();
  d.c.det_weight = d.det_weight.data();
}

bool same_bits(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("vectorized column fusion is bit-identical to the reference") {
  const KernelTable* avx = avx2_kernels();
  if (avx == nullptr) {
    MESSAGE("AVX2 kernels unavailable; skipped");
    return;
  }
  Rng rng(99);
  std::size_t fused = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    ColumnData a = random_column(rng, static_cast<int>(rng.uniform_int(1, 70)));
    ColumnData b = a;
    rebind(b);
    const std::size_t na = scalar_kernels().fuse_column(a.c);
    const std::size_t nb = avx->fuse_column(b.c);
    CHECK(na == nb);
    CHECK(same_bits(a.tsdf, b.tsdf));
    CHECK(same_bits(a.weight, b.weight));
    CHECK(same_bits(a.det, b.det));
    CHECK(same_bits(a.det_weight, b.det_weight));
    fused += na;
  }
  CHECK(fused > 1000);
}

TEST_CASE("vectorized dense kernels agree with the reference") {
  const KernelTable* avx = avx2_kernels();
  if (avx == nullptr) {
    MESSAGE("AVX2 kernels unavailable; skipped");
    return;
  }
  const KernelTable& ref = scalar_kernels();
  Rng rng(5);
  for (std::size_t rows : {1u, 7u, 200u})
    for (std::size_t cols : {1u, 3u, 71u, 200u}) {
      std::vector<double> w(rows * cols), x(cols), b(rows), g(rows);
      for (double& v : w) v = rng.normal();
      for (double& v : x) v = rng.normal();
      for (double& v : b) v = rng.normal();
      for (double& v : g) v = rng.normal();
      std::vector<double> y1(rows), y2(rows);
      ref.gemv(w.data(), x.data(), b.data(), y1.data(), rows, cols);
      avx->gemv(w.data(), x.data(), b.data(), y2.data(), rows, cols);
      for (std::size_t r = 0; r < rows; ++r) CHECK(y2[r] == doctest::Approx(y1[r]).epsilon(1e-12).scale(10.0));

      std::vector<double> o1(cols, 1.0), o2(cols, 1.0);
      ref.gemv_t_acc(w.data(), g.data(), o1.data(), rows, cols);
      avx->gemv_t_acc(w.data(), g.data(), o2.data(), rows, cols);
      for (std::size_t c = 0; c < cols; ++c) CHECK(o2[c] == doctest::Approx(o1[c]).epsilon(1e-12).scale(10.0));

      std::vector<double> r1 = w, r2 = w;
      ref.rank1_acc(r1.data(), g.data(), x.data(), rows, cols);
      avx->rank1_acc(r2.data(), g.data(), x.data(), rows, cols);
      for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r2[i] == doctest::Approx(r1[i]).epsilon(1e-12).scale(1.0));

      CHECK(avx->dot(w.data(), w.data(), w.size()) == doctest::Approx(ref.dot(w.data(), w.data(), w.size())));
    }
}

TEST_CASE("reference dense kernels compute the textbook products") {
  const KernelTable& k = scalar_kernels();
  const double w[6] = {1, 2, 3, 4, 5, 6}, x[3] = {1, 0, -1}, b[2] = {0.5, -0.5};
  double y[2];
  k.gemv(w, x, b, y, 2, 3);
  CHECK(y[0] == -1.5);
  CHECK(y[1] == -2.5);
  double out[3] = {0, 0, 0};
  const double g[2] = {1, 2};
  k.gemv_t_acc(w, g, out, 2, 3);
  CHECK(out[0] == 9);
  CHECK(out[2] == 15);
  CHECK(k.dot(w, w, 6) == 91);
}

TEST_CASE("dispatch honors explicit selection") {
  const Isa best = detect_best();
  select(Isa::Scalar);
  CHECK(kernels().isa == Isa::Scalar);
  select(best);
  CHECK(kernels().isa == best);
  CHECK(name(Isa::Scalar) == "scalar");
  CHECK(name(Isa::Avx2) == "avx2");
  if (avx2_kernels() == nullptr) CHECK(best == Isa::Scalar);
}
