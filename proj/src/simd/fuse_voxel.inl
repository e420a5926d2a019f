// Per-voxel TSDF + detection update shared by the reference kernel and the
// remainder loop of the vectorized kernel. Operation order is part of the
// contract: the AVX2 lanes perform exactly these IEEE operations.

namespace ips::simd::detail {

inline bool fuse_voxel(const ColumnFusion& c, int k) {
  const float fk = static_cast<float>(k);
  const float x = c.origin[0] + fk * c.step[0];
  const float y = c.origin[1] + fk * c.step[1];
  const float z = c.origin[2] + fk * c.step[2];
  if (!(z > 0.0f)) return false;
  const float u = (x / z) * c.focal + c.principal_x;
  const float v = (y / z) * c.focal + c.principal_y;
  const float fu = std::floor(u), fv = std::floor(v);
  if (!(fu >= 0.0f && fu < static_cast<float>(c.width) && fv >= 0.0f && fv < static_cast<float>(c.height)))
    return false;
  const int idx = static_cast<int>(fv) * c.width + static_cast<int>(fu);
  const float d = c.depth[idx];
  if (!(d > 0.0f)) return false;
  const float dist = std::sqrt((x * x + y * y) + z * z);
  if (!(dist > c.near_clip)) return false;
  const float sd = d - dist;
  if (!(sd > -c.truncation)) return false;

  const float obs = std::fmin(1.0f, sd * c.inv_truncation);
  const float w = c.weight[k];
  const bool newly = w == 0.0f;
  const float w1 = w + 1.0f;
  c.tsdf[k] = (w * c.tsdf[k] + obs) / w1;
  c.weight[k] = std::fmin(w1, c.max_weight);

  const float s = sd <= c.detection_band ? c.score[idx] : 0.0f;
  const float dw = c.det_weight[k];
  const float dw1 = dw + 1.0f;
  c.det[k] = (dw * c.det[k] + s) / dw1;
  c.det_weight[k] = std::fmin(dw1, c.max_weight);
  return newly;
}

}  // namespace ips::simd::detail
