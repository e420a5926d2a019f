#include "ips/agents/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "ips/simd/kernels.hpp"

namespace ips {

namespace {

constexpr char kPolicyMagic[8] = {'I', 'P', 'S', 'M', 'L', 'P', '0', '1'};
constexpr std::uint32_t kPolicyVersion = 1;
constexpr double kHalfLog2Pi = 0.91893853320467274178;

constexpr std::array<double, kActionDims> kLimits = {0.06, 0.06, 0.06, 0.15, 0.15};

double sigmoid(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

/// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated policy checkpoint");
  return v;
}

}  // namespace

MlpPolicy::MlpPolicy(int input, int hidden) : input_(input), hidden_(hidden) {
  if (input <= 0 || hidden <= 0) throw ContractViolation("layer sizes must be positive");
  params_.assign(log_std() + kActionDims, 0.0);
}

void MlpPolicy::initialize(Rng& rng, double initial_log_std, double terminate_bias) {
  std::fill(params_.begin(), params_.end(), 0.0);
  auto fill = [&](std::size_t offset, std::size_t rows, std::size_t cols, double gain) {
    const double scale = gain / std::sqrt(static_cast<double>(cols));
    for (std::size_t i = 0; i < rows * cols; ++i) params_[offset + i] = scale * rng.normal();
  };
  fill(w1(), hidden_, input_, 1.0);
  fill(w2(), hidden_, hidden_, 1.0);
  fill(wh(), kActionDims, hidden_, 0.01);
  fill(wh() + static_cast<std::size_t>(kActionDims) * hidden_, 1, hidden_, 0.01);
  fill(wh() + static_cast<std::size_t>(kActionDims + 1) * hidden_, 1, hidden_, 1.0);
  params_[bh() + kActionDims] = terminate_bias;
  for (int i = 0; i < kActionDims; ++i) params_[log_std() + i] = initial_log_std;
  clamp_log_std();
}

void MlpPolicy::clamp_log_std() {
  for (int i = 0; i < kActionDims; ++i)
    params_[log_std() + i] = std::clamp(params_[log_std() + i], kLogStdMin, kLogStdMax);
}

MlpPolicy::Output MlpPolicy::forward(std::span<const double> state, Trace* trace) const {
  if (state.size() != static_cast<std::size_t>(input_)) throw ContractViolation("policy input has the wrong size");
  for (double x : state)
    if (!std::isfinite(x)) throw ContractViolation("policy input is not finite");

  const auto& k = simd::kernels();
  const double* p = params_.data();
  std::vector<double> h1(hidden_), h2(hidden_);
  k.gemv(p + w1(), state.data(), p + b1(), h1.data(), hidden_, input_);
  for (double& v : h1) v = std::tanh(v);
  k.gemv(p + w2(), h1.data(), p + b2(), h2.data(), hidden_, hidden_);
  for (double& v : h2) v = std::tanh(v);
  double head[kHeadSize];
  k.gemv(p + wh(), h2.data(), p + bh(), head, kHeadSize, hidden_);

  Output out;
  for (int i = 0; i < kActionDims; ++i) {
    out.mean[i] = head[i];
    out.log_std[i] = p[log_std() + i];
  }
  out.terminate_logit = head[kActionDims];
  out.value = head[kActionDims + 1];
  if (trace) {
    trace->h1 = std::move(h1);
    trace->h2 = std::move(h2);
  }
  return out;
}

void MlpPolicy::backward(std::span<const double> state, const Trace& trace, std::span<const double, kHeadSize> d_head,
                         std::span<const double, kActionDims> d_log_std, std::span<double> grad) const {
  if (grad.size() != params_.size()) throw ContractViolation("gradient buffer has the wrong size");
  const auto& k = simd::kernels();
  const double* p = params_.data();
  double* g = grad.data();

  k.rank1_acc(g + wh(), d_head.data(), trace.h2.data(), kHeadSize, hidden_);
  for (int i = 0; i < kHeadSize; ++i) g[bh() + i] += d_head[i];
  for (int i = 0; i < kActionDims; ++i) g[log_std() + i] += d_log_std[i];

  std::vector<double> d2(hidden_, 0.0);
  k.gemv_t_acc(p + wh(), d_head.data(), d2.data(), kHeadSize, hidden_);
  for (int i = 0; i < hidden_; ++i) d2[i] *= 1.0 - trace.h2[i] * trace.h2[i];
  k.rank1_acc(g + w2(), d2.data(), trace.h1.data(), hidden_, hidden_);
  for (int i = 0; i < hidden_; ++i) g[b2() + i] += d2[i];

  std::vector<double> d1(hidden_, 0.0);
  k.gemv_t_acc(p + w2(), d2.data(), d1.data(), hidden_, hidden_);
  for (int i = 0; i < hidden_; ++i) d1[i] *= 1.0 - trace.h1[i] * trace.h1[i];
  k.rank1_acc(g + w1(), d1.data(), state.data(), hidden_, input_);
  for (int i = 0; i < hidden_; ++i) g[b1() + i] += d1[i];
}

void MlpPolicy::save(std::ostream& out) const {
  out.write(kPolicyMagic, sizeof(kPolicyMagic));
  write_pod(out, kPolicyVersion);
  // Layer shapes (rows, cols): W1, W2, heads, log_std.
  const std::uint32_t shapes[4][2] = {{static_cast<std::uint32_t>(hidden_), static_cast<std::uint32_t>(input_)},
                                      {static_cast<std::uint32_t>(hidden_), static_cast<std::uint32_t>(hidden_)},
                                      {kHeadSize, static_cast<std::uint32_t>(hidden_)},
                                      {1, kActionDims}};
  write_pod(out, std::uint32_t{4});
  for (const auto& s : shapes) {
    write_pod(out, s[0]);
    write_pod(out, s[1]);
  }
  write_pod(out, static_cast<std::uint64_t>(params_.size()));
  out.write(reinterpret_cast<const char*>(params_.data()),
            static_cast<std::streamsize>(params_.size() * sizeof(double)));
}

MlpPolicy MlpPolicy::load(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kPolicyMagic, sizeof(magic)) != 0) throw std::runtime_error("not a policy checkpoint");
  if (read_pod<std::uint32_t>(in) != kPolicyVersion) throw std::runtime_error("unsupported policy checkpoint version");
  if (read_pod<std::uint32_t>(in) != 4) throw std::runtime_error("unexpected policy layer count");
  std::uint32_t shapes[4][2];
  for (auto& s : shapes) {
    s[0] = read_pod<std::uint32_t>(in);
    s[1] = read_pod<std::uint32_t>(in);
  }
  const int hidden = static_cast<int>(shapes[0][0]), input = static_cast<int>(shapes[0][1]);
  if (shapes[1][0] != shapes[0][0] || shapes[1][1] != shapes[0][0] || shapes[2][0] != kHeadSize ||
      shapes[2][1] != shapes[0][0] || shapes[3][1] != kActionDims)
    throw std::runtime_error("inconsistent policy layer shapes");
  MlpPolicy policy(input, hidden);
  if (read_pod<std::uint64_t>(in) != policy.params_.size()) throw std::runtime_error("policy parameter count mismatch");
  in.read(reinterpret_cast<char*>(policy.params_.data()),
          static_cast<std::streamsize>(policy.params_.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated policy checkpoint");
  return policy;
}

double log_prob(const MlpPolicy::Output& out, const PolicySample& s) {
  double lp = 0.0;
  for (int i = 0; i < kActionDims; ++i) {
    const double z = (s.u[i] - out.mean[i]) * std::exp(-out.log_std[i]);
    lp += -0.5 * z * z - out.log_std[i] - kHalfLog2Pi;
  }
  lp += s.terminate ? log_sigmoid(out.terminate_logit) : log_sigmoid(-out.terminate_logit);
  return lp;
}

double entropy(const MlpPolicy::Output& out) {
  double h = 0.0;
  for (int i = 0; i < kActionDims; ++i) h += out.log_std[i] + 0.5 + kHalfLog2Pi;
  const double p = sigmoid(out.terminate_logit);
  h += -p * log_sigmoid(out.terminate_logit) - (1.0 - p) * log_sigmoid(-out.terminate_logit);
  return h;
}

double terminate_probability(const MlpPolicy::Output& out) { return sigmoid(out.terminate_logit); }

PolicySample sample(const MlpPolicy::Output& out, Rng& rng) {
  PolicySample s;
  for (int i = 0; i < kActionDims; ++i) s.u[i] = out.mean[i] + std::exp(out.log_std[i]) * rng.normal();
  s.terminate = rng.bernoulli(terminate_probability(out));
  return s;
}

PolicySample mode(const MlpPolicy::Output& out) {
  PolicySample s;
  s.u = out.mean;
  s.terminate = terminate_probability(out) > 0.5;
  return s;
}

Action to_action(const PolicySample& s) {
  Action a;
  a.dx = kLimits[0] * std::tanh(s.u[0]);
  a.dy = kLimits[1] * std::tanh(s.u[1]);
  a.dz = kLimits[2] * std::tanh(s.u[2]);
  a.droll = kLimits[3] * std::tanh(s.u[3]);
  a.dyaw = kLimits[4] * std::tanh(s.u[4]);
  a.terminate = s.terminate;
  return a;
}

}  // namespace ips
