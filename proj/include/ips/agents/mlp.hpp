#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "ips/encoder.hpp"
#include "ips/env.hpp"
#include "ips/rng.hpp"

namespace ips {

inline constexpr int kActionDims = 5;

/// Two tanh hidden layers shared by three linear heads: 5 action means, one
/// terminate logit, one value. Log standard deviations are free parameters.
///
/// Parameters live in one flat vector (W1, b1, W2, b2, Wh, bh, log_std) so the
/// optimizer and checkpoints treat them uniformly. Weight matrices are row-major
/// (out x in).
class MlpPolicy {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;
  static constexpr int kHeadSize = kActionDims + 2;

  MlpPolicy(int input = kStateSize, int hidden = 200);

  int input_size() const { return input_; }
  int hidden_size() const { return hidden_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  /// Scaled Gaussian weights, zero biases, small action/terminate heads.
  void initialize(Rng& rng, double initial_log_std = 0.0, double terminate_bias = 0.0);
  void clamp_log_std();

  struct Output {
    std::array<double, kActionDims> mean{};
    std::array<double, kActionDims> log_std{};
    double terminate_logit = 0.0;
    double value = 0.0;
  };

  /// Hidden activations, kept for backpropagation.
  struct Trace {
    std::vector<double> h1, h2;
  };

  Output forward(std::span<const double> state, Trace* trace = nullptr) const;

  /// Accumulates into `grad` the parameter gradient of a scalar loss, given its
  /// derivatives with respect to the head outputs and the log standard deviations.
  void backward(std::span<const double> state, const Trace& trace, std::span<const double, kHeadSize> d_head,
                std::span<const double, kActionDims> d_log_std, std::span<double> grad) const;

  void save(std::ostream& out) const;
  static MlpPolicy load(std::istream& in);

  friend bool operator==(const MlpPolicy&, const MlpPolicy&) = default;

  // Offsets into the flat parameter vector.
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return w1() + static_cast<std::size_t>(hidden_) * input_; }
  std::size_t w2() const { return b1() + hidden_; }
  std::size_t b2() const { return w2() + static_cast<std::size_t>(hidden_) * hidden_; }
  std::size_t wh() const { return b2() + hidden_; }
  std::size_t bh() const { return wh() + static_cast<std::size_t>(kHeadSize) * hidden_; }
  std::size_t log_std() const { return bh() + kHeadSize; }

 private:
  int input_;
  int hidden_;
  std::vector<double> params_;
};

/// Pre-squash Gaussian sample plus the terminate bit. Continuous actions are
/// limit * tanh(u); likelihoods are taken over u, where the tanh Jacobian
/// cancels in probability ratios.
struct PolicySample {
  std::array<double, kActionDims> u{};
  bool terminate = false;
};

double log_prob(const MlpPolicy::Output& out, const PolicySample& s);
/// Entropy of the Gaussian over u plus the Bernoulli terminate head.
double entropy(const MlpPolicy::Output& out);
double terminate_probability(const MlpPolicy::Output& out);

PolicySample sample(const MlpPolicy::Output& out, Rng& rng);
/// Mean action, terminate when its probability exceeds one half.
PolicySample mode(const MlpPolicy::Output& out);
Action to_action(const PolicySample& s);

}  // namespace ips
