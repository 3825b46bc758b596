#pragma once

// Gaussian MLP policy with a value head, the clipped-surrogate PPO loss with its analytic
// gradient, Adam, and a finite-difference gradient check.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "curio/random.hpp"

namespace curio {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// obs -> tanh trunk -> (tanh-squashed action mean, state value); per-dof log-std.
/// Parameters live in one flat vector.
class PolicyNet {
 public:
  PolicyNet(int obs_dim, int act_dim, std::vector<int> hidden);

  /// Trunk and value head drawn from scaled uniforms; the mean head is zero when
  /// `zero_mean_head`, so the initial policy mean is exactly 0. log-std starts at 0.
  void init(Rng& rng, bool zero_mean_head = true);

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  const std::vector<int>& hidden() const { return hidden_; }
  Eigen::Index param_count() const { return params_.size(); }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  struct Output {
    Mat mean;   // act_dim x N
    Vec value;  // N
  };
  /// Columns of `obs` are observations.
  Output forward(const Mat& obs) const;
  Eigen::Map<const Vec> log_std() const;

  // offsets into the flat vector, for tests
  struct Layer {
    Eigen::Index w = 0, b = 0;
    int in = 0, out = 0;
  };
  const std::vector<Layer>& trunk_layers() const { return trunk_; }
  const Layer& mean_layer() const { return mean_; }
  const Layer& value_layer() const { return value_; }
  Eigen::Index log_std_offset() const { return log_std_; }

  struct Cache {
    std::vector<Mat> activations;  // input, then each trunk layer output
    Mat mean;
    Vec value;
  };
  Output forward(const Mat& obs, Cache& cache) const;
  /// Accumulates into `grad` the parameter gradient given d(loss)/d(mean), d(loss)/d(value)
  /// and d(loss)/d(log_std).
  void backward(const Cache& cache, const Mat& d_mean, const Vec& d_value, const Vec& d_log_std, Vec& grad) const;

 private:
  Eigen::Map<const Mat> weights(const Layer& l) const;
  Eigen::Map<const Vec> bias(const Layer& l) const;

  int obs_dim_;
  int act_dim_;
  std::vector<int> hidden_;
  std::vector<Layer> trunk_;
  Layer mean_, value_;
  Eigen::Index log_std_ = 0;
  Vec params_;
};

/// One minibatch worth of transitions; columns/entries are samples.
struct PpoBatch {
  Mat obs;      // obs_dim x N
  Mat actions;  // act_dim x N, unclamped samples
  Vec old_log_prob;
  Vec advantages;
  Vec returns;

  Eigen::Index size() const { return old_log_prob.size(); }
};

struct PpoLossCoefs {
  double clip_range = 0.2;
  double vf_coef = 0.5;
  double entropy_coef = 0.0;
};

struct PpoLoss {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;  // mean entropy; enters the loss with a minus sign
  double total = 0.0;
  double clip_fraction = 0.0;
};

/// Diagonal Gaussian log-density of `actions` (column-wise).
Vec gaussian_log_prob(const Mat& mean, const Vec& log_std, const Mat& actions);

/// policy + vf_coef * value - entropy_coef * entropy, averaged over the batch.
/// Writes the gradient when `grad` is non-null.
PpoLoss ppo_loss(const PolicyNet& net, const PpoBatch& batch, const PpoLossCoefs& coefs, Vec* grad);

/// Max relative error between the analytic gradient and central differences over
/// `n_params` parameters drawn without replacement (all of them if fewer).
double gradient_check(const PolicyNet& net, const PpoBatch& batch, const PpoLossCoefs& coefs, int n_params,
                      std::uint64_t seed, double step = 1e-5);

class Adam {
 public:
  explicit Adam(Eigen::Index n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-5);
  void step(Vec& params, const Vec& grad);

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  Vec m_, v_;
};

/// Rescales `grad` in place so its norm is at most `max_norm`; returns the original norm.
double clip_grad_norm(Vec& grad, double max_norm);

}  // namespace curio
