#include "curio/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace curio {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

PolicyNet::PolicyNet(int obs_dim, int act_dim, std::vector<int> hidden)
    : obs_dim_(obs_dim), act_dim_(act_dim), hidden_(std::move(hidden)) {
  if (obs_dim <= 0 || act_dim <= 0) throw std::invalid_argument("policy dimensions must be positive");
  Eigen::Index offset = 0;
  int in = obs_dim;
  for (int h : hidden_) {
    if (h <= 0) throw std::invalid_argument("hidden sizes must be positive");
    Layer l{offset, offset + static_cast<Eigen::Index>(h) * in, in, h};
    offset = l.b + h;
    trunk_.push_back(l);
    in = h;
  }
  mean_ = {offset, offset + static_cast<Eigen::Index>(act_dim) * in, in, act_dim};
  offset = mean_.b + act_dim;
  value_ = {offset, offset + in, in, 1};
  offset = value_.b + 1;
  log_std_ = offset;
  offset += act_dim;
  params_ = Vec::Zero(offset);
}

void PolicyNet::init(Rng& rng, bool zero_mean_head) {
  params_.setZero();
  auto fill = [&](const Layer& l, double gain) {
    const double bound = gain * std::sqrt(6.0 / (l.in + l.out));
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(l.in) * l.out; ++k)
      params_[l.w + k] = uniform(rng, -bound, bound);
  };
  for (const auto& l : trunk_) fill(l, 1.0);
  if (!zero_mean_head) fill(mean_, 1.0);
  fill(value_, 1.0);
}

Eigen::Map<const Mat> PolicyNet::weights(const Layer& l) const { return {params_.data() + l.w, l.out, l.in}; }
Eigen::Map<const Vec> PolicyNet::bias(const Layer& l) const { return {params_.data() + l.b, l.out}; }
Eigen::Map<const Vec> PolicyNet::log_std() const { return {params_.data() + log_std_, act_dim_}; }

PolicyNet::Output PolicyNet::forward(const Mat& obs) const {
  Cache cache;
  return forward(obs, cache);
}

PolicyNet::Output PolicyNet::forward(const Mat& obs, Cache& cache) const {
  if (obs.rows() != obs_dim_) throw std::invalid_argument("observation dimension mismatch");
  cache.activations.clear();
  cache.activations.push_back(obs);
  for (const auto& l : trunk_) {
    Mat z = weights(l) * cache.activations.back();
    z.colwise() += bias(l);
    cache.activations.push_back(z.array().tanh().matrix());
  }
  const Mat& h = cache.activations.back();
  Mat zm = weights(mean_) * h;
  zm.colwise() += bias(mean_);
  cache.mean = zm.array().tanh().matrix();
  cache.value = (weights(value_) * h).transpose();
  cache.value.array() += params_[value_.b];
  return {cache.mean, cache.value};
}

void PolicyNet::backward(const Cache& cache, const Mat& d_mean, const Vec& d_value, const Vec& d_log_std,
                         Vec& grad) const {
  if (grad.size() != params_.size()) grad = Vec::Zero(params_.size());
  const Mat& h = cache.activations.back();
  const Mat dz_mean = (d_mean.array() * (1.0 - cache.mean.array().square())).matrix();

  Eigen::Map<Mat>(grad.data() + mean_.w, mean_.out, mean_.in) += dz_mean * h.transpose();
  Eigen::Map<Vec>(grad.data() + mean_.b, mean_.out) += dz_mean.rowwise().sum();
  Eigen::Map<Mat>(grad.data() + value_.w, 1, value_.in) += d_value.transpose() * h.transpose();
  grad[value_.b] += d_value.sum();
  Eigen::Map<Vec>(grad.data() + log_std_, act_dim_) += d_log_std;

  if (trunk_.empty()) return;
  Mat dh = weights(mean_).transpose() * dz_mean + weights(value_).transpose() * d_value.transpose();
  for (std::size_t li = trunk_.size(); li-- > 0;) {
    const Layer& l = trunk_[li];
    const Mat& out = cache.activations[li + 1];
    const Mat& in = cache.activations[li];
    const Mat dz = (dh.array() * (1.0 - out.array().square())).matrix();
    Eigen::Map<Mat>(grad.data() + l.w, l.out, l.in) += dz * in.transpose();
    Eigen::Map<Vec>(grad.data() + l.b, l.out) += dz.rowwise().sum();
    if (li > 0) dh = weights(l).transpose() * dz;
  }
}

Vec gaussian_log_prob(const Mat& mean, const Vec& log_std, const Mat& actions) {
  const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
  Vec out(mean.cols());
  const double norm = log_std.sum() + 0.5 * kLog2Pi * static_cast<double>(log_std.size());
  for (Eigen::Index i = 0; i < mean.cols(); ++i) {
    const Eigen::ArrayXd diff = actions.col(i).array() - mean.col(i).array();
    out[i] = -0.5 * (diff.square() * inv_var).sum() - norm;
  }
  return out;
}

PpoLoss ppo_loss(const PolicyNet& net, const PpoBatch& batch, const PpoLossCoefs& coefs, Vec* grad) {
  const Eigen::Index n = batch.size();
  if (n == 0) throw std::invalid_argument("ppo_loss needs a nonempty batch");
  PolicyNet::Cache cache;
  net.forward(batch.obs, cache);
  const Vec log_std = net.log_std();
  const Vec log_prob = gaussian_log_prob(cache.mean, log_std, batch.actions);
  const double inv_n = 1.0 / static_cast<double>(n);
  const double lo = 1.0 - coefs.clip_range, hi = 1.0 + coefs.clip_range;

  PpoLoss loss;
  Vec d_logp(n);
  std::size_t clipped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ratio = std::exp(log_prob[i] - batch.old_log_prob[i]);
    const double adv = batch.advantages[i];
    const double s1 = ratio * adv;
    const double s2 = std::clamp(ratio, lo, hi) * adv;
    // the clipped branch only wins (and has zero slope) when it is strictly smaller
    if (s2 < s1) {
      loss.policy -= s2;
      d_logp[i] = 0.0;
      ++clipped;
    } else {
      loss.policy -= s1;
      d_logp[i] = -s1 * inv_n;
    }
  }
  loss.policy *= inv_n;
  loss.clip_fraction = static_cast<double>(clipped) * inv_n;

  const Vec diff_v = cache.value - batch.returns;
  loss.value = diff_v.squaredNorm() * inv_n;
  loss.entropy = log_std.sum() + 0.5 * (1.0 + kLog2Pi) * static_cast<double>(log_std.size());
  loss.total = loss.policy + coefs.vf_coef * loss.value - coefs.entropy_coef * loss.entropy;

  if (grad) {
    const Eigen::ArrayXd inv_var = (-2.0 * log_std.array()).exp();
    Mat d_mean(net.act_dim(), n);
    Vec d_log_std = Vec::Zero(net.act_dim());
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::ArrayXd diff = batch.actions.col(i).array() - cache.mean.col(i).array();
      d_mean.col(i) = (d_logp[i] * diff * inv_var).matrix();
      d_log_std += (d_logp[i] * (diff.square() * inv_var - 1.0)).matrix();
    }
    d_log_std.array() -= coefs.entropy_coef;
    const Vec d_value = (2.0 * coefs.vf_coef * inv_n) * diff_v;
    *grad = Vec::Zero(net.param_count());
    net.backward(cache, d_mean, d_value, d_log_std, *grad);
  }
  return loss;
}

double gradient_check(const PolicyNet& net, const PpoBatch& batch, const PpoLossCoefs& coefs, int n_params,
                      std::uint64_t seed, double step) {
  if (batch.size() == 0) throw std::invalid_argument("gradient_check needs a nonempty batch");
  Vec analytic;
  ppo_loss(net, batch, coefs, &analytic);

  std::vector<Eigen::Index> idx(static_cast<std::size_t>(net.param_count()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng rng(derive_seed(seed, 0x9c));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(n_params, 0))));

  PolicyNet probe = net;
  double worst = 0.0;
  for (Eigen::Index k : idx) {
    const double saved = probe.params()[k];
    probe.params()[k] = saved + step;
    const double up = ppo_loss(probe, batch, coefs, nullptr).total;
    probe.params()[k] = saved - step;
    const double down = ppo_loss(probe, batch, coefs, nullptr).total;
    probe.params()[k] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[k];
    // floor keeps parameters with (near) zero gradient from dominating through rounding noise
    const double scale = std::max({std::abs(a), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(a - numeric) / scale);
  }
  return worst;
}

Adam::Adam(Eigen::Index n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(Vec::Zero(n)), v_(Vec::Zero(n)) {}

void Adam::step(Vec& params, const Vec& grad) {
  ++t_;
  m_ = b1_ * m_ + (1.0 - b1_) * grad;
  v_ = b2_ * v_ + (1.0 - b2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

double clip_grad_norm(Vec& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm && norm > 0.0) grad *= max_norm / norm;
  return norm;
}

}  // namespace curio
