#include "mergesim/mappo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mergesim {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

nn::Matrix rows_of(const std::vector<const std::vector<double>*>& rows, int width) {
  nn::Matrix m(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c = 0; c < width; ++c) m(static_cast<Eigen::Index>(r), c) = (*rows[r])[static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace

void validate(const PpoHyper& h) {
  if (!(h.gamma > 0.0 && h.gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(h.lambda > 0.0 && h.lambda <= 1.0)) throw std::invalid_argument("lambda must lie in (0, 1]");
  if (!(h.clip > 0.0 && h.clip < 1.0)) throw std::invalid_argument("clip must lie in (0, 1)");
  if (!(h.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (h.epochs < 1 || h.minibatch < 1) throw std::invalid_argument("epochs and minibatch must be >= 1");
  if (h.hidden_units < 1 || h.hidden_layers < 1) throw std::invalid_argument("hidden sizes must be >= 1");
}

std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        std::span<const std::uint8_t> dones, double bootstrap, double gamma,
                        double lambda) {
  require_same_size(rewards.size(), values.size(), "gae");
  require_same_size(rewards.size(), dones.size(), "gae");
  const std::size_t n = rewards.size();
  std::vector<double> adv(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_value = t + 1 < n ? values[t + 1] : bootstrap;
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * live * next_value - values[t];
    running = delta + gamma * lambda * live * running;
    adv[t] = running;
  }
  return adv;
}

double clip_loss(std::span<const double> new_logp, std::span<const double> old_logp,
                 std::span<const double> advantages, double clip) {
  require_same_size(new_logp.size(), old_logp.size(), "clip_loss");
  require_same_size(new_logp.size(), advantages.size(), "clip_loss");
  if (new_logp.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < new_logp.size(); ++i) {
    const double ratio = std::exp(new_logp[i] - old_logp[i]);
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    sum += std::min(ratio * advantages[i], clipped * advantages[i]);
  }
  return -sum / static_cast<double>(new_logp.size());
}

std::vector<double> clip_loss_grad(std::span<const double> new_logp,
                                   std::span<const double> old_logp,
                                   std::span<const double> advantages, double clip) {
  require_same_size(new_logp.size(), old_logp.size(), "clip_loss_grad");
  require_same_size(new_logp.size(), advantages.size(), "clip_loss_grad");
  std::vector<double> g(new_logp.size(), 0.0);
  const double n = static_cast<double>(new_logp.size());
  for (std::size_t i = 0; i < new_logp.size(); ++i) {
    const double ratio = std::exp(new_logp[i] - old_logp[i]);
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    // The unclipped branch is active unless the clipped one is strictly smaller.
    if (ratio * advantages[i] <= clipped * advantages[i]) g[i] = -ratio * advantages[i] / n;
  }
  return g;
}

double value_loss(std::span<const double> values, std::span<const double> returns) {
  require_same_size(values.size(), returns.size(), "value_loss");
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += (values[i] - returns[i]) * (values[i] - returns[i]);
  return sum / static_cast<double>(values.size());
}

std::vector<double> value_loss_grad(std::span<const double> values, std::span<const double> returns) {
  require_same_size(values.size(), returns.size(), "value_loss_grad");
  std::vector<double> g(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    g[i] = 2.0 * (values[i] - returns[i]) / static_cast<double>(values.size());
  }
  return g;
}

Policy Policy::create(int obs_size, int global_size, const PpoHyper& h, std::uint64_t seed) {
  std::vector<int> actor_sizes{obs_size};
  std::vector<int> critic_sizes{global_size};
  for (int l = 0; l < h.hidden_layers; ++l) {
    actor_sizes.push_back(h.hidden_units);
    critic_sizes.push_back(h.hidden_units);
  }
  actor_sizes.push_back(kNumActions);
  critic_sizes.push_back(1);
  // Small output layer keeps the initial policy close to uniform.
  return {nn::Mlp(actor_sizes, mix(seed), 0.01), nn::Mlp(critic_sizes, mix(seed + 1), 1.0)};
}

nn::Matrix log_softmax(const nn::Matrix& logits) {
  nn::Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = m + std::log((logits.row(r).array() - m).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

std::vector<ActionChoice> choose_actions(const Policy& policy, const nn::Matrix& obs, bool greedy,
                                         std::mt19937_64& rng) {
  const nn::Matrix lsm = log_softmax(nn::forward(policy.actor, obs));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ActionChoice> out(static_cast<std::size_t>(obs.rows()));
  for (Eigen::Index r = 0; r < lsm.rows(); ++r) {
    int a = 0;
    if (greedy) {
      lsm.row(r).maxCoeff(&a);
    } else {
      const double u = unit(rng);
      double cum = 0.0;
      a = kNumActions - 1;
      for (int j = 0; j < kNumActions; ++j) {
        cum += std::exp(lsm(r, j));
        if (u < cum) {
          a = j;
          break;
        }
      }
    }
    out[static_cast<std::size_t>(r)] = {a, lsm(r, a)};
  }
  return out;
}

void RolloutBuffer::finalize(double gamma, double lambda) {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.steps.size();
  actions.clear();
  old_log_probs.clear();
  values.clear();
  advantages.clear();
  returns.clear();
  if (n == 0) {
    obs.resize(0, 0);
    global.resize(0, 0);
    return;
  }
  const auto obs_w = static_cast<Eigen::Index>(segments.front().steps.front().obs.size());
  const auto glob_w = static_cast<Eigen::Index>(segments.front().steps.front().global.size());
  obs.resize(static_cast<Eigen::Index>(n), obs_w);
  global.resize(static_cast<Eigen::Index>(n), glob_w);
  Eigen::Index row = 0;
  for (const auto& seg : segments) {
    std::vector<double> r, v;
    std::vector<std::uint8_t> d;
    for (const auto& t : seg.steps) {
      r.push_back(t.reward);
      v.push_back(t.value);
      d.push_back(t.done ? 1 : 0);
    }
    const auto adv = gae(r, v, d, seg.bootstrap, gamma, lambda);
    for (std::size_t i = 0; i < seg.steps.size(); ++i, ++row) {
      const Transition& t = seg.steps[i];
      obs.row(row) = Eigen::Map<const Eigen::RowVectorXd>(t.obs.data(), obs_w);
      global.row(row) = Eigen::Map<const Eigen::RowVectorXd>(t.global.data(), glob_w);
      actions.push_back(t.action);
      old_log_probs.push_back(t.log_prob);
      values.push_back(t.value);
      advantages.push_back(adv[i]);
      returns.push_back(adv[i] + t.value);
    }
  }
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (double& a : advantages) a = (a - mean) / (sd + 1e-8);
}

RolloutWorker::RolloutWorker(EnvConfig config, std::uint64_t seed, int worker_index)
    : env_(std::move(config)), seed_(seed), worker_index_(worker_index),
      rng_(mix(seed ^ mix(static_cast<std::uint64_t>(worker_index) + 17))) {}

std::uint64_t RolloutWorker::episode_seed(int episode) const {
  return mix(mix(seed_) ^ mix((static_cast<std::uint64_t>(worker_index_) << 32) |
                              static_cast<std::uint32_t>(episode)));
}

void RolloutWorker::begin_episode() {
  obs_ = env_.reset(episode_seed(episode_), episode_);
  ++episode_;
  open_.clear();
  episode_return_ = 0.0;
}

void RolloutWorker::collect(const Policy& policy, int n_steps, const RolloutOptions& opts,
                            RolloutBuffer& out) {
  for (int s = 0; s < n_steps; ++s) {
    if (env_.done()) begin_episode();
    const std::vector<VehicleId> live = env_.live_cav_ids();
    std::vector<std::vector<double>> obs_rows, global_rows;
    for (VehicleId id : live) {
      obs_rows.push_back(env_.observe(id).data);
      global_rows.push_back(env_.global_state(id));
    }
    std::vector<const std::vector<double>*> op, gp;
    for (std::size_t i = 0; i < live.size(); ++i) {
      op.push_back(&obs_rows[i]);
      gp.push_back(&global_rows[i]);
    }
    const nn::Matrix obs_m = rows_of(op, env_.observation_size());
    const nn::Matrix glob_m = rows_of(gp, env_.global_state_size());
    const auto choices = choose_actions(policy, obs_m, opts.greedy, rng_);
    const nn::Matrix values = nn::forward(policy.critic, glob_m);

    std::map<VehicleId, HighLevelAction> proposed;
    for (std::size_t i = 0; i < live.size(); ++i) proposed[live[i]] = action_from_index(choices[i].action);
    const StepOutcome outcome = env_.step(proposed);
    ++out.env_steps;

    nn::Matrix lsm;
    if (opts.store_corrected_action) lsm = log_softmax(nn::forward(policy.actor, obs_m));
    for (std::size_t i = 0; i < live.size(); ++i) {
      const VehicleId id = live[i];
      Transition t;
      t.obs = std::move(obs_rows[i]);
      t.global = std::move(global_rows[i]);
      t.action = choices[i].action;
      t.log_prob = choices[i].log_prob;
      if (opts.store_corrected_action) {
        t.action = to_index(outcome.info.executed.at(id));
        t.log_prob = lsm(static_cast<Eigen::Index>(i), t.action);
      }
      t.reward = outcome.rewards.at(id);
      t.value = values(static_cast<Eigen::Index>(i), 0);
      t.done = std::find(outcome.finished.begin(), outcome.finished.end(), id) != outcome.finished.end();
      Segment& seg = open_[id];
      seg.agent = id;
      seg.steps.push_back(std::move(t));
      episode_return_ += outcome.rewards.at(id);
      if (seg.steps.back().done) {
        seg.bootstrap = 0.0;
        out.segments.push_back(std::move(seg));
        open_.erase(id);
      }
    }
    if (outcome.done) {
      ++out.episodes_finished;
      out.episode_returns.push_back(episode_return_ / static_cast<double>(env_.cav_ids().size()));
      out.episode_collisions.push_back(outcome.info.cause == TerminalCause::Collision ? 1.0 : 0.0);
    }
  }
  // Cut the still-running trajectories, bootstrapping from the critic.
  for (auto& [id, seg] : open_) {
    if (seg.steps.empty()) continue;
    const std::vector<double> g = env_.global_state(id);
    const nn::Matrix gm = rows_of({&g}, env_.global_state_size());
    Segment cut = seg;
    cut.bootstrap = nn::forward(policy.critic, gm)(0, 0);
    out.segments.push_back(std::move(cut));
    seg.steps.clear();
  }
}

namespace {

void merge_into(RolloutBuffer& dst, RolloutBuffer&& src) {
  for (auto& s : src.segments) dst.segments.push_back(std::move(s));
  dst.env_steps += src.env_steps;
  dst.episodes_finished += src.episodes_finished;
  dst.episode_returns.insert(dst.episode_returns.end(), src.episode_returns.begin(), src.episode_returns.end());
  dst.episode_collisions.insert(dst.episode_collisions.end(), src.episode_collisions.begin(),
                                src.episode_collisions.end());
}

}  // namespace

RolloutBuffer collect_rollout(std::vector<RolloutWorker>& workers, const Policy& policy,
                              int n_steps, const RolloutOptions& opts) {
  std::vector<RolloutBuffer> parts(workers.size());
  const int n = static_cast<int>(workers.size());
#pragma omp parallel for schedule(static)
  for (int w = 0; w < n; ++w) {
    workers[static_cast<std::size_t>(w)].collect(policy, n_steps, opts, parts[static_cast<std::size_t>(w)]);
  }
  RolloutBuffer out;
  for (auto& p : parts) merge_into(out, std::move(p));
  return out;
}

RolloutBuffer collect_rollout_serial(std::vector<RolloutWorker>& workers, const Policy& policy,
                                     int n_steps, const RolloutOptions& opts) {
  RolloutBuffer out;
  for (auto& w : workers) {
    RolloutBuffer part;
    w.collect(policy, n_steps, opts, part);
    merge_into(out, std::move(part));
  }
  return out;
}

Optimizers Optimizers::create(const Policy& policy, double lr) {
  return {nn::Adam(policy.actor.parameter_count(), lr, 0.9, 0.999, 1e-5),
          nn::Adam(policy.critic.parameter_count(), lr, 0.9, 0.999, 1e-5)};
}

MinibatchGrad minibatch_gradient(const Policy& policy, const RolloutBuffer& buffer,
                                 std::span<const std::size_t> idx, const PpoHyper& h) {
  const auto b = static_cast<Eigen::Index>(idx.size());
  nn::Matrix obs(b, buffer.obs.cols());
  nn::Matrix glob(b, buffer.global.cols());
  std::vector<double> old_logp(idx.size()), adv(idx.size()), ret(idx.size());
  for (Eigen::Index i = 0; i < b; ++i) {
    const std::size_t j = idx[static_cast<std::size_t>(i)];
    obs.row(i) = buffer.obs.row(static_cast<Eigen::Index>(j));
    glob.row(i) = buffer.global.row(static_cast<Eigen::Index>(j));
    old_logp[static_cast<std::size_t>(i)] = buffer.old_log_probs[j];
    adv[static_cast<std::size_t>(i)] = buffer.advantages[j];
    ret[static_cast<std::size_t>(i)] = buffer.returns[j];
  }

  const nn::Matrix lsm = log_softmax(nn::forward(policy.actor, obs));
  std::vector<double> new_logp(idx.size());
  for (Eigen::Index i = 0; i < b; ++i) {
    new_logp[static_cast<std::size_t>(i)] = lsm(i, buffer.actions[idx[static_cast<std::size_t>(i)]]);
  }
  MinibatchGrad out;
  out.policy_loss = clip_loss(new_logp, old_logp, adv, h.clip);
  const auto g = clip_loss_grad(new_logp, old_logp, adv, h.clip);

  nn::Matrix dlogits(b, lsm.cols());
  double entropy_sum = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const Eigen::RowVectorXd p = lsm.row(i).array().exp();
    const double ent = -(p.array() * lsm.row(i).array()).sum();
    entropy_sum += ent;
    const int a = buffer.actions[idx[static_cast<std::size_t>(i)]];
    for (Eigen::Index j = 0; j < lsm.cols(); ++j) {
      const double onehot = j == a ? 1.0 : 0.0;
      dlogits(i, j) = g[static_cast<std::size_t>(i)] * (onehot - p(j)) +
                      h.entropy_coef / static_cast<double>(b) * p(j) * (lsm(i, j) + ent);
    }
  }
  out.entropy = entropy_sum / static_cast<double>(b);
  out.actor_grad = nn::backward(policy.actor, obs, dlogits);

  const nn::Matrix v = nn::forward(policy.critic, glob);
  std::vector<double> values(idx.size());
  for (Eigen::Index i = 0; i < b; ++i) values[static_cast<std::size_t>(i)] = v(i, 0);
  out.value_loss = value_loss(values, ret);
  const auto gv = value_loss_grad(values, ret);
  nn::Matrix dv(b, 1);
  for (Eigen::Index i = 0; i < b; ++i) dv(i, 0) = h.value_coef * gv[static_cast<std::size_t>(i)];
  out.critic_grad = nn::backward(policy.critic, glob, dv);
  return out;
}

UpdateStats update(const RolloutBuffer& buffer, Policy& policy, Optimizers& opt, const PpoHyper& h,
                   std::mt19937_64& rng) {
  UpdateStats stats;
  const std::size_t n = buffer.size();
  if (n == 0) return stats;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  double clipped = 0.0;
  double clip_count = 0.0;
  for (int epoch = 0; epoch < h.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(h.minibatch)) {
      const std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(h.minibatch), n - start);
      const std::span<const std::size_t> idx(order.data() + start, len);
      MinibatchGrad mg = minibatch_gradient(policy, buffer, idx, h);
      const double total = mg.policy_loss + h.value_coef * mg.value_loss - h.entropy_coef * mg.entropy;
      if (!std::isfinite(total) || !mg.actor_grad.allFinite() || !mg.critic_grad.allFinite()) {
        std::ostringstream msg;
        msg << "update: non-finite loss (policy " << mg.policy_loss << ", value " << mg.value_loss
            << ", entropy " << mg.entropy << ") at epoch " << epoch << ", minibatch offset " << start;
        throw std::runtime_error(msg.str());
      }
      nn::clip_grad_norm(mg.actor_grad, h.max_grad_norm);
      nn::clip_grad_norm(mg.critic_grad, h.max_grad_norm);
      nn::Vector actor_params = policy.actor.flat();
      opt.actor.step(actor_params, mg.actor_grad);
      policy.actor.set_flat(actor_params);
      nn::Vector critic_params = policy.critic.flat();
      opt.critic.step(critic_params, mg.critic_grad);
      policy.critic.set_flat(critic_params);

      stats.policy_loss += mg.policy_loss;
      stats.value_loss += mg.value_loss;
      stats.entropy += mg.entropy;
      ++stats.minibatches;
    }
  }
  // Clip fraction of the final policy on the whole buffer.
  const nn::Matrix lsm = log_softmax(nn::forward(policy.actor, buffer.obs));
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = std::exp(lsm(static_cast<Eigen::Index>(i), buffer.actions[i]) - buffer.old_log_probs[i]);
    if (std::abs(ratio - 1.0) > h.clip) clipped += 1.0;
    clip_count += 1.0;
  }
  const double m = static_cast<double>(stats.minibatches);
  stats.policy_loss /= m;
  stats.value_loss /= m;
  stats.entropy /= m;
  stats.clip_fraction = clipped / clip_count;
  return stats;
}

}  // namespace mergesim
