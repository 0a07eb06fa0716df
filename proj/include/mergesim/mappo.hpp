#ifndef MERGESIM_MAPPO_HPP_
#define MERGESIM_MAPPO_HPP_

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "mergesim/env.hpp"
#include "mergesim/mlp.hpp"

namespace mergesim {

struct PpoHyper {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double learning_rate = 3e-4;
  int epochs = 10;
  int minibatch = 64;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  int hidden_units = 128;
  int hidden_layers = 2;

  friend bool operator==(const PpoHyper&, const PpoHyper&) = default;
};

void validate(const PpoHyper& h);

// Generalized advantage estimation over one agent's transitions. dones[t]
// marks that transition t ended the trajectory; bootstrap is V(s_n) used
// after the last transition when it is not terminal.
std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        std::span<const std::uint8_t> dones, double bootstrap, double gamma,
                        double lambda);

// Negated clipped surrogate, averaged over the batch.
double clip_loss(std::span<const double> new_logp, std::span<const double> old_logp,
                 std::span<const double> advantages, double clip);
// d clip_loss / d new_logp.
std::vector<double> clip_loss_grad(std::span<const double> new_logp,
                                   std::span<const double> old_logp,
                                   std::span<const double> advantages, double clip);

double value_loss(std::span<const double> values, std::span<const double> returns);
std::vector<double> value_loss_grad(std::span<const double> values, std::span<const double> returns);

// Shared actor (local observation -> action logits) and centralized critic
// (global state -> value), both tanh MLPs.
struct Policy {
  nn::Mlp actor;
  nn::Mlp critic;

  static Policy create(int obs_size, int global_size, const PpoHyper& h, std::uint64_t seed);
};

// Row-wise log-softmax of a logits matrix.
nn::Matrix log_softmax(const nn::Matrix& logits);

struct Transition {
  std::vector<double> obs;
  std::vector<double> global;
  int action = 0;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
};

// Contiguous transitions of one agent within one episode.
struct Segment {
  VehicleId agent = 0;
  std::vector<Transition> steps;
  double bootstrap = 0.0;
};

struct RolloutBuffer {
  std::vector<Segment> segments;
  long env_steps = 0;
  int episodes_finished = 0;
  std::vector<double> episode_returns;  // mean per-agent return per episode
  std::vector<double> episode_collisions;

  // Filled by finalize().
  nn::Matrix obs;
  nn::Matrix global;
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> values;
  std::vector<double> advantages;  // normalized
  std::vector<double> returns;

  std::size_t size() const { return actions.size(); }
  void finalize(double gamma, double lambda);
};

struct RolloutOptions {
  bool greedy = false;
  bool store_corrected_action = false;
};

// One environment plus the bookkeeping to continue episodes across
// rollout calls.
class RolloutWorker {
 public:
  RolloutWorker(EnvConfig config, std::uint64_t seed, int worker_index);

  // Advances the environment n_steps decision steps, appending to `out`.
  void collect(const Policy& policy, int n_steps, const RolloutOptions& opts, RolloutBuffer& out);

  const MergingEnv& env() const { return env_; }

 private:
  void begin_episode();
  std::uint64_t episode_seed(int episode) const;

  MergingEnv env_;
  std::uint64_t seed_;
  int worker_index_;
  int episode_ = 0;
  std::mt19937_64 rng_;
  std::map<VehicleId, ObservationMatrix> obs_;
  std::map<VehicleId, Segment> open_;
  double episode_return_ = 0.0;
};

// Collects n_steps per worker, workers in parallel (OpenMP); segments are
// merged in worker order so the buffer does not depend on thread count.
RolloutBuffer collect_rollout(std::vector<RolloutWorker>& workers, const Policy& policy,
                              int n_steps, const RolloutOptions& opts);
// Sequential reference of collect_rollout.
RolloutBuffer collect_rollout_serial(std::vector<RolloutWorker>& workers, const Policy& policy,
                                     int n_steps, const RolloutOptions& opts);

// Samples (or takes the argmax of) the actor's distribution.
struct ActionChoice {
  int action = 0;
  double log_prob = 0.0;
};
std::vector<ActionChoice> choose_actions(const Policy& policy, const nn::Matrix& obs, bool greedy,
                                         std::mt19937_64& rng);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  int minibatches = 0;
};

struct Optimizers {
  nn::Adam actor;
  nn::Adam critic;

  static Optimizers create(const Policy& policy, double lr);
};

// K epochs of shuffled minibatch steps on the clipped surrogate, value loss
// and entropy bonus. Throws std::runtime_error on a non-finite loss.
UpdateStats update(const RolloutBuffer& buffer, Policy& policy, Optimizers& opt, const PpoHyper& h,
                   std::mt19937_64& rng);

// Minibatch losses and gradients, exposed for gradient checking.
struct MinibatchGrad {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  nn::Vector actor_grad;
  nn::Vector critic_grad;
};
MinibatchGrad minibatch_gradient(const Policy& policy, const RolloutBuffer& buffer,
                                 std::span<const std::size_t> idx, const PpoHyper& h);

}  // namespace mergesim

#endif  // MERGESIM_MAPPO_HPP_
