#include <stdexcept>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "doctest.h"
#include "mergesim/mappo.hpp"
#include "support/oracles.hpp"

using namespace mergesim;

namespace {

double fd_clip(std::vector<double> lp, const std::vector<double>& old, const std::vector<double>& adv,
               std::size_t i, double eps) {
  lp[i] += eps;
  const double up = clip_loss(lp, old, adv, 0.2);
  lp[i] -= 2 * eps;
  const double down = clip_loss(lp, old, adv, 0.2);
  return (up - down) / (2 * eps);
}

EnvConfig small_env() {
  EnvConfig cfg;
  cfg.horizon = 30;
  return cfg;
}

PpoHyper small_net() {
  PpoHyper h;
  h.hidden_units = 32;
  return h;
}

RolloutBuffer rollout(int n_steps, std::uint64_t seed, bool greedy = false) {
  const EnvConfig env = small_env();
  MergingEnv probe(env);
  const Policy pol = Policy::create(probe.observation_size(), probe.global_state_size(), small_net(), seed);
  std::vector<RolloutWorker> workers;
  for (int w = 0; w < 2; ++w) workers.emplace_back(env, seed, w);
  RolloutBuffer buf = collect_rollout(workers, pol, n_steps, {greedy, false});
  buf.finalize(0.99, 0.95);
  return buf;
}

}  // namespace

TEST_CASE("advantage estimation examples") {
  const std::vector<double> zeros(4, 0.0);
  const std::vector<std::uint8_t> none(4, 0);
  for (double a : gae(zeros, zeros, none, 0.0, 0.99, 0.95)) CHECK(a == 0.0);

  const std::vector<double> one{1.0}, v0{0.0};
  const std::vector<std::uint8_t> done{1};
  CHECK(gae(one, v0, done, 123.0, 0.99, 0.95)[0] == 1.0);

  const std::vector<double> r{1, 0, 1}, v{0.5, 0.4, 0.3};
  const std::vector<std::uint8_t> d{0, 0, 1};
  const auto adv = gae(r, v, d, 0.0, 0.99, 0.95);
  const auto ref = oracle::gae_nested(r, v, {0, 0, 1}, 0.0, 0.99, 0.95);
  // delta = (0.896, -0.004, 0.7)
  const double d0 = 1 + 0.99 * 0.4 - 0.5, d1 = 0.99 * 0.3 - 0.4, d2 = 1 - 0.3;
  const double gl = 0.99 * 0.95;
  CHECK(adv[2] == doctest::Approx(d2).epsilon(1e-12));
  CHECK(adv[1] == doctest::Approx(d1 + gl * d2).epsilon(1e-12));
  CHECK(adv[0] == doctest::Approx(d0 + gl * d1 + gl * gl * d2).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) CHECK(std::fabs(adv[i] - ref[i]) < 1e-12);
}

TEST_CASE("advantage estimation rejects misaligned inputs") {
  const std::vector<double> r{1, 2}, v{1};
  const std::vector<std::uint8_t> d{0, 0};
  CHECK_THROWS_AS(gae(r, v, d, 0, 0.99, 0.95), std::invalid_argument);
}

TEST_CASE("advantage estimation agrees with the nested sum on random sequences") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const int len = 1 + trial % 50;
    std::vector<double> r(len), v(len);
    std::vector<std::uint8_t> d(len);
    std::vector<int> di(len);
    for (int i = 0; i < len; ++i) {
      r[i] = n(rng);
      v[i] = n(rng);
      di[i] = d[i] = (rng() % 9 == 0);
    }
    const double boot = n(rng);
    const auto a = gae(r, v, d, boot, 0.97, 0.9);
    const auto b = oracle::gae_nested(r, v, di, boot, 0.97, 0.9);
    for (int i = 0; i < len; ++i) CHECK(std::fabs(a[i] - b[i]) < 1e-8);
  }
}

TEST_CASE("clipped surrogate examples") {
  const std::vector<double> zero{0.0, 0.0}, adv{1.5, -0.5};
  CHECK(clip_loss(zero, zero, adv, 0.2) == doctest::Approx(-0.5));
  const std::vector<double> up{std::log(1.5)}, down{std::log(0.5)}, z{0.0};
  const std::vector<double> pos{1.0}, neg{-1.0};
  CHECK(clip_loss(up, z, pos, 0.2) == doctest::Approx(-1.2).epsilon(1e-14));
  CHECK(clip_loss(down, z, neg, 0.2) == doctest::Approx(0.8).epsilon(1e-14));
  // Clipped branches carry no gradient.
  CHECK(clip_loss_grad(up, z, pos, 0.2)[0] == 0.0);
  CHECK(clip_loss_grad(down, z, neg, 0.2)[0] == 0.0);
}

TEST_CASE("value loss examples") {
  const std::vector<double> same{1, 2, 3};
  CHECK(value_loss(same, same) == 0.0);
  CHECK(value_loss(std::vector<double>{0.0}, std::vector<double>{2.0}) == 4.0);
  CHECK(value_loss(std::vector<double>{1, 0, -1}, std::vector<double>{2, 0, 1}) == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("loss gradients match central differences") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t b = 3 + trial % 5;
    std::vector<double> lp(b), old(b), adv(b), v(b), ret(b);
    for (std::size_t i = 0; i < b; ++i) {
      old[i] = -std::fabs(n(rng));
      lp[i] = old[i] + 0.4 * n(rng);
      adv[i] = n(rng);
      v[i] = n(rng);
      ret[i] = n(rng);
    }
    const auto g = clip_loss_grad(lp, old, adv, 0.2);
    for (std::size_t i = 0; i < b; ++i) {
      const double ratio = std::exp(lp[i] - old[i]);
      if (std::fabs(ratio - 0.8) < 1e-4 || std::fabs(ratio - 1.2) < 1e-4) continue;  // kink
      const double fd = fd_clip(lp, old, adv, i, 1e-6);
      CHECK(std::fabs(fd - g[i]) <= 1e-4 * std::max(1e-3, std::fabs(fd)));
    }
    const auto gv = value_loss_grad(v, ret);
    for (std::size_t i = 0; i < b; ++i) {
      auto vp = v, vm = v;
      vp[i] += 1e-6;
      vm[i] -= 1e-6;
      const double fd = (value_loss(vp, ret) - value_loss(vm, ret)) / 2e-6;
      CHECK(std::fabs(fd - gv[i]) <= 1e-4 * std::max(1e-3, std::fabs(fd)));
    }
  }
}

TEST_CASE("actor distribution is normalised") {
  const Policy pol = Policy::create(25, 150, small_net(), 3);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 3);
  nn::Matrix x(64, 25);
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) x(i, j) = n(rng);
  }
  const nn::Matrix lsm = log_softmax(nn::forward(pol.actor, x));
  for (int i = 0; i < lsm.rows(); ++i) CHECK(std::fabs(lsm.row(i).array().exp().sum() - 1.0) < 1e-6);
  nn::Matrix huge(1, 5);
  huge << 1000, -1000, 999, 0, 3;
  CHECK(std::fabs(log_softmax(huge).row(0).array().exp().sum() - 1.0) < 1e-12);
}

TEST_CASE("rollout edge cases and determinism") {
  CHECK(rollout(0, 1).size() == 0);
  const auto a = rollout(40, 2, true);
  const auto b = rollout(40, 2, true);
  CHECK(a.actions == b.actions);
  CHECK(a.advantages == b.advantages);
  CHECK(a.obs == b.obs);
  const auto s1 = rollout(40, 3);
  const auto s2 = rollout(40, 3);
  CHECK(s1.actions == s2.actions);
  CHECK(s1.old_log_probs == s2.old_log_probs);
}

TEST_CASE("random policy for 1000 steps crosses episode boundaries") {
  const EnvConfig env;  // horizon 100
  MergingEnv probe(env);
  const Policy pol = Policy::create(probe.observation_size(), probe.global_state_size(), small_net(), 4);
  std::vector<RolloutWorker> w;
  w.emplace_back(env, 4, 0);
  const auto buf = collect_rollout(w, pol, 1000, {});
  CHECK(buf.env_steps == 1000);
  CHECK(buf.episodes_finished >= 10);
}

TEST_CASE("parallel collection equals the serial reference") {
  const EnvConfig env = small_env();
  MergingEnv probe(env);
  const Policy pol = Policy::create(probe.observation_size(), probe.global_state_size(), small_net(), 9);
  std::vector<RolloutWorker> w1, w2;
  for (int i = 0; i < 3; ++i) {
    w1.emplace_back(env, 9, i);
    w2.emplace_back(env, 9, i);
  }
  for (int round = 0; round < 2; ++round) {
    auto p = collect_rollout(w1, pol, 25, {});
    auto s = collect_rollout_serial(w2, pol, 25, {});
    p.finalize(0.99, 0.95);
    s.finalize(0.99, 0.95);
    CHECK(p.actions == s.actions);
    CHECK(p.returns == s.returns);
    CHECK(p.episode_returns == s.episode_returns);
  }
}

TEST_CASE("normalised advantages have zero mean and unit spread") {
  const auto buf = rollout(60, 5);
  REQUIRE(buf.size() > 10);
  const double n = static_cast<double>(buf.size());
  const double mean = std::accumulate(buf.advantages.begin(), buf.advantages.end(), 0.0) / n;
  double var = 0;
  for (double a : buf.advantages) var += (a - mean) * (a - mean);
  CHECK(std::fabs(mean) < 1e-9);
  CHECK(std::sqrt(var / n) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("minibatch gradients match finite differences of the full objective") {
  RolloutBuffer buf = rollout(12, 6);
  REQUIRE(buf.size() >= 3);
  PpoHyper h = small_net();
  MergingEnv probe(small_env());
  Policy pol = Policy::create(probe.observation_size(), probe.global_state_size(), h, 6);
  // Perturb the actor so that some ratios differ from one.
  nn::Vector ap = pol.actor.flat();
  for (Eigen::Index i = 0; i < ap.size(); i += 7) ap(i) += 0.05;
  pol.actor.set_flat(ap);
  const std::vector<std::size_t> idx{0, 1, 2};
  const auto g = minibatch_gradient(pol, buf, idx, h);
  auto actor_obj = [&](const Policy& p) {
    const auto m = minibatch_gradient(p, buf, idx, h);
    return m.policy_loss - h.entropy_coef * m.entropy;
  };
  auto critic_obj = [&](const Policy& p) { return h.value_coef * minibatch_gradient(p, buf, idx, h).value_loss; };
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const bool actor = trial % 2 == 0;
    nn::Vector p0 = actor ? pol.actor.flat() : pol.critic.flat();
    const Eigen::Index i = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(p0.size()));
    Policy plus = pol, minus = pol;
    nn::Vector pp = p0, pm = p0;
    pp(i) += 1e-6;
    pm(i) -= 1e-6;
    (actor ? plus.actor : plus.critic).set_flat(pp);
    (actor ? minus.actor : minus.critic).set_flat(pm);
    const double fd = actor ? (actor_obj(plus) - actor_obj(minus)) / 2e-6
                            : (critic_obj(plus) - critic_obj(minus)) / 2e-6;
    const double an = actor ? g.actor_grad(i) : g.critic_grad(i);
    CHECK(std::fabs(fd - an) <= 1e-4 * std::max(1e-4, std::fabs(fd)) + 1e-9);
  }
}

TEST_CASE("one update keeps most ratios within twice the clip range") {
  RolloutBuffer buf = rollout(128, 7);
  PpoHyper h = small_net();
  MergingEnv probe(small_env());
  Policy pol = Policy::create(probe.observation_size(), probe.global_state_size(), h, 7);
  Optimizers opt = Optimizers::create(pol, h.learning_rate);
  std::mt19937_64 rng(7);
  const auto stats = update(buf, pol, opt, h, rng);
  CHECK(std::isfinite(stats.policy_loss));
  const nn::Matrix lsm = log_softmax(nn::forward(pol.actor, buf.obs));
  std::size_t inside = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const double ratio = std::exp(lsm(static_cast<Eigen::Index>(i), buf.actions[i]) - buf.old_log_probs[i]);
    inside += ratio >= 1 - 2 * h.clip && ratio <= 1 + 2 * h.clip;
  }
  CHECK(static_cast<double>(inside) >= 0.95 * static_cast<double>(buf.size()));
}

TEST_CASE("zero advantages and exact values leave only the entropy push") {
  RolloutBuffer buf = rollout(30, 8);
  for (auto& a : buf.advantages) a = 0.0;
  PpoHyper h = small_net();
  MergingEnv probe(small_env());
  Policy pol = Policy::create(probe.observation_size(), probe.global_state_size(), h, 8);
  const nn::Matrix v = nn::forward(pol.critic, buf.global);
  for (std::size_t i = 0; i < buf.size(); ++i) buf.returns[i] = v(static_cast<Eigen::Index>(i), 0);
  std::vector<std::size_t> idx(buf.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto g = minibatch_gradient(pol, buf, idx, h);
  CHECK(g.critic_grad.cwiseAbs().maxCoeff() == 0.0);
  PpoHyper no_entropy = h;
  no_entropy.entropy_coef = 0.0;
  CHECK(minibatch_gradient(pol, buf, idx, no_entropy).actor_grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("non-finite data aborts the update") {
  RolloutBuffer buf = rollout(20, 9);
  buf.advantages[0] = std::nan("");
  PpoHyper h = small_net();
  MergingEnv probe(small_env());
  Policy pol = Policy::create(probe.observation_size(), probe.global_state_size(), h, 9);
  Optimizers opt = Optimizers::create(pol, h.learning_rate);
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(update(buf, pol, opt, h, rng), std::runtime_error);
}

TEST_CASE("hyperparameter validation") {
  PpoHyper h;
  CHECK_NOTHROW(validate(h));
  h.gamma = 0.0;
  CHECK_THROWS(validate(h));
  h = {};
  h.clip = 1.0;
  CHECK_THROWS(validate(h));
  h = {};
  h.lambda = 1.5;
  CHECK_THROWS(validate(h));
}
