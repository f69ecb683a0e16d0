#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "explore/explore.hpp"
#include "util/rng.hpp"

using namespace pidmrl;
using explore::MatF;

namespace {

pidm::PidmShape tiny_shape() {
  pidm::PidmShape s;
  s.embed = 16;
  s.encoder_hidden = {16};
  s.backbone_hidden = {32, 16};
  s.decoder_hidden = {16};
  return s;
}

MatF const_preds(int n, double v) {
  MatF m(n, 2);
  for (auto& x : m.v) x = static_cast<float>(v);
  return m;
}

}  // namespace

TEST_CASE("disagreement: identical members give zero, hand case gives one") {
  std::vector<double> sigma;
  // All members identical -> zero spread -> zero intrinsic reward.
  std::vector<MatF> same = {const_preds(3, 0.7), const_preds(3, 0.7)};
  explore::disagreement_from_preds(same, 2, sigma);
  for (const double s : sigma) CHECK(s == 0.0);
  CHECK(explore::intrinsic_from_sigma(0.0, 10.0, 30.0) == 0.0);

  // Two members predicting 0 and 2 per dimension: population std 1.
  std::vector<MatF> pair = {const_preds(4, 0.0), const_preds(4, 2.0)};
  explore::disagreement_from_preds(pair, 2, sigma);
  for (const double s : sigma) CHECK(s == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(explore::intrinsic_from_sigma(1.0, 10.0, 30.0) ==
        doctest::Approx(10.0));

  // Spread 5 clips at the threshold 30.
  std::vector<MatF> wide = {const_preds(1, 0.0), const_preds(1, 10.0)};
  explore::disagreement_from_preds(wide, 2, sigma);
  CHECK(sigma[0] == doctest::Approx(5.0).epsilon(1e-7));
  CHECK(explore::intrinsic_from_sigma(sigma[0], 10.0, 30.0) ==
        doctest::Approx(30.0));
}

TEST_CASE("disagreement is invariant under member permutation") {
  util::Rng rng(3);
  std::vector<MatF> preds;
  for (int j = 0; j < 5; ++j) {
    MatF m(6, 2);
    for (auto& x : m.v) x = static_cast<float>(rng.normal());
    preds.push_back(std::move(m));
  }
  std::vector<double> s1, s2;
  explore::disagreement_from_preds(preds, 2, s1);
  std::vector<MatF> shuffled = {preds[3], preds[0], preds[4], preds[1],
                                preds[2]};
  explore::disagreement_from_preds(shuffled, 2, s2);
  for (std::size_t i = 0; i < s1.size(); ++i)
    REQUIRE(s1[i] == doctest::Approx(s2[i]).epsilon(1e-12));
}

TEST_CASE("intrinsic reward range") {
  util::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double s = std::abs(rng.normal(0.0, 3.0));
    const double r = explore::intrinsic_from_sigma(s, 10.0, 30.0);
    REQUIRE(r >= 0.0);
    REQUIRE(r <= 30.0);
  }
}

TEST_CASE("bootstrap resampling basics and distinct fraction") {
  util::Rng rng(7);
  std::vector<std::uint32_t> pool = {42};
  CHECK(explore::bootstrap_resample(pool, 0, rng).empty());
  const auto dup = explore::bootstrap_resample(pool, 5, rng);
  REQUIRE(dup.size() == 5);
  for (const auto v : dup) CHECK(v == 42);

  // Expected distinct fraction of an n-out-of-n bootstrap: 1 - 1/e.
  std::vector<std::uint32_t> big(1000);
  for (std::uint32_t i = 0; i < 1000; ++i) big[i] = i;
  double frac = 0.0;
  const int trials = 30;
  for (int t = 0; t < trials; ++t) {
    const auto sample = explore::bootstrap_resample(big, big.size(), rng);
    std::set<std::uint32_t> distinct(sample.begin(), sample.end());
    frac += static_cast<double>(distinct.size()) / big.size();
  }
  frac /= trials;
  CHECK(frac == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(0.02));
}

TEST_CASE("members trained on different bootstraps diverge, loss improves") {
  sim::EnvConfig ec;
  ec.arm.episode_steps = 25;
  sim::VecEnv envs(ec, 2, 9);
  util::Rng arng(11);
  sim::Dataset data;
  data.manifest = sim::Dataset::make_manifest(ec, "exploration", 9, 4);
  std::vector<sim::Vec2> actions(2);
  std::vector<sim::StepOutput> outs;
  for (int t = 0; t < 120; ++t) {
    for (auto& a : actions)
      a = {arng.uniform(-2.5, 2.5), arng.uniform(-2.5, 2.5)};
    envs.step(actions, outs);
    for (int e = 0; e < 2; ++e) data.append(sim::make_record(outs[e], e));
  }
  const auto ws = pidm::WindowSet::build(data, 4);
  std::vector<std::uint32_t> pool(ws.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    pool[i] = static_cast<std::uint32_t>(i);

  explore::EnsembleConfig ecfg;
  ecfg.size = 2;
  ecfg.retrain_epochs = 5;
  ecfg.batch_size = 32;
  explore::Ensemble ens(tiny_shape(), ecfg, 13);
  util::Rng trng(15);
  const auto losses = ens.train(data, ws, pool, trng);
  CHECK(ens.trained());
  REQUIRE(losses.size() == 2);
  for (const auto& member : losses) {
    REQUIRE(member.size() == 5);
    CHECK(member.back() < member.front());
  }
  // Different bootstrap draws separate the member parameters.
  const auto b0 = ens.member(0).param_blobs();
  const auto b1 = ens.member(1).param_blobs();
  bool any_diff = false;
  for (std::size_t i = 0; i < b0.size() && !any_diff; ++i)
    for (std::size_t k = 0; k < b0[i].size(); ++k)
      if (b0[i][k] != b1[i][k]) {
        any_diff = true;
        break;
      }
  CHECK(any_diff);
}

TEST_CASE("exploration loop: actor frozen until the buffer fills, then moves") {
  sim::EnvConfig ec;
  ec.arm.episode_steps = 20;
  explore::ExploreConfig cfg;
  cfg.iters = 6;
  cfg.num_envs = 4;
  cfg.min_buffer_windows = 220;  // fills during iteration 2 (3 x 96 rows)
  cfg.retrain_interval = 100;    // no retrain in this short run
  cfg.ensemble.size = 2;
  cfg.shape = tiny_shape();
  cfg.policy_hidden = {16, 16};
  cfg.ppo.t_steps = 24;
  cfg.ppo.epochs = 1;
  cfg.ppo.minibatches = 1;
  cfg.ppo.iters = cfg.iters;

  const auto res = explore::collect_exploration_data(ec, cfg, 17);
  REQUIRE(res.log.size() == 6);
  CHECK(res.dataset.size() == 6u * 24u * 4u);

  // While the buffer is short the actor hash must not move, and the
  // intrinsic reward is identically zero.
  int first_updated = -1;
  for (std::size_t i = 0; i < res.log.size(); ++i) {
    if (res.log[i].actor_updated) {
      first_updated = static_cast<int>(i);
      break;
    }
    CHECK(res.log[i].mean_intrinsic == 0.0);
  }
  REQUIRE(first_updated > 0);
  for (int i = 1; i < first_updated; ++i)
    CHECK(res.log[i].actor_param_hash == res.log[0].actor_param_hash);
  CHECK(res.log[first_updated].actor_param_hash !=
        res.log[0].actor_param_hash);
  for (std::size_t i = 0; i < res.log.size(); ++i)
    CHECK(res.log[i].buffer_windows <=
          (i + 1) * static_cast<std::size_t>(24 * 4));
}

TEST_CASE("retrains happen exactly on the configured interval once ready") {
  sim::EnvConfig ec;
  ec.arm.episode_steps = 20;
  explore::ExploreConfig cfg;
  cfg.iters = 7;
  cfg.num_envs = 4;
  cfg.min_buffer_windows = 60;
  cfg.retrain_interval = 2;
  cfg.ensemble.size = 2;
  cfg.ensemble.retrain_epochs = 1;
  cfg.ensemble.batch_size = 32;
  cfg.shape = tiny_shape();
  cfg.policy_hidden = {16, 16};
  cfg.ppo.t_steps = 24;
  cfg.ppo.epochs = 1;
  cfg.ppo.minibatches = 1;

  const auto res = explore::collect_exploration_data(ec, cfg, 19);
  for (const auto& row : res.log) {
    const bool ready = row.buffer_windows >= cfg.min_buffer_windows;
    const bool expect =
        ready && row.iteration % cfg.retrain_interval == 0;
    CHECK(row.retrained == expect);
  }
  CHECK(res.retrains > 0);
}

TEST_CASE("exploration dataset is deterministic given the seed") {
  sim::EnvConfig ec;
  ec.arm.episode_steps = 15;
  explore::ExploreConfig cfg;
  cfg.iters = 3;
  cfg.num_envs = 3;
  cfg.min_buffer_windows = 1u << 30;  // critic-only throughout
  cfg.ensemble.size = 2;
  cfg.shape = tiny_shape();
  cfg.policy_hidden = {16, 16};
  cfg.ppo.t_steps = 10;
  cfg.ppo.epochs = 1;
  cfg.ppo.minibatches = 1;

  const auto r1 = explore::collect_exploration_data(ec, cfg, 23);
  const auto r2 = explore::collect_exploration_data(ec, cfg, 23);
  REQUIRE(r1.dataset.size() == r2.dataset.size());
  const auto* a = reinterpret_cast<const unsigned char*>(r1.dataset.records.data());
  const auto* b = reinterpret_cast<const unsigned char*>(r2.dataset.records.data());
  REQUIRE(std::memcmp(a, b, r1.dataset.size() * sizeof(sim::TransitionRec)) ==
          0);
}
