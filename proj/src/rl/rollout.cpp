#include "rl/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "rl/gaussian.hpp"

namespace pidmrl::rl {

RolloutCollector::RolloutCollector(sim::VecEnv& envs, int k_hist)
    : envs_(&envs), k_hist_(k_hist), rings_(envs.size()) {
  for (int e = 0; e < envs.size(); ++e) reset_ring(rings_[e], envs.env(e));
}

void RolloutCollector::reset_ring(Ring& r, const sim::ArmEnv& env) const {
  r.frames.assign(static_cast<std::size_t>(k_hist_) * sim::kProprioDim, 0.0f);
  r.actions.assign(static_cast<std::size_t>(k_hist_) * sim::kActionDim, 0.0f);
  r.clean_frames.assign(static_cast<std::size_t>(k_hist_) * sim::kProprioDim,
                        0.0);
  const auto noisy = env.noisy_proprio();
  const auto clean = env.proprio();
  for (int j = 0; j < k_hist_; ++j)
    for (int c = 0; c < sim::kProprioDim; ++c) {
      const double scale = c < 2 ? 1.0 : sim::kVelObsScale;
      r.frames[static_cast<std::size_t>(j) * sim::kProprioDim + c] =
          static_cast<float>(noisy[c] * scale);
      r.clean_frames[static_cast<std::size_t>(j) * sim::kProprioDim + c] =
          clean[c] * scale;
    }
  r.steps_in_episode = 0;
}

void RolloutCollector::push_ring(Ring& r, const sim::Proprio& noisy,
                                 const sim::Proprio& clean,
                                 const sim::Vec2& action) const {
  std::memmove(r.frames.data(), r.frames.data() + sim::kProprioDim,
               sizeof(float) * (r.frames.size() - sim::kProprioDim));
  std::memmove(r.clean_frames.data(), r.clean_frames.data() + sim::kProprioDim,
               sizeof(double) * (r.clean_frames.size() - sim::kProprioDim));
  std::memmove(r.actions.data(), r.actions.data() + sim::kActionDim,
               sizeof(float) * (r.actions.size() - sim::kActionDim));
  const std::size_t foff = r.frames.size() - sim::kProprioDim;
  for (int c = 0; c < sim::kProprioDim; ++c) {
    const double scale = c < 2 ? 1.0 : sim::kVelObsScale;
    r.frames[foff + c] = static_cast<float>(noisy[c] * scale);
    r.clean_frames[foff + c] = clean[c] * scale;
  }
  const std::size_t aoff = r.actions.size() - sim::kActionDim;
  r.actions[aoff] = static_cast<float>(action[0]);
  r.actions[aoff + 1] = static_cast<float>(action[1]);
  r.steps_in_episode += 1;
}

void RolloutCollector::fill_policy_inputs(MatF& obs, MatF& frames,
                                          MatF& actions_hist) const {
  const int n = envs_->size();
  const int fdim = k_hist_ * sim::kProprioDim;
  const int adim = k_hist_ * sim::kActionDim;
  if (obs.rows != n || obs.cols != sim::kObsDim) obs.resize(n, sim::kObsDim);
  if (frames.rows != n || frames.cols != fdim) frames.resize(n, fdim);
  if (actions_hist.rows != n || actions_hist.cols != adim)
    actions_hist.resize(n, adim);
  double tmp[sim::kObsDim];
  for (int e = 0; e < n; ++e) {
    envs_->env(e).observation(tmp);
    for (int c = 0; c < sim::kObsDim; ++c)
      obs.at(e, c) = static_cast<float>(tmp[c]);
    std::memcpy(frames.row(e), rings_[e].frames.data(),
                sizeof(float) * static_cast<std::size_t>(fdim));
    std::memcpy(actions_hist.row(e), rings_[e].actions.data(),
                sizeof(float) * static_cast<std::size_t>(adim));
  }
}

void RolloutCollector::advance_rings(const std::vector<sim::StepOutput>& outs) {
  for (int e = 0; e < envs_->size(); ++e) {
    if (outs[e].done)
      reset_ring(rings_[e], envs_->env(e));
    else
      push_ring(rings_[e], envs_->env(e).noisy_proprio(),
                envs_->env(e).proprio(), outs[e].action);
  }
}

void RolloutCollector::collect(const policy::Net& actor,
                               std::span<const float> log_std,
                               const policy::Net& critic, int t_steps,
                               util::Rng& rng, const CollectOptions& opt,
                               RolloutBatch& out) {
  const int n_envs = envs_->size();
  const int act_dim = sim::kActionDim;
  const int fdim = k_hist_ * sim::kProprioDim;
  const int adim = k_hist_ * act_dim;
  const int flat = t_steps * n_envs;

  out.t_steps = t_steps;
  out.n_envs = n_envs;
  out.obs_dim = sim::kObsDim;
  out.act_dim = act_dim;
  out.obs.resize(flat, sim::kObsDim);
  out.frames.resize(flat, fdim);
  out.actions_hist.resize(flat, adim);
  out.actions.resize(flat, act_dim);
  out.mu_old.resize(flat, act_dim);
  out.rewards.assign(flat, 0.0);
  out.logp_old.assign(flat, 0.0);
  out.values.assign(flat, 0.0);
  out.dones.assign(flat, 0);
  out.bootstrap.assign(n_envs, 0.0);
  out.advantages.assign(flat, 0.0);
  out.returns.assign(flat, 0.0);
  if (opt.keep_transitions) out.steps.resize(flat);
  if (opt.keep_clean_windows) {
    out.clean_frames.resize(flat, fdim);
    out.clean_delta.resize(flat, sim::kProprioDim);
    out.window_complete.assign(flat, 0);
  }
  out.reward_term_sums = sim::RewardTerms{};
  out.episodes_finished = 0;

  std::vector<double> sigma(act_dim);
  for (int d = 0; d < act_dim; ++d)
    sigma[d] = std::exp(static_cast<double>(log_std[d]));

  auto actor_cache = actor.make_cache();
  auto critic_cache = critic.make_cache();
  MatF obs_now, frames_now, actions_now;
  std::vector<sim::Vec2> env_actions(n_envs);
  std::vector<sim::StepOutput> step_out;

  for (int t = 0; t < t_steps; ++t) {
    fill_policy_inputs(obs_now, frames_now, actions_now);
    const std::size_t row0 = static_cast<std::size_t>(t) * n_envs;
    std::memcpy(out.obs.row(static_cast<int>(row0)), obs_now.data(),
                sizeof(float) * obs_now.size());
    std::memcpy(out.frames.row(static_cast<int>(row0)), frames_now.data(),
                sizeof(float) * frames_now.size());
    std::memcpy(out.actions_hist.row(static_cast<int>(row0)),
                actions_now.data(), sizeof(float) * actions_now.size());

    policy::NetInput in{&obs_now, &frames_now, &actions_now};
    const MatF& mu = actor.forward(in, *actor_cache);
    const MatF& val = critic.forward(in, *critic_cache);

    for (int e = 0; e < n_envs; ++e) {
      const int row = static_cast<int>(row0) + e;
      double a[2], m[2];
      for (int d = 0; d < act_dim; ++d) {
        m[d] = static_cast<double>(mu.at(e, d));
        // The stored f32 action is canonical: log-probs here and ratios in
        // later updates must see the exact same value.
        const float af =
            static_cast<float>(m[d] + sigma[d] * rng.normal());
        a[d] = static_cast<double>(af);
        out.actions.at(row, d) = af;
        out.mu_old.at(row, d) = mu.at(e, d);
      }
      out.logp_old[row] = gaussian_log_prob(std::span<const double>(a, 2),
                                            std::span<const double>(m, 2),
                                            sigma);
      out.values[row] = static_cast<double>(val.at(e, 0));
      env_actions[e] = {a[0], a[1]};
    }

    if (opt.keep_clean_windows) {
      for (int e = 0; e < n_envs; ++e) {
        const int row = static_cast<int>(row0) + e;
        for (int c = 0; c < fdim; ++c)
          out.clean_frames.at(row, c) =
              static_cast<float>(rings_[e].clean_frames[c]);
        out.window_complete[row] = rings_[e].steps_in_episode >= k_hist_;
      }
    }

    envs_->step(env_actions, step_out);

    for (int e = 0; e < n_envs; ++e) {
      const int row = static_cast<int>(row0) + e;
      const sim::StepOutput& s = step_out[e];
      out.rewards[row] = s.reward.total();
      out.dones[row] = s.done ? 1 : 0;
      out.reward_term_sums.task += s.reward.task;
      out.reward_term_sums.joint_torque += s.reward.joint_torque;
      out.reward_term_sums.joint_vel += s.reward.joint_vel;
      out.reward_term_sums.joint_acc += s.reward.joint_acc;
      out.reward_term_sums.action_mag += s.reward.action_mag;
      out.reward_term_sums.action_smooth += s.reward.action_smooth;
      out.reward_term_sums.termination += s.reward.termination;
      if (s.done) out.episodes_finished += 1;
      if (opt.keep_transitions) out.steps[row] = s;
      if (opt.keep_clean_windows) {
        out.clean_delta.at(row, 0) =
            static_cast<float>(sim::wrap_diff(s.x_tp1[0], s.x_t[0]));
        out.clean_delta.at(row, 1) =
            static_cast<float>(sim::wrap_diff(s.x_tp1[1], s.x_t[1]));
        out.clean_delta.at(row, 2) = static_cast<float>(
            (s.x_tp1[2] - s.x_t[2]) * sim::kVelObsScale);
        out.clean_delta.at(row, 3) = static_cast<float>(
            (s.x_tp1[3] - s.x_t[3]) * sim::kVelObsScale);
      }
      if (s.done) {
        reset_ring(rings_[e], envs_->env(e));
      } else {
        push_ring(rings_[e], envs_->env(e).noisy_proprio(),
                  envs_->env(e).proprio(), s.action);
      }
    }
  }

  // Bootstrap values on the post-rollout states; terminal last steps get 0.
  fill_policy_inputs(obs_now, frames_now, actions_now);
  policy::NetInput in{&obs_now, &frames_now, &actions_now};
  const MatF& val = critic.forward(in, *critic_cache);
  for (int e = 0; e < n_envs; ++e) {
    const bool last_done =
        out.dones[static_cast<std::size_t>(t_steps - 1) * n_envs + e] != 0;
    out.bootstrap[e] = last_done ? 0.0 : static_cast<double>(val.at(e, 0));
  }
}

ActionStats initial_action_stats(const policy::Net& actor,
                                 std::span<const float> log_std,
                                 const sim::EnvConfig& env_cfg, int k_hist,
                                 int n_samples, std::uint64_t seed) {
  const int batch = 64;
  sim::VecEnv envs(env_cfg, batch, seed);
  RolloutCollector collector(envs, k_hist);
  util::Rng rng = util::Rng(seed).split(0x1417ULL);
  auto cache = actor.make_cache();
  MatF obs, frames, ahist;
  std::vector<double> sigma(2);
  for (int d = 0; d < 2; ++d)
    sigma[d] = std::exp(static_cast<double>(log_std[d]));

  double sum[2] = {0, 0}, sumsq[2] = {0, 0};
  int seen = 0;
  while (seen < n_samples) {
    envs.reset_all();
    collector = RolloutCollector(envs, k_hist);
    collector.fill_policy_inputs(obs, frames, ahist);
    policy::NetInput in{&obs, &frames, &ahist};
    const MatF& mu = actor.forward(in, *cache);
    for (int e = 0; e < batch && seen < n_samples; ++e, ++seen) {
      for (int d = 0; d < 2; ++d) {
        const double a =
            static_cast<double>(mu.at(e, d)) + sigma[d] * rng.normal();
        sum[d] += a;
        sumsq[d] += a * a;
      }
    }
  }
  ActionStats st;
  st.pass = true;
  for (int d = 0; d < 2; ++d) {
    st.mean[d] = sum[d] / n_samples;
    const double var = sumsq[d] / n_samples - st.mean[d] * st.mean[d];
    st.stddev[d] = std::sqrt(std::max(0.0, var));
    if (std::abs(st.mean[d]) >= 0.2 || st.stddev[d] < 0.8 ||
        st.stddev[d] > 1.2)
      st.pass = false;
  }
  return st;
}

}  // namespace pidmrl::rl
