#include "rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "rl/gae.hpp"
#include "rl/gaussian.hpp"
#include "util/errors.hpp"

namespace pidmrl::rl {

void PpoConfig::validate(int n_envs) const {
  if (clip_eps <= 0.0 || clip_eps >= 1.0)
    throw util::ConfigError("ppo: clip_eps must be in (0, 1)");
  if (gamma <= 0.0 || gamma > 1.0 || lam <= 0.0 || lam > 1.0)
    throw util::ConfigError("ppo: gamma and lambda must be in (0, 1]");
  if (lr_ratio <= 1.0)
    throw util::ConfigError("ppo: lr_ratio must exceed 1");
  if (lr0 < kLrFloor || lr0 > kLrCeil)
    throw util::ConfigError("ppo: lr0 outside [1e-5, 1e-2]");
  if (t_steps < 1 || epochs < 1 || minibatches < 1 || iters < 1)
    throw util::ConfigError("ppo: counts must be positive");
  if ((t_steps * n_envs) % minibatches != 0)
    throw util::ConfigError("ppo: batch size not divisible into minibatches");
  if (symmetry_weight < 0.0)
    throw util::ConfigError("ppo: symmetry_weight must be >= 0");
}

PpoTrainer::PpoTrainer(sim::VecEnv& envs, std::unique_ptr<policy::Net> actor,
                       std::unique_ptr<policy::Net> critic,
                       const PpoConfig& cfg, std::uint64_t seed, int k_hist)
    : envs_(&envs),
      actor_(std::move(actor)),
      critic_(std::move(critic)),
      log_std_(static_cast<std::size_t>(actor_->out_dim()), 0.0f),
      d_log_std_(log_std_.size(), 0.0f),
      cfg_(cfg),
      lr_(cfg.lr0),
      rng_(util::Rng(seed).split(0x99011ULL)),
      collector_(envs, k_hist) {
  cfg_.validate(envs.size());
  if (actor_->out_dim() > 8)
    throw util::ConfigError("ppo: action dim above supported bound");
  opt_ = nn::AdamOpt<float>({nn::OptKind::Adam, lr_}, all_params());
  actor_cache_ = actor_->make_cache();
  mirror_cache_ = actor_->make_cache();
  critic_cache_ = critic_->make_cache();
}

std::vector<std::span<float>> PpoTrainer::all_params() {
  auto out = actor_->param_blobs();
  out.emplace_back(log_std_);
  for (auto& b : critic_->param_blobs()) out.push_back(b);
  return out;
}

std::vector<std::span<float>> PpoTrainer::all_grads() {
  auto out = actor_->grad_blobs();
  out.emplace_back(d_log_std_);
  for (auto& b : critic_->grad_blobs()) out.push_back(b);
  return out;
}

RolloutBatch& PpoTrainer::collect(const CollectOptions& opt) {
  collector_.collect(*actor_, log_std_, *critic_, cfg_.t_steps, rng_, opt,
                     batch_);
  return batch_;
}

UpdateStats PpoTrainer::update(RolloutBatch& batch, bool update_actor) {
  const int flat = batch.flat();
  const int act_dim = batch.act_dim;
  const int mb_size = flat / cfg_.minibatches;

  compute_gae(batch.rewards, batch.values, batch.bootstrap, batch.dones,
              batch.t_steps, batch.n_envs, cfg_.gamma, cfg_.lam,
              batch.advantages, batch.returns);
  normalize_advantages(batch.advantages);

  std::vector<double> sigma_old(act_dim), sigma_new(act_dim);
  for (int d = 0; d < act_dim; ++d)
    sigma_old[d] = std::exp(static_cast<double>(log_std_[d]));

  std::vector<int> idx(flat);
  std::iota(idx.begin(), idx.end(), 0);

  const bool use_sym = update_actor && cfg_.symmetry_weight > 0.0;
  const auto obs_signs = sim::obs_mirror_signs(envs_->config().task.id);

  MatF mb_obs(mb_size, batch.obs_dim);
  MatF mb_frames(mb_size, batch.frames.cols);
  MatF mb_ahist(mb_size, batch.actions_hist.cols);
  MatF mb_obs_m, mb_frames_m, mb_ahist_m;
  MatF d_mu(mb_size, act_dim), d_mu_m, d_val(mb_size, 1);
  std::vector<double> mu_old_mb(static_cast<std::size_t>(mb_size) * act_dim);
  std::vector<double> mu_new_mb(mu_old_mb.size());

  UpdateStats stats;
  double kl_sum = 0.0;
  int kl_count = 0;

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    rng_.shuffle(idx);
    for (int mb = 0; mb < cfg_.minibatches; ++mb) {
      const int* rows = idx.data() + static_cast<std::size_t>(mb) * mb_size;
      for (int i = 0; i < mb_size; ++i) {
        const int r = rows[i];
        std::memcpy(mb_obs.row(i), batch.obs.row(r),
                    sizeof(float) * batch.obs.cols);
        std::memcpy(mb_frames.row(i), batch.frames.row(r),
                    sizeof(float) * batch.frames.cols);
        std::memcpy(mb_ahist.row(i), batch.actions_hist.row(r),
                    sizeof(float) * batch.actions_hist.cols);
      }
      policy::NetInput in{&mb_obs, &mb_frames, &mb_ahist};

      for (int d = 0; d < act_dim; ++d)
        sigma_new[d] = std::exp(static_cast<double>(log_std_[d]));

      double loss_clip = 0.0, loss_vf = 0.0, loss_sym = 0.0;
      const double entropy = gaussian_entropy(sigma_new);

      actor_->zero_grads();
      critic_->zero_grads();
      std::fill(d_log_std_.begin(), d_log_std_.end(), 0.0f);

      if (update_actor) {
        const MatF& mu = actor_->forward(in, *actor_cache_);
        for (int i = 0; i < mb_size; ++i) {
          const int r = rows[i];
          for (int d = 0; d < act_dim; ++d) {
            mu_old_mb[static_cast<std::size_t>(i) * act_dim + d] =
                static_cast<double>(batch.mu_old.at(r, d));
            mu_new_mb[static_cast<std::size_t>(i) * act_dim + d] =
                static_cast<double>(mu.at(i, d));
          }
        }
        const double kl = gaussian_kl_adaptive(mu_old_mb, sigma_old,
                                               mu_new_mb, sigma_new, mb_size,
                                               act_dim);
        kl_sum += kl;
        kl_count += 1;
        lr_ = adapt_learning_rate(lr_, kl, cfg_.kl_target, cfg_.lr_ratio);

        const double inv_n = 1.0 / mb_size;
        for (int i = 0; i < mb_size; ++i) {
          const int r = rows[i];
          double lp_new = 0.0;
          double z[8];
          for (int d = 0; d < act_dim; ++d) {
            const double a = static_cast<double>(batch.actions.at(r, d));
            const double m =
                mu_new_mb[static_cast<std::size_t>(i) * act_dim + d];
            z[d] = (a - m) / sigma_new[d];
            lp_new += -0.5 * z[d] * z[d] - std::log(sigma_new[d]) -
                      0.5 * 1.8378770664093454836;
          }
          const double ratio = std::exp(lp_new - batch.logp_old[r]);
          const double adv = batch.advantages[r];
          const double s1 = ratio * adv;
          const double rc = std::clamp(ratio, 1.0 - cfg_.clip_eps,
                                       1.0 + cfg_.clip_eps);
          const double s2 = rc * adv;
          loss_clip += -std::min(s1, s2) * inv_n;
          const double d_lp = (s1 <= s2) ? -adv * ratio * inv_n : 0.0;
          for (int d = 0; d < act_dim; ++d) {
            // dlogpi/dmu = (a - mu) / sigma^2 = z / sigma
            d_mu.at(i, d) = static_cast<float>(d_lp * z[d] / sigma_new[d]);
            d_log_std_[d] += static_cast<float>(d_lp * (z[d] * z[d] - 1.0));
          }
        }
        for (int d = 0; d < act_dim; ++d)
          d_log_std_[d] -= static_cast<float>(cfg_.c_ent);

        if (use_sym) {
          if (mb_obs_m.rows != mb_size) {
            mb_obs_m.resize(mb_size, batch.obs_dim);
            mb_frames_m.resize(mb_size, batch.frames.cols);
            mb_ahist_m.resize(mb_size, batch.actions_hist.cols);
            d_mu_m.resize(mb_size, act_dim);
          }
          for (int i = 0; i < mb_size; ++i) {
            for (int c = 0; c < batch.obs_dim; ++c)
              mb_obs_m.at(i, c) = static_cast<float>(obs_signs[c]) *
                                  mb_obs.at(i, c);
            for (int c = 0; c < batch.frames.cols; ++c)
              mb_frames_m.at(i, c) = -mb_frames.at(i, c);
            for (int c = 0; c < batch.actions_hist.cols; ++c)
              mb_ahist_m.at(i, c) = -mb_ahist.at(i, c);
          }
          policy::NetInput in_m{&mb_obs_m, &mb_frames_m, &mb_ahist_m};
          const MatF& mu_m = actor_->forward(in_m, *mirror_cache_);
          const double w = cfg_.symmetry_weight;
          for (int i = 0; i < mb_size; ++i) {
            for (int d = 0; d < act_dim; ++d) {
              // mirror(mu) = -mu, so equivariance error is mu_m + mu.
              const double diff =
                  static_cast<double>(mu_m.at(i, d)) +
                  mu_new_mb[static_cast<std::size_t>(i) * act_dim + d];
              loss_sym += w * diff * diff * inv_n;
              const float g = static_cast<float>(2.0 * w * diff * inv_n);
              d_mu_m.at(i, d) = g;
              d_mu.at(i, d) += g;
            }
          }
          actor_->backward(*mirror_cache_, d_mu_m);
        }
        actor_->backward(*actor_cache_, d_mu);
      }

      const MatF& val = critic_->forward(in, *critic_cache_);
      const double inv_n = 1.0 / mb_size;
      for (int i = 0; i < mb_size; ++i) {
        const int r = rows[i];
        const double v = static_cast<double>(val.at(i, 0));
        const double diff = v - batch.returns[r];
        loss_vf += diff * diff * inv_n;
        d_val.at(i, 0) = static_cast<float>(cfg_.c_vf * 2.0 * diff * inv_n);
      }
      critic_->backward(*critic_cache_, d_val);

      const double total = loss_clip + cfg_.c_vf * loss_vf -
                           cfg_.c_ent * entropy + loss_sym;
      if (!std::isfinite(total))
        throw util::TrainingDivergence("non-finite loss in ppo update");

      auto grads = all_grads();
      nn::clip_grad_norm(grads, cfg_.g_max);
      opt_.set_lr(lr_);
      std::vector<std::span<const float>> cgrads(grads.begin(), grads.end());
      opt_.step(all_params(), cgrads);

      stats.loss_clip = loss_clip;
      stats.loss_vf = loss_vf;
      stats.entropy = entropy;
      stats.loss_sym = loss_sym;
    }
  }

  stats.kl = kl_count ? kl_sum / kl_count : 0.0;
  stats.lr = lr_;
  double sm = 0.0;
  for (int d = 0; d < act_dim; ++d)
    sm += std::exp(static_cast<double>(log_std_[d]));
  stats.sigma_mean = sm / act_dim;
  return stats;
}

void PpoTrainer::save_policy(const std::string& path,
                             const nlohmann::json& extra_meta) const {
  nn::CheckpointWriter w;
  actor_->save_into(w, "actor_");
  critic_->save_into(w, "critic_");
  w.add_tensor("log_std", log_std_);
  w.meta = extra_meta;
  w.meta["kind"] = "policy";
  w.meta["actor_arch"] = actor_->arch_meta();
  w.meta["critic_arch"] = critic_->arch_meta();
  w.write(path);
}

namespace {

std::vector<int> hidden_from_spec(const std::vector<nn::LayerSpec>& spec) {
  std::vector<int> h;
  for (std::size_t i = 0; i + 1 < spec.size(); ++i) h.push_back(spec[i].out);
  return h;
}

}  // namespace

std::unique_ptr<policy::Net> net_from_checkpoint(const nn::Checkpoint& ck,
                                                 const std::string& prefix) {
  const std::string arch_key =
      prefix == "actor_" ? "actor_arch" : "critic_arch";
  const auto arch = ck.meta().at(arch_key);
  util::Rng rng(0);
  std::unique_ptr<policy::Net> net;
  if (arch.at("family") == "vanilla") {
    const auto spec = ck.net_spec(prefix + "mlp");
    net = std::make_unique<policy::VanillaNet>(
        spec.front().in, hidden_from_spec(spec), spec.back().out, 1.0, rng);
  } else {
    pidm::PidmShape shape;
    shape.k_hist = arch.at("k_hist").get<int>();
    shape.embed = arch.at("embed").get<int>();
    const auto penc = ck.net_spec(prefix + "proprio_encoder");
    shape.proprio_dim = penc.front().in;
    shape.encoder_hidden = hidden_from_spec(penc);
    shape.action_dim = ck.net_spec(prefix + "action_encoder").front().in;
    shape.backbone_hidden = hidden_from_spec(ck.net_spec(prefix + "backbone"));
    const auto synth = ck.net_spec(prefix + "synthesizer");
    net = std::make_unique<policy::PidmPolicyNet>(
        shape, arch.at("obs_dim").get<int>(), synth.back().out,
        hidden_from_spec(ck.net_spec(prefix + "intention_encoder")),
        hidden_from_spec(synth), 1.0, rng);
  }
  net->load_from(ck, prefix);
  return net;
}

}  // namespace pidmrl::rl
