#include "pidm/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "nn/optimizer.hpp"
#include "util/errors.hpp"

namespace pidmrl::pidm {

void split_by_episode(const sim::Dataset& data, const WindowSet& ws,
                      double val_fraction, util::Rng& rng,
                      std::vector<std::uint32_t>& train_order,
                      std::vector<std::uint32_t>& val_order) {
  // Episode key = (env_id, episode_id); window belongs to the episode of its
  // target transition.
  auto key_of = [&](std::size_t widx) {
    const auto& rec = data.records[ws.chains[widx].back()];
    return static_cast<std::uint64_t>(rec.env_id) << 32 |
           static_cast<std::uint32_t>(rec.episode_id);
  };
  std::vector<std::uint64_t> keys;
  std::unordered_map<std::uint64_t, std::uint32_t> seen;
  for (std::size_t w = 0; w < ws.size(); ++w) {
    const auto k = key_of(w);
    if (seen.emplace(k, 0).second) keys.push_back(k);
  }
  rng.shuffle(keys);
  const std::size_t n_val_ep =
      static_cast<std::size_t>(std::ceil(val_fraction * keys.size()));
  std::unordered_map<std::uint64_t, bool> is_val;
  for (std::size_t i = 0; i < keys.size(); ++i)
    is_val[keys[i]] = i < n_val_ep;

  train_order.clear();
  val_order.clear();
  for (std::size_t w = 0; w < ws.size(); ++w) {
    if (is_val[key_of(w)])
      val_order.push_back(static_cast<std::uint32_t>(w));
    else
      train_order.push_back(static_cast<std::uint32_t>(w));
  }
}

PretrainResult pretrain(const sim::Dataset& data, const PretrainConfig& cfg) {
  if (cfg.epochs < 1 || cfg.batch_size < 2)
    throw util::ConfigError("pretrain: bad epochs/batch size");
  const WindowSet ws = WindowSet::build(data, cfg.shape.k_hist);
  if (ws.size() < static_cast<std::size_t>(10) * cfg.batch_size)
    throw util::ConfigError(
        "pretrain: dataset too small (need >= 10 batches of windows, have " +
        std::to_string(ws.size()) + ")");

  util::Rng rng = util::Rng(cfg.seed).split(0x91d37ULL);
  util::Rng split_rng = rng.split(1);
  util::Rng init_rng = rng.split(2);
  util::Rng aug_rng = rng.split(3);
  util::Rng val_noise_rng = rng.split(4);
  util::Rng shuffle_rng = rng.split(5);

  std::vector<std::uint32_t> train_order, val_order;
  split_by_episode(data, ws, cfg.val_fraction, split_rng, train_order,
                   val_order);

  PidmNet net(cfg.shape, init_rng);
  PidmGrads grads = net.make_grads();
  PidmCache cache;
  nn::AdamOpt<float> opt({nn::OptKind::AdamW, cfg.lr, 0.9, 0.999, 1e-8,
                          cfg.weight_decay},
                         net.param_blobs());

  // Fixed validation batons: noise drawn once so epochs are comparable.
  MatF vframes, vactions, vdelta, vlabel;
  fill_batch(data, ws, val_order, 0, val_order.size(), vframes, vactions,
             vdelta, vlabel);
  if (cfg.augment_noise) add_frame_noise(vframes, cfg.noise, val_noise_rng);

  PretrainResult res;
  res.train_windows = train_order.size();
  res.val_windows = val_order.size();
  res.val_order = val_order;

  MatF frames, actions, delta, label, d_out;
  std::vector<float> best_params;
  auto snapshot = [&]() {
    best_params.clear();
    for (const auto& b : net.param_blobs())
      best_params.insert(best_params.end(), b.begin(), b.end());
  };
  auto restore = [&]() {
    std::size_t off = 0;
    for (auto& b : net.param_blobs()) {
      std::copy(best_params.begin() + static_cast<std::ptrdiff_t>(off),
                best_params.begin() + static_cast<std::ptrdiff_t>(off + b.size()),
                b.begin());
      off += b.size();
    }
  };

  const std::size_t nb = train_order.size() / cfg.batch_size;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(train_order);
    double train_l1 = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      fill_batch(data, ws, train_order, b * cfg.batch_size, cfg.batch_size,
                 frames, actions, delta, label);
      if (cfg.augment_symmetry)
        augment_symmetry(frames, actions, delta, label, aug_rng);
      if (cfg.augment_noise) add_frame_noise(frames, cfg.noise, aug_rng);
      const MatF& pred = net.forward(frames, actions, delta, cache);
      const float loss = nn::l1_loss(pred, label, &d_out);
      if (!std::isfinite(loss))
        throw util::TrainingDivergence("pretrain: non-finite loss");
      train_l1 += loss;
      grads.zero();
      net.backward(cache, d_out, grads);
      std::vector<std::span<float>> gb;
      for (auto& g : grads.core.proprio.blobs()) gb.push_back(g);
      for (auto& g : grads.core.action.blobs()) gb.push_back(g);
      for (auto& g : grads.core.backbone.blobs()) gb.push_back(g);
      for (auto& g : grads.delta.blobs()) gb.push_back(g);
      for (auto& g : grads.decoder.blobs()) gb.push_back(g);
      std::vector<std::span<const float>> cgb(gb.begin(), gb.end());
      opt.step(net.param_blobs(), cgb);
    }
    train_l1 /= static_cast<double>(nb);

    // Validation in chunks to bound the activation memory.
    double val_l1 = 0.0;
    const int chunk = 4096;
    MatF cf, ca, cd, cl;
    for (int start = 0; start < vframes.rows; start += chunk) {
      const int n = std::min(chunk, vframes.rows - start);
      cf.resize(n, vframes.cols);
      ca.resize(n, vactions.cols);
      cd.resize(n, vdelta.cols);
      cl.resize(n, vlabel.cols);
      std::memcpy(cf.data(), vframes.row(start), sizeof(float) * cf.size());
      std::memcpy(ca.data(), vactions.row(start), sizeof(float) * ca.size());
      std::memcpy(cd.data(), vdelta.row(start), sizeof(float) * cd.size());
      std::memcpy(cl.data(), vlabel.row(start), sizeof(float) * cl.size());
      const MatF& pred = net.forward(cf, ca, cd, cache);
      val_l1 += static_cast<double>(nn::l1_loss(pred, cl)) * n;
    }
    val_l1 /= std::max(1, vframes.rows);

    res.curve.push_back({epoch, train_l1, val_l1});
    if (res.best_epoch < 0 || val_l1 < res.best_val) {
      res.best_epoch = epoch;
      res.best_val = val_l1;
      snapshot();
    }
  }

  restore();
  res.net = std::move(net);
  return res;
}

}  // namespace pidmrl::pidm
