#include "pidm/window.hpp"

#include <algorithm>

#include "sim/arm.hpp"
#include "util/errors.hpp"

namespace pidmrl::pidm {

WindowSet WindowSet::build(const sim::Dataset& data, int k_hist) {
  WindowSet ws;
  ws.k_hist = k_hist;

  // Per-env record indices; records of one env appear in time order.
  int max_env = -1;
  for (const auto& r : data.records)
    max_env = std::max(max_env, static_cast<int>(r.env_id));
  std::vector<std::vector<std::uint32_t>> per_env(max_env + 1);
  for (std::uint32_t i = 0; i < data.records.size(); ++i)
    per_env[static_cast<int>(data.records[i].env_id)].push_back(i);

  for (const auto& seq : per_env) {
    for (std::size_t p = 0; p < seq.size(); ++p) {
      if (p < static_cast<std::size_t>(k_hist)) {
        ws.skipped_boundary += 1;
        continue;
      }
      const float ep = data.records[seq[p]].episode_id;
      bool ok = true;
      for (int j = 1; j <= k_hist; ++j)
        if (data.records[seq[p - j]].episode_id != ep) {
          ok = false;
          break;
        }
      if (!ok) {
        ws.skipped_boundary += 1;
        continue;
      }
      std::vector<std::uint32_t> chain(k_hist + 1);
      for (int j = 0; j <= k_hist; ++j) chain[j] = seq[p - k_hist + j];
      ws.chains.push_back(std::move(chain));
    }
  }
  return ws;
}

void fill_pair(const sim::Dataset& data, const WindowSet& ws,
               std::size_t widx, float* frames, float* actions, float* delta,
               float* label, float* q_now) {
  const auto& chain = ws.chains[widx];
  const int k = ws.k_hist;
  // chain[j] is the transition at time t-K+j; chain[k] is the target t.
  const float vs = static_cast<float>(sim::kVelObsScale);
  for (int j = 0; j < k; ++j) {
    const auto& rec = data.records[chain[j + 1]];
    frames[j * 4] = rec.x_t[0];
    frames[j * 4 + 1] = rec.x_t[1];
    frames[j * 4 + 2] = rec.x_t[2] * vs;
    frames[j * 4 + 3] = rec.x_t[3] * vs;
    const auto& arec = data.records[chain[j]];
    actions[j * 2] = arec.a[0];
    actions[j * 2 + 1] = arec.a[1];
  }
  const auto& tgt = data.records[chain[k]];
  delta[0] = static_cast<float>(sim::wrap_diff(tgt.x_tp1[0], tgt.x_t[0]));
  delta[1] = static_cast<float>(sim::wrap_diff(tgt.x_tp1[1], tgt.x_t[1]));
  delta[2] = (tgt.x_tp1[2] - tgt.x_t[2]) * vs;
  delta[3] = (tgt.x_tp1[3] - tgt.x_t[3]) * vs;
  label[0] = tgt.a[0];
  label[1] = tgt.a[1];
  if (q_now) {
    q_now[0] = tgt.x_t[0];
    q_now[1] = tgt.x_t[1];
  }
}

void fill_batch(const sim::Dataset& data, const WindowSet& ws,
                const std::vector<std::uint32_t>& order, std::size_t begin,
                std::size_t count, nn::Mat<float>& frames,
                nn::Mat<float>& actions, nn::Mat<float>& delta,
                nn::Mat<float>& label, nn::Mat<float>* q_now) {
  const int k = ws.k_hist;
  const int n = static_cast<int>(count);
  if (frames.rows != n || frames.cols != k * 4) frames.resize(n, k * 4);
  if (actions.rows != n || actions.cols != k * 2) actions.resize(n, k * 2);
  if (delta.rows != n || delta.cols != 4) delta.resize(n, 4);
  if (label.rows != n || label.cols != 2) label.resize(n, 2);
  if (q_now && (q_now->rows != n || q_now->cols != 2)) q_now->resize(n, 2);
  for (int i = 0; i < n; ++i)
    fill_pair(data, ws, order[begin + i], frames.row(i), actions.row(i),
              delta.row(i), label.row(i), q_now ? q_now->row(i) : nullptr);
}

void mirror_rows(nn::Mat<float>& frames, nn::Mat<float>& actions,
                 nn::Mat<float>& delta, nn::Mat<float>& label,
                 const std::vector<std::uint32_t>& rows) {
  for (const std::uint32_t r : rows) {
    float* f = frames.row(static_cast<int>(r));
    for (int c = 0; c < frames.cols; ++c) {
      // Angle channels wrap; velocity channels just negate. Channel layout
      // per frame is (q1, q2, qd1, qd2).
      if (c % 4 < 2)
        f[c] = static_cast<float>(sim::wrap_angle(-static_cast<double>(f[c])));
      else
        f[c] = -f[c];
    }
    float* a = actions.row(static_cast<int>(r));
    for (int c = 0; c < actions.cols; ++c) a[c] = -a[c];
    float* d = delta.row(static_cast<int>(r));
    for (int c = 0; c < delta.cols; ++c) d[c] = -d[c];
    float* l = label.row(static_cast<int>(r));
    for (int c = 0; c < label.cols; ++c) l[c] = -l[c];
  }
}

std::vector<std::uint32_t> augment_symmetry(nn::Mat<float>& frames,
                                            nn::Mat<float>& actions,
                                            nn::Mat<float>& delta,
                                            nn::Mat<float>& label,
                                            util::Rng& rng) {
  const int n = frames.rows;
  if (n < 2) throw util::ConfigError("augment_symmetry: batch too small");
  std::vector<std::uint32_t> all(n);
  for (int i = 0; i < n; ++i) all[i] = static_cast<std::uint32_t>(i);
  rng.shuffle(all);
  all.resize(static_cast<std::size_t>(n / 2));
  mirror_rows(frames, actions, delta, label, all);
  return all;
}

void add_frame_noise(nn::Mat<float>& frames, const sim::NoiseConfig& noise,
                     util::Rng& rng) {
  for (int i = 0; i < frames.rows; ++i) {
    float* f = frames.row(i);
    for (int c = 0; c < frames.cols; ++c) {
      // Frames carry scaled velocity channels; the noise scales with them.
      const double bound =
          (c % 4 < 2) ? noise.pos : noise.vel * sim::kVelObsScale;
      f[c] += static_cast<float>(rng.uniform(-bound, bound));
    }
  }
}

}  // namespace pidmrl::pidm
