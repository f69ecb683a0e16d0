#include "sim/dataset.hpp"

#include <cstring>
#include <fstream>

#include "util/errors.hpp"

namespace pidmrl::sim {

namespace {
constexpr char kMagic[4] = {'P', 'R', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

TransitionRec make_record(const StepOutput& step, int env_id) {
  TransitionRec r;
  for (int i = 0; i < 4; ++i) r.x_t[i] = static_cast<float>(step.x_t[i]);
  r.a[0] = static_cast<float>(step.action[0]);
  r.a[1] = static_cast<float>(step.action[1]);
  for (int i = 0; i < 4; ++i) r.x_tp1[i] = static_cast<float>(step.x_tp1[i]);
  r.done = step.done ? 1.0f : 0.0f;
  r.episode_id = static_cast<float>(step.episode_id);
  r.env_id = static_cast<float>(env_id);
  return r;
}

void Dataset::save(const std::string& path) const {
  nlohmann::json m = manifest;
  m["count"] = records.size();
  const std::string mstr = m.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw util::ConfigError("cannot write dataset: " + path);
  out.write(kMagic, 4);
  const std::uint32_t ver = kVersion;
  out.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
  const std::uint64_t mlen = mstr.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
  out.write(reinterpret_cast<const char*>(records.data()),
            static_cast<std::streamsize>(records.size() *
                                         sizeof(TransitionRec)));
  if (!out) throw util::ConfigError("dataset write failed: " + path);
}

Dataset Dataset::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw util::ConfigError("cannot read dataset: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw util::ConfigError("bad dataset magic: " + path);
  std::uint32_t ver = 0;
  in.read(reinterpret_cast<char*>(&ver), sizeof(ver));
  if (ver != kVersion)
    throw util::ConfigError("unsupported dataset version " +
                            std::to_string(ver));
  std::uint64_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  std::string mstr(mlen, '\0');
  in.read(mstr.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw util::ConfigError("truncated dataset manifest: " + path);

  Dataset d;
  d.manifest = nlohmann::json::parse(mstr, nullptr, false);
  if (d.manifest.is_discarded())
    throw util::ConfigError("unparseable dataset manifest: " + path);
  const std::size_t count = d.manifest.value("count", std::size_t{0});
  d.records.resize(count);
  in.read(reinterpret_cast<char*>(d.records.data()),
          static_cast<std::streamsize>(count * sizeof(TransitionRec)));
  if (!in) throw util::ConfigError("truncated dataset blob: " + path);
  return d;
}

nlohmann::json Dataset::make_manifest(const EnvConfig& cfg,
                                      const std::string& source,
                                      std::uint64_t seed, int k_hist) {
  return {
      {"format_version", kVersion},
      {"source", source},
      {"seed", seed},
      {"k_hist", k_hist},
      {"proprio_channels", {"q1", "q2", "qd1", "qd2"}},
      {"action_channels", {"a1", "a2"}},
      {"record_layout",
       {"x_t[4]", "a_t[2]", "x_tp1[4]", "done", "episode_id", "env_id"}},
      {"embodiment",
       {{"l1", cfg.arm.l1},
        {"l2", cfg.arm.l2},
        {"m1", cfg.arm.m1},
        {"m2", cfg.arm.m2},
        {"gravity", cfg.arm.gravity},
        {"kp", cfg.arm.kp},
        {"kd", cfg.arm.kd},
        {"tau_max", cfg.arm.tau_max},
        {"damping", cfg.arm.damping},
        {"dt", cfg.arm.dt},
        {"substeps", cfg.arm.substeps},
        {"action_limit", cfg.arm.action_limit},
        {"episode_steps", cfg.arm.episode_steps}}},
      {"noise", {{"pos", cfg.noise.pos}, {"vel", cfg.noise.vel}}},
      {"net_input_vel_scale", kVelObsScale},
  };
}

}  // namespace pidmrl::sim
