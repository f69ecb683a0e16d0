#include "nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "util/errors.hpp"

namespace pidmrl::nn {

namespace {
constexpr char kMagic[4] = {'P', 'R', 'L', 'M'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void CheckpointWriter::add_net(const std::string& name,
                               const Mlp<float>& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    layers.push_back({{"in", l.w.cols},
                      {"out", l.w.rows},
                      {"act", act_name(l.act)},
                      {"act_scale", static_cast<double>(l.act_scale)}});
  }
  nets_.push_back({{"name", name},
                   {"layers", layers},
                   {"offset", blob_.size()}});
  for (const auto& l : net.layers()) {
    blob_.insert(blob_.end(), l.w.v.begin(), l.w.v.end());
    blob_.insert(blob_.end(), l.b.begin(), l.b.end());
  }
}

void CheckpointWriter::add_tensor(const std::string& name,
                                  std::span<const float> data) {
  tensors_.push_back(
      {{"name", name}, {"size", data.size()}, {"offset", blob_.size()}});
  blob_.insert(blob_.end(), data.begin(), data.end());
}

void CheckpointWriter::write(const std::string& path) const {
  nlohmann::json manifest = {{"format_version", kVersion},
                             {"byte_order", "little"},
                             {"dtype", "f32"},
                             {"nets", nets_},
                             {"tensors", tensors_},
                             {"meta", meta}};
  const std::string mstr = manifest.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw util::CheckpointError("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  const std::uint32_t ver = kVersion;
  out.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
  const std::uint64_t mlen = mstr.size();
  out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
  out.write(mstr.data(), static_cast<std::streamsize>(mstr.size()));
  out.write(reinterpret_cast<const char*>(blob_.data()),
            static_cast<std::streamsize>(blob_.size() * sizeof(float)));
  if (!out) throw util::CheckpointError("write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw util::CheckpointError("cannot read checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw util::CheckpointError("bad checkpoint magic: " + path);
  std::uint32_t ver = 0;
  in.read(reinterpret_cast<char*>(&ver), sizeof(ver));
  if (ver != kVersion)
    throw util::CheckpointError("unsupported checkpoint version " +
                                std::to_string(ver));
  std::uint64_t mlen = 0;
  in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
  std::string mstr(mlen, '\0');
  in.read(mstr.data(), static_cast<std::streamsize>(mlen));
  if (!in) throw util::CheckpointError("truncated manifest: " + path);

  Checkpoint ck;
  ck.manifest_ = nlohmann::json::parse(mstr, nullptr, false);
  if (ck.manifest_.is_discarded())
    throw util::CheckpointError("unparseable manifest: " + path);
  ck.meta_ = ck.manifest_.value("meta", nlohmann::json::object());

  const auto start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto bytes = in.tellg() - start;
  in.seekg(start);
  ck.blob_.resize(static_cast<std::size_t>(bytes) / sizeof(float));
  in.read(reinterpret_cast<char*>(ck.blob_.data()), bytes);
  if (!in) throw util::CheckpointError("truncated blob: " + path);
  return ck;
}

const nlohmann::json* Checkpoint::find_net(const std::string& name) const {
  for (const auto& n : manifest_.at("nets"))
    if (n.at("name") == name) return &n;
  return nullptr;
}

bool Checkpoint::has_net(const std::string& name) const {
  return find_net(name) != nullptr;
}

std::vector<LayerSpec> Checkpoint::net_spec(const std::string& name) const {
  const auto* entry = find_net(name);
  if (!entry) throw util::CheckpointError("checkpoint has no net: " + name);
  std::vector<LayerSpec> spec;
  for (const auto& l : entry->at("layers"))
    spec.push_back({l.at("in").get<int>(), l.at("out").get<int>(),
                    act_from_name(l.at("act").get<std::string>()),
                    l.at("act_scale").get<double>()});
  return spec;
}

Mlp<float> Checkpoint::make_net(const std::string& name) const {
  Mlp<float> net(net_spec(name));
  load_net(name, net);
  return net;
}

void Checkpoint::load_net(const std::string& name, Mlp<float>& into) const {
  const auto* entry = find_net(name);
  if (!entry) throw util::CheckpointError("checkpoint has no net: " + name);
  const auto spec = net_spec(name);
  const auto have = into.spec();
  if (spec.size() != have.size())
    throw util::CheckpointError("net '" + name + "': layer count mismatch");
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (spec[i].in != have[i].in || spec[i].out != have[i].out ||
        spec[i].act != have[i].act || spec[i].act_scale != have[i].act_scale)
      throw util::CheckpointError("net '" + name + "': layer " +
                                  std::to_string(i) + " mismatch");
  }
  std::size_t off = entry->at("offset").get<std::size_t>();
  for (auto& l : into.layers()) {
    if (off + l.w.size() + l.b.size() > blob_.size())
      throw util::CheckpointError("net '" + name + "': blob out of range");
    std::memcpy(l.w.data(), blob_.data() + off, l.w.size() * sizeof(float));
    off += l.w.size();
    std::memcpy(l.b.data(), blob_.data() + off, l.b.size() * sizeof(float));
    off += l.b.size();
  }
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& t : manifest_.at("tensors"))
    if (t.at("name") == name) return true;
  return false;
}

std::vector<float> Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : manifest_.at("tensors")) {
    if (t.at("name") != name) continue;
    const std::size_t off = t.at("offset").get<std::size_t>();
    const std::size_t size = t.at("size").get<std::size_t>();
    if (off + size > blob_.size())
      throw util::CheckpointError("tensor '" + name + "': blob out of range");
    return {blob_.begin() + static_cast<std::ptrdiff_t>(off),
            blob_.begin() + static_cast<std::ptrdiff_t>(off + size)};
  }
  throw util::CheckpointError("checkpoint has no tensor: " + name);
}

}  // namespace pidmrl::nn
