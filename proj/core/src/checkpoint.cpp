#include "vwp/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vwp/errors.hpp"

namespace vwp {

namespace {

constexpr char kMagic[8] = {'V', 'W', 'P', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  std::string str(std::uint64_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::uint64_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorKind::kData, "truncated checkpoint");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const StoryGenModel& model) {
  std::string out(kMagic, sizeof kMagic);
  const std::string cfg = model.config().canonical();
  put_u64(out, cfg.size());
  out += cfg;
  for (const auto& [name, t] : model.params().values()) {
    put_u64(out, name.size());
    out += name;
    put_u64(out, t.rank());
    for (auto e : t.shape()) put_u64(out, e);
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

StoryGenModel deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    fail(ErrorKind::kData, "not a checkpoint (bad magic)");
  }
  Reader r(bytes);
  r.str(sizeof kMagic);
  const ModelConfig config = ModelConfig::parse_canonical(r.str(r.u64()));
  config.validate();
  ParamStore params;
  while (!r.done()) {
    std::string name = r.str(r.u64());
    const std::uint64_t rank = r.u64();
    if (rank > 8) fail(ErrorKind::kData, "implausible tensor rank in checkpoint");
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) e = r.u64();
    Tensor t(shape);
    for (double& v : t.data()) v = std::bit_cast<double>(r.u64());
    params.add(name, std::move(t));
  }
  // Shapes must agree with what the config would build.
  const StoryGenModel reference = build_model(config);
  for (const auto& [name, t] : reference.params().values()) {
    if (!params.contains(name) || params.value(name).shape() != t.shape()) {
      fail(ErrorKind::kData, "checkpoint parameter '" + name + "' missing or misshapen");
    }
  }
  if (params.values().size() != reference.params().values().size()) {
    fail(ErrorKind::kData, "checkpoint has unexpected parameters");
  }
  return StoryGenModel(config, std::move(params));
}

void save_checkpoint(const std::string& path, const StoryGenModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kData, "cannot write checkpoint " + path);
  const std::string bytes = serialize_checkpoint(model);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kData, "short write to " + path);
}

StoryGenModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kData, "cannot read checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize_checkpoint(ss.str());
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace vwp
