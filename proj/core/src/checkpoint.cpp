#include "seld/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

#include "seld/config.hpp"
#include "seld/error.hpp"

namespace seld {
namespace {

constexpr char kMagic[8] = {'S', 'E', 'L', 'D', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint64_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  void store(const ParamStore<float>& ps) {
    pod(static_cast<std::uint32_t>(ps.count()));
    for (const auto& t : ps) {
      str(t.name);
      pod(static_cast<std::uint32_t>(t.shape.size()));
      for (auto d : t.shape) pod(static_cast<std::uint64_t>(d));
      const auto* p = reinterpret_cast<const std::uint8_t*>(t.data.data());
      out.insert(out.end(), p, p + t.data.size() * sizeof(float));
    }
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes(b) {}
  void need(std::size_t n) const {
    if (bytes.size() - pos < n) fail(ErrorKind::format, "checkpoint is truncated");
  }
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  }
  ParamStore<float> store() {
    ParamStore<float> ps;
    const auto count = pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
      auto name = str();
      const auto rank = pod<std::uint32_t>();
      if (rank > 8) fail(ErrorKind::format, "checkpoint tensor '" + name + "' has implausible rank");
      std::vector<std::size_t> shape(rank);
      for (auto& d : shape) d = static_cast<std::size_t>(pod<std::uint64_t>());
      const auto idx = ps.add(std::move(name), std::move(shape));
      auto& data = ps[idx].data;
      need(data.size() * sizeof(float));
      std::memcpy(data.data(), bytes.data() + pos, data.size() * sizeof(float));
      pos += data.size() * sizeof(float);
    }
    return ps;
  }
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.out.insert(w.out.end(), std::begin(kMagic), std::end(kMagic));
  w.pod(kCheckpointVersion);
  w.pod(static_cast<std::uint32_t>(sizeof(float)));
  w.str(to_json_text(c.network));
  w.str(c.run_config);
  w.pod(c.iteration);
  w.store(c.params);
  w.pod(static_cast<std::uint8_t>(c.optimizer ? 1 : 0));
  if (c.optimizer) {
    w.pod(c.optimizer->step);
    w.store(c.optimizer->m);
    w.store(c.optimizer->v);
  }
  return std::move(w.out);
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(sizeof kMagic);
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) fail(ErrorKind::format, "not a checkpoint file");
  r.pos = sizeof kMagic;
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    fail(ErrorKind::compatibility, "unsupported checkpoint version " + std::to_string(version));
  }
  if (r.pod<std::uint32_t>() != sizeof(float)) fail(ErrorKind::compatibility, "checkpoint scalar size differs");
  Checkpoint c;
  c.network = parse_network_config(r.str());
  c.run_config = r.str();
  c.iteration = r.pod<std::int64_t>();
  c.params = r.store();
  if (!c.params.same_layout(EmbedAccdoaNet<float>::make_layout(c.network))) {
    fail(ErrorKind::compatibility, "checkpoint parameters do not match its network configuration");
  }
  if (r.pod<std::uint8_t>() != 0) {
    AdamState s;
    s.step = r.pod<std::int64_t>();
    s.m = r.store();
    s.v = r.store();
    if (!s.m.same_layout(c.params) || !s.v.same_layout(c.params)) {
      fail(ErrorKind::format, "checkpoint optimizer state does not match its parameters");
    }
    c.optimizer = std::move(s);
  }
  if (r.pos != bytes.size()) fail(ErrorKind::format, "trailing bytes after checkpoint payload");
  return c;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const auto bytes = encode_checkpoint(checkpoint);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::io, "failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::io, "cannot move checkpoint into place: " + ec.message());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open checkpoint " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace seld
