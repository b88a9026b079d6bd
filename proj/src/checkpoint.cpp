#include "crgan/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "crgan/errors.hpp"

namespace crgan {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string32(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_string64(std::ostream& os, const std::string& s) {
  put<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("checkpoint truncated");
  return v;
}

std::string get_bytes(std::istream& is, std::uint64_t n) {
  constexpr std::uint64_t kLimit = 1ULL << 32;
  if (n > kLimit) throw Error("checkpoint corrupt: implausible length");
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw Error("checkpoint truncated");
  return s;
}

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  const auto it = std::find_if(tensors.begin(), tensors.end(), [&](const auto& e) { return e.first == name; });
  return it == tensors.end() ? nullptr : &it->second;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open '" + tmp.string() + "' for writing");
    os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    put<std::uint32_t>(os, kCheckpointVersion);
    put_string64(os, ckpt.config_text);
    put<std::int64_t>(os, ckpt.g_updates);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
      put_string32(os, name);
      put<std::uint64_t>(os, t.rows());
      put<std::uint64_t>(os, t.cols());
      os.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    put<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.rng_states.size()));
    for (const auto& [name, state] : ckpt.rng_states) {
      put_string32(os, name);
      put_string64(os, state);
    }
    if (!os) throw Error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint '" + path.string() + "'");
  char magic[sizeof(kCheckpointMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw Error("'" + path.string() + "' is not a checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw Error("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.config_text = get_bytes(is, get<std::uint64_t>(is));
  ckpt.g_updates = get<std::int64_t>(is);
  const auto n_tensors = get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    std::string name = get_bytes(is, get<std::uint32_t>(is));
    const auto rows = get<std::uint64_t>(is);
    const auto cols = get<std::uint64_t>(is);
    if (rows > (1ULL << 24) || cols > (1ULL << 24)) throw Error("checkpoint corrupt: implausible tensor shape");
    std::vector<double> data(rows * cols);
    is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!is) throw Error("checkpoint truncated");
    ckpt.tensors.emplace_back(std::move(name), Tensor(rows, cols, std::move(data)));
  }
  const auto n_rng = get<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_rng; ++i) {
    std::string name = get_bytes(is, get<std::uint32_t>(is));
    std::string state = get_bytes(is, get<std::uint64_t>(is));
    ckpt.rng_states.emplace_back(std::move(name), std::move(state));
  }
  return ckpt;
}

}  // namespace crgan
