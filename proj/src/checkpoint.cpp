#include "tripod/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "tripod/config.hpp"
#include "tripod/error.hpp"

namespace tripod {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 4> kMagic = {'T', 'R', 'P', 'D'};
constexpr std::uint8_t kDtypeF64 = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw ConfigError("checkpoint is truncated");
  return v;
}

std::string get_string(std::istream& in, std::uint64_t limit = 1u << 24) {
  const auto n = get<std::uint64_t>(in);
  if (n > limit) throw ConfigError("checkpoint string is implausibly long");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw ConfigError("checkpoint is truncated");
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, config_hash(c.config));
  put_string(out, version());
  put_string(out, config_to_json(c.config));
  put<std::uint64_t>(out, c.step);
  const auto streams = c.rng.streams();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(streams.size()));
  for (const Pcg32& s : streams) {
    put<std::uint64_t>(out, s.state());
    put<std::uint64_t>(out, s.increment());
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(c.arrays.size()));
  for (const auto& a : c.arrays) {
    put_string(out, a.name);
    put<std::uint8_t>(out, kDtypeF64);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.value.rank()));
    for (std::size_t d : a.value.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(a.value.data().data()),
              static_cast<std::streamsize>(a.value.size() * sizeof(double)));
  }
  if (!out) throw Error("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ConfigError("not a checkpoint (bad magic)");
  const auto ver = get<std::uint32_t>(in);
  if (ver != kCheckpointVersion) throw ConfigError("unsupported checkpoint version " + std::to_string(ver));
  const auto hash = get<std::uint64_t>(in);
  get_string(in, 256);  // producer version, informational
  Checkpoint c;
  c.config = config_from_json(get_string(in));
  if (config_hash(c.config) != hash) throw ConfigError("checkpoint config hash mismatch");
  c.step = get<std::uint64_t>(in);
  c.rng = RngState(c.config.seed);
  const auto n_streams = get<std::uint32_t>(in);
  auto& streams = c.rng.streams();
  if (n_streams != streams.size()) throw ConfigError("checkpoint RNG stream count mismatch");
  for (Pcg32& s : streams) {
    const auto state = get<std::uint64_t>(in);
    const auto inc = get<std::uint64_t>(in);
    s.restore(state, inc);
  }
  const auto n_arrays = get<std::uint32_t>(in);
  for (std::uint32_t k = 0; k < n_arrays; ++k) {
    NamedTensor a;
    a.name = get_string(in, 4096);
    if (get<std::uint8_t>(in) != kDtypeF64) throw ConfigError("checkpoint array " + a.name + " has unknown dtype");
    const auto ndim = get<std::uint32_t>(in);
    if (ndim > 8) throw ConfigError("checkpoint array " + a.name + " has too many dimensions");
    Shape shape(ndim);
    std::uint64_t total = 1;
    for (auto& d : shape) {
      d = get<std::uint64_t>(in);
      total *= d;
      if (total > (1ull << 32)) throw ConfigError("checkpoint array " + a.name + " is implausibly large");
    }
    std::vector<double> data(total);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(total * sizeof(double)));
    if (!in) throw ConfigError("checkpoint is truncated");
    a.value = Tensor(std::move(shape), std::move(data));
    c.arrays.push_back(std::move(a));
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace tripod
