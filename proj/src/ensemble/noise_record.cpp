#include "wsde/ensemble/noise_record.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace wsde {

namespace {

template <typename T>
void put_le(std::ostream& os, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  os.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  std::array<unsigned char, sizeof(U)> bytes{};
  is.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!is) throw std::runtime_error("noise record: truncated file");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

constexpr char kMagic[4] = {'W', 'S', 'D', 'E'};

}  // namespace

void NoiseRecord::write(std::ostream& os) const {
  if (n_real != 0 && increments.size() % n_real != 0) {
    throw std::logic_error("noise record: increment count not a multiple of n_real");
  }
  os.write(kMagic, 4);
  put_le<std::uint32_t>(os, kVersion);
  put_le<std::uint32_t>(os, n_real);
  put_le<std::uint64_t>(os, steps());
  put_le<double>(os, dt);
  for (double v : increments) put_le<double>(os, v);
  if (!os) throw std::runtime_error("noise record: write failed");
}

NoiseRecord NoiseRecord::read(std::istream& is) {
  char magic[4] = {};
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("noise record: bad magic");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kVersion) throw std::runtime_error("noise record: unsupported version");
  NoiseRecord rec;
  rec.n_real = get_le<std::uint32_t>(is);
  const auto steps = get_le<std::uint64_t>(is);
  rec.dt = get_le<double>(is);
  if (!(rec.dt > 0.0)) throw std::runtime_error("noise record: invalid dt");
  rec.increments.resize(steps * rec.n_real);
  for (double& v : rec.increments) v = get_le<double>(is);
  return rec;
}

void NoiseRecord::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("noise record: cannot open " + path.string());
  write(os);
}

NoiseRecord NoiseRecord::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("noise record: cannot open " + path.string());
  return read(is);
}

}  // namespace wsde
