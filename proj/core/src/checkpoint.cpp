#include "dcal/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "dcal/errors.hpp"

namespace dcal::gan {
namespace {

void write_u16(std::ostream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f32_array(std::ostream& os, const std::vector<float>& a) {
  write_u64(os, a.size());
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(a.data()),
             static_cast<std::streamsize>(a.size() * sizeof(float)));
  } else {
    for (float f : a) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      unsigned char b[4];
      for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
      os.write(reinterpret_cast<const char*>(b), 4);
    }
  }
}

std::uint16_t read_u16(std::istream& is) {
  unsigned char b[2];
  if (!is.read(reinterpret_cast<char*>(b), 2)) {
    throw DataError("checkpoint: truncated file (u16)");
  }
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) {
    throw DataError("checkpoint: truncated file (u64)");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void read_f32_array_into(std::istream& is, std::vector<float>& a,
                         const std::string& what) {
  const std::uint64_t n = read_u64(is);
  if (n != a.size()) {
    throw DataError("checkpoint: " + what + " has " + std::to_string(n) +
                    " entries, expected " + std::to_string(a.size()));
  }
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(a.data()),
                 static_cast<std::streamsize>(n * sizeof(float)))) {
      throw DataError("checkpoint: truncated file (" + what + ")");
    }
  } else {
    for (std::uint64_t i = 0; i < n; ++i) {
      unsigned char b[4];
      if (!is.read(reinterpret_cast<char*>(b), 4)) {
        throw DataError("checkpoint: truncated file (" + what + ")");
      }
      std::uint32_t u = 0;
      for (int j = 0; j < 4; ++j) u |= static_cast<std::uint32_t>(b[j]) << (8 * j);
      std::memcpy(&a[i], &u, 4);
    }
  }
}

void write_adam(std::ostream& os, const opt::AdamState<float>& st) {
  write_u64(os, static_cast<std::uint64_t>(st.step_count));
  write_u64(os, st.m.size());
  for (std::size_t i = 0; i < st.m.size(); ++i) {
    write_f32_array(os, st.m[i]);
    write_f32_array(os, st.v[i]);
  }
}

void read_adam(std::istream& is, opt::AdamState<float>& st, const char* which) {
  st.step_count = static_cast<std::int64_t>(read_u64(is));
  const std::uint64_t slots = read_u64(is);
  if (slots != st.m.size()) {
    throw DataError(std::string("checkpoint: ") + which + " optimizer has " +
                    std::to_string(slots) + " slots, expected " +
                    std::to_string(st.m.size()));
  }
  for (std::size_t i = 0; i < st.m.size(); ++i) {
    read_f32_array_into(is, st.m[i],
                        std::string(which) + " m[" + std::to_string(i) + "]");
    read_f32_array_into(is, st.v[i],
                        std::string(which) + " v[" + std::to_string(i) + "]");
  }
}

constexpr char kMagic[4] = {'D', 'C', 'A', 'L'};

}  // namespace

void save_checkpoint(const std::string& path,
                     models::GanParams<float>& params,
                     const opt::AdamState<float>& gen_opt,
                     const opt::AdamState<float>& disc_opt,
                     std::uint64_t epoch, std::uint64_t iteration,
                     const Rng& rng, const Digest256& config_fingerprint) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("checkpoint: cannot open '" + path + "' for write");
  os.write(kMagic, 4);
  write_u16(os, kCheckpointVersion);
  os.write(reinterpret_cast<const char*>(config_fingerprint.data()), 32);
  write_u64(os, epoch);
  write_u64(os, iteration);

  const auto refs = params.walk();
  write_u64(os, refs.size());
  for (const auto& r : refs) write_f32_array(os, *r.data);

  write_adam(os, gen_opt);
  write_adam(os, disc_opt);

  const std::string rng_state = rng.serialize();
  write_u64(os, rng_state.size());
  os.write(rng_state.data(), static_cast<std::streamsize>(rng_state.size()));
  if (!os) throw DataError("checkpoint: write to '" + path + "' failed");
}

CheckpointInfo load_checkpoint(const std::string& path,
                               models::GanParams<float>& params,
                               opt::AdamState<float>& gen_opt,
                               opt::AdamState<float>& disc_opt,
                               const Digest256& expected_fingerprint) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open '" + path + "'");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("checkpoint: bad magic in '" + path + "'");
  }
  const std::uint16_t version = read_u16(is);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported format version " +
                    std::to_string(version));
  }
  Digest256 fp{};
  if (!is.read(reinterpret_cast<char*>(fp.data()), 32)) {
    throw DataError("checkpoint: truncated fingerprint");
  }
  if (fp != expected_fingerprint) {
    throw DataError("checkpoint: config fingerprint mismatch (file " +
                    hex_digest(fp) + ", expected " +
                    hex_digest(expected_fingerprint) + ")");
  }
  CheckpointInfo info;
  info.epoch = read_u64(is);
  info.iteration = read_u64(is);

  const auto refs = params.walk();
  const std::uint64_t count = read_u64(is);
  if (count != refs.size()) {
    throw DataError("checkpoint: file has " + std::to_string(count) +
                    " parameter arrays, expected " +
                    std::to_string(refs.size()));
  }
  for (const auto& r : refs) read_f32_array_into(is, *r.data, r.name);

  read_adam(is, gen_opt, "generator");
  read_adam(is, disc_opt, "discriminator");

  const std::uint64_t rng_len = read_u64(is);
  std::string rng_state(rng_len, '\0');
  if (!is.read(rng_state.data(), static_cast<std::streamsize>(rng_len))) {
    throw DataError("checkpoint: truncated RNG state");
  }
  info.rng = Rng::deserialize(rng_state);
  if (is.peek() != std::char_traits<char>::eof()) {
    throw DataError("checkpoint: trailing bytes in '" + path + "'");
  }
  return info;
}

Digest256 read_checkpoint_fingerprint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open '" + path + "'");
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("checkpoint: bad magic in '" + path + "'");
  }
  const std::uint16_t version = read_u16(is);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported format version " +
                    std::to_string(version));
  }
  Digest256 fp{};
  if (!is.read(reinterpret_cast<char*>(fp.data()), 32)) {
    throw DataError("checkpoint: truncated fingerprint");
  }
  return fp;
}

}  // namespace dcal::gan
