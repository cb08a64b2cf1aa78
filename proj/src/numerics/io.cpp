#include "loongx/numerics/io.h"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "loongx/numerics/errors.h"

namespace loongx {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace binio {

namespace {
template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("unexpected end of binary stream");
  return v;
}
}  // namespace

void put_u8(std::ostream& os, std::uint8_t v) { put(os, v); }
void put_u32(std::ostream& os, std::uint32_t v) { put(os, v); }
void put_u64(std::ostream& os, std::uint64_t v) { put(os, v); }
void put_f32(std::ostream& os, float v) { put(os, v); }
void put_f64(std::ostream& os, double v) { put(os, v); }
void put_str(std::ostream& os, std::string_view s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::uint8_t get_u8(std::istream& is) { return get<std::uint8_t>(is); }
std::uint32_t get_u32(std::istream& is) { return get<std::uint32_t>(is); }
std::uint64_t get_u64(std::istream& is) { return get<std::uint64_t>(is); }
float get_f32(std::istream& is) { return get<float>(is); }
double get_f64(std::istream& is) { return get<double>(is); }
std::string get_str(std::istream& is) {
  const auto n = get_u32(is);
  if (n > (1u << 28)) throw DataError("string length out of range");
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw DataError("unexpected end of binary stream");
  return s;
}
void expect_magic(std::istream& is, std::string_view magic) {
  std::string got(magic.size(), '\0');
  is.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (!is || got != magic) throw DataError("bad magic, expected " + std::string(magic));
}

}  // namespace binio

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write("NFT1", 4);
  binio::put_u32(os, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.shape()) binio::put_u64(os, d);
  const auto data = t.data();
  os.write(reinterpret_cast<const char*>(data.data()),
           static_cast<std::streamsize>(data.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& is) {
  binio::expect_magic(is, "NFT1");
  const auto rank = binio::get_u32(is);
  if (rank > 8) throw DataError("tensor rank out of range");
  Shape shape(rank);
  std::size_t n = 1;
  for (auto& d : shape) {
    d = binio::get_u64(is);
    if (d == 0 || d > (1ULL << 32)) throw DataError("tensor dim out of range");
    n *= d;
  }
  if (n > (1ULL << 30)) throw DataError("tensor too large");
  std::vector<double> data(n);
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw DataError("truncated tensor payload");
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  write_tensor(os, t);
  if (!os) throw DataError("write failed: " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  return read_tensor(is);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os.write("NCK1", 4);
  binio::put_u32(os, static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& [name, t] : ck.tensors) {
    binio::put_str(os, name);
    write_tensor(os, t);
  }
  binio::put_u32(os, static_cast<std::uint32_t>(ck.meta.size()));
  for (const auto& [k, v] : ck.meta) {
    binio::put_str(os, k);
    binio::put_str(os, v);
  }
  if (!os) throw DataError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  binio::expect_magic(is, "NCK1");
  Checkpoint ck;
  const auto nt = binio::get_u32(is);
  for (std::uint32_t i = 0; i < nt; ++i) {
    auto name = binio::get_str(is);
    ck.tensors.emplace(std::move(name), read_tensor(is));
  }
  const auto nm = binio::get_u32(is);
  for (std::uint32_t i = 0; i < nm; ++i) {
    auto k = binio::get_str(is);
    ck.meta.emplace(std::move(k), binio::get_str(is));
  }
  return ck;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_tensor(const Tensor& t) {
  std::ostringstream os;
  write_tensor(os, t);
  return fnv1a64(os.str());
}

std::uint64_t hash_file(const std::filesystem::path& path) { return fnv1a64(read_text(path)); }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!os) throw DataError("write failed: " + path.string());
}

namespace {
std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace

std::map<std::string, std::string> parse_kv(std::string_view text) {
  std::map<std::string, std::string> kv;
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidConfig("line " + std::to_string(lineno) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidConfig("line " + std::to_string(lineno) + ": empty key");
    kv[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

std::map<std::string, std::string> load_kv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidConfig("cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_kv(ss.str());
}

std::string format_kv(const std::map<std::string, std::string>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

namespace {
template <typename T>
void kv_number(const KeyValues& kv, const std::string& key, T& dst, const char* what) {
  const auto it = kv.find(key);
  if (it == kv.end()) return;
  const std::string& v = it->second;
  T out{};
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw InvalidConfig("config key " + key + ": expected " + what + ", got '" + v + "'");
  }
  dst = out;
}
}  // namespace

void kv_read(const KeyValues& kv, const std::string& key, std::size_t& dst) {
  kv_number(kv, key, dst, "a nonnegative integer");
}
void kv_read(const KeyValues& kv, const std::string& key, double& dst) { kv_number(kv, key, dst, "a number"); }

void kv_read(const KeyValues& kv, const std::string& key, bool& dst) {
  const auto it = kv.find(key);
  if (it == kv.end()) return;
  if (it->second == "true" || it->second == "1") {
    dst = true;
  } else if (it->second == "false" || it->second == "0") {
    dst = false;
  } else {
    throw InvalidConfig("config key " + key + ": expected true or false, got '" + it->second + "'");
  }
}

void kv_read(const KeyValues& kv, const std::string& key, std::string& dst) {
  if (const auto it = kv.find(key); it != kv.end()) dst = it->second;
}

std::string fmt_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string rng_state(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void set_rng_state(Rng& rng, const std::string& state) {
  std::istringstream is(state);
  is >> rng;
  if (!is) throw DataError("corrupt RNG state");
}

}  // namespace loongx
