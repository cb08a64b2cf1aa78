#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "loongx/numerics/tensor.h"

namespace loongx {

// Little-endian tensor blob: "NFT1", u32 rank, u64 dims[rank], f64 payload.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);
void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

/// Named tensors plus string metadata. Entries are stored sorted by name so the
/// byte stream depends only on contents.
struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> meta;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Raw little-endian primitives shared by the other binary formats.
namespace binio {
void put_u8(std::ostream& os, std::uint8_t v);
void put_u32(std::ostream& os, std::uint32_t v);
void put_u64(std::ostream& os, std::uint64_t v);
void put_f32(std::ostream& os, float v);
void put_f64(std::ostream& os, double v);
void put_str(std::ostream& os, std::string_view s);
std::uint8_t get_u8(std::istream& is);
std::uint32_t get_u32(std::istream& is);
std::uint64_t get_u64(std::istream& is);
float get_f32(std::istream& is);
double get_f64(std::istream& is);
std::string get_str(std::istream& is);
void expect_magic(std::istream& is, std::string_view magic);
}  // namespace binio

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t hash_tensor(const Tensor& t);
std::uint64_t hash_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Parses "key = value" lines; '#' starts a comment. Throws InvalidConfig on
/// malformed lines.
std::map<std::string, std::string> parse_kv(std::string_view text);
std::map<std::string, std::string> load_kv(const std::filesystem::path& path);
std::string format_kv(const std::map<std::string, std::string>& kv);

using KeyValues = std::map<std::string, std::string>;
/// Overwrite `dst` when `key` is present. Throws InvalidConfig when the value
/// does not parse completely as the destination type.
void kv_read(const KeyValues& kv, const std::string& key, std::size_t& dst);
void kv_read(const KeyValues& kv, const std::string& key, double& dst);
void kv_read(const KeyValues& kv, const std::string& key, bool& dst);
void kv_read(const KeyValues& kv, const std::string& key, std::string& dst);

/// Shortest decimal text that parses back to exactly `v`.
std::string fmt_double(double v);

std::string rng_state(const Rng& rng);
void set_rng_state(Rng& rng, const std::string& state);

}  // namespace loongx
