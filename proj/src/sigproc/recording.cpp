#include "loongx/sigproc/recording.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/io.h"

namespace loongx::sigproc {

std::string modality_name(Modality m) {
  switch (m) {
    case Modality::EEG: return "eeg";
    case Modality::fNIRS: return "fnirs";
    case Modality::PPG: return "ppg";
    case Modality::Motion: return "motion";
  }
  throw InvalidConfig("unknown modality");
}

Modality parse_modality(const std::string& s) {
  std::string l(s);
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  for (auto m : kModalities) {
    if (modality_name(m) == l) return m;
  }
  throw InvalidConfig("unknown modality '" + s + "'");
}

void RawRecording::validate() const {
  if (!(rate_hz > 0.0)) throw DataError("recording rate must be positive");
  if (samples.rank() != 2) throw DataError("recording samples must be C x L");
  const bool optical = modality == Modality::fNIRS || modality == Modality::PPG;
  if (optical != optics.has_value()) {
    throw DataError("optics must be present exactly for fNIRS and PPG recordings");
  }
  if (!samples.all_finite()) throw DataError("recording contains non-finite samples");
}

void save_recording(const std::filesystem::path& path, const RawRecording& rec) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path.string() + " for writing");
  os.write("LMSG", 4);
  binio::put_u8(os, static_cast<std::uint8_t>(rec.modality));
  binio::put_f32(os, static_cast<float>(rec.rate_hz));
  binio::put_u32(os, static_cast<std::uint32_t>(rec.channels()));
  binio::put_u64(os, rec.length());
  for (double v : rec.samples.data()) binio::put_f32(os, static_cast<float>(v));
  if (!os) throw DataError("write failed: " + path.string());
  if (rec.optics) {
    auto side = path;
    save_optics(side.replace_extension(".optics"), *rec.optics);
  }
}

RawRecording load_recording(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path.string());
  binio::expect_magic(is, "LMSG");
  RawRecording rec;
  const auto code = binio::get_u8(is);
  if (code > 3) throw DataError("unknown modality code " + std::to_string(code));
  rec.modality = static_cast<Modality>(code);
  rec.rate_hz = binio::get_f32(is);
  const auto c = binio::get_u32(is);
  const auto l = binio::get_u64(is);
  if (c == 0 || l == 0 || c > 4096 || l > (1ULL << 28)) throw DataError("recording dims out of range");
  std::vector<float> raw(static_cast<std::size_t>(c) * l);
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!is) throw DataError("truncated recording " + path.string());
  rec.samples = Tensor({c, static_cast<std::size_t>(l)}, std::vector<double>(raw.begin(), raw.end()));
  if (rec.modality == Modality::fNIRS || rec.modality == Modality::PPG) {
    auto side = path;
    side.replace_extension(".optics");
    if (!std::filesystem::exists(side)) throw DataError("missing optics sidecar " + side.string());
    rec.optics = load_optics(side);
  }
  rec.validate();
  return rec;
}

void save_optics(const std::filesystem::path& path, const Optics& o) {
  std::map<std::string, std::string> kv;
  kv["wavelength_1_nm"] = fmt_double(o.wavelengths_nm[0]);
  kv["wavelength_2_nm"] = fmt_double(o.wavelengths_nm[1]);
  kv["pathlength_mm"] = fmt_double(o.pathlength_mm);
  kv["dpf"] = fmt_double(o.dpf);
  kv["eps_hbo_1"] = fmt_double(o.extinction[0][0]);
  kv["eps_hbr_1"] = fmt_double(o.extinction[0][1]);
  kv["eps_hbo_2"] = fmt_double(o.extinction[1][0]);
  kv["eps_hbr_2"] = fmt_double(o.extinction[1][1]);
  std::string base;
  for (double v : o.baseline.data()) base += (base.empty() ? "" : ",") + fmt_double(v);
  kv["baseline"] = base;
  write_text(path, format_kv(kv));
}

namespace {
double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidConfig("optics key " + key + ": not a number: '" + v + "'");
  }
}
}  // namespace

Optics optics_from_kv(const std::map<std::string, std::string>& kv, Optics o) {
  auto get = [&](const char* k, double& dst) {
    if (auto it = kv.find(k); it != kv.end()) dst = to_double(k, it->second);
  };
  get("wavelength_1_nm", o.wavelengths_nm[0]);
  get("wavelength_2_nm", o.wavelengths_nm[1]);
  get("pathlength_mm", o.pathlength_mm);
  get("dpf", o.dpf);
  get("eps_hbo_1", o.extinction[0][0]);
  get("eps_hbr_1", o.extinction[0][1]);
  get("eps_hbo_2", o.extinction[1][0]);
  get("eps_hbr_2", o.extinction[1][1]);
  if (auto it = kv.find("baseline"); it != kv.end() && !it->second.empty()) {
    std::vector<double> vals;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(to_double("baseline", tok));
    const std::size_t n = vals.size();
    o.baseline = Tensor({n}, std::move(vals));
  }
  return o;
}

Optics load_optics(const std::filesystem::path& path) { return optics_from_kv(parse_kv(read_text(path))); }

}  // namespace loongx::sigproc
