#include "loongx/datasynth/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "loongx/numerics/errors.h"
#include "loongx/numerics/io.h"

namespace loongx::datasynth {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& xs, char sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

std::string labels_str(const std::vector<int>& labels) {
  std::string out;
  for (int v : labels) out += v ? '1' : '0';
  return out;
}

std::vector<int> parse_labels(const std::string& s) {
  if (s.size() != kNumEditTypes) throw DataError("labels field must have " + std::to_string(kNumEditTypes) + " digits");
  std::vector<int> out;
  for (char c : s) {
    if (c != '0' && c != '1') throw DataError("labels field must be binary: " + s);
    out.push_back(c - '0');
  }
  return out;
}

std::string edits_str(const IntentCode& in) {
  std::vector<std::string> names;
  for (auto e : in.edits) names.push_back(edit_name(e));
  return join(names, ',');
}

std::string file_stem(Modality m) { return sigproc::modality_name(m); }

std::uint64_t parse_u64(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw DataError("bad integer: " + s);
    return v;
  } catch (const std::logic_error&) {
    throw DataError("bad integer: " + s);
  }
}

}  // namespace

EditSample make_sample(const std::string& id, std::uint64_t seed, double snr_db, const IntentConfig& cfg) {
  EditSample s;
  s.id = id;
  s.seed = seed;
  s.source = gen_image(sub_seed(seed, 101));
  Rng intent_rng(sub_seed(seed, 102));
  s.intent = sample_intent(intent_rng, occupied_cells(s.source), cfg);
  s.target = apply_edit(s.source, s.intent);
  s.signals = gen_signals(s.intent, sub_seed(seed, 103), snr_db);
  s.text = instruction_tokens(s.intent);
  s.labels = s.intent.labels();
  return s;
}

void CorpusConfig::validate() const {
  if (n < 10) throw InvalidConfig("corpus size must be >= 10");
  if (!(split_ratio > 0.0 && split_ratio <= 1.0)) throw InvalidConfig("split_ratio must lie in (0, 1]");
  if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity()) {
    throw InvalidConfig("snr_db must be finite or +inf");
  }
}

void CorpusConfig::apply_kv(const KeyValues& kv) {
  kv_read(kv, "n", n);
  std::size_t s = seed;
  kv_read(kv, "seed", s);
  seed = s;
  kv_read(kv, "split_ratio", split_ratio);
  kv_read(kv, "snr_db", snr_db);
  kv_read(kv, "min_magnitude", intent.min_magnitude);
  kv_read(kv, "max_magnitude", intent.max_magnitude);
}

fs::path sample_dir(const fs::path& root, const std::string& id) { return root / "samples" / id; }

std::uint64_t corpus_hash(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("not a corpus directory: " + root.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
  std::sort(files.begin(), files.end());
  std::string listing;
  for (const auto& f : files) listing += f.generic_string() + '\t' + hex64(hash_file(root / f)) + '\n';
  return fnv1a64(listing);
}

void save_sample(const fs::path& dir, const EditSample& s) {
  fs::create_directories(dir);
  save_tensor(dir / "source.nft", s.source);
  save_tensor(dir / "target.nft", s.target);
  for (const auto& [m, rec] : s.signals) {
    sigproc::save_recording(dir / (file_stem(m) + ".lmsg"), rec);
    if (rec.optics) sigproc::save_optics(dir / (file_stem(m) + ".optics"), *rec.optics);
  }
  write_text(dir / "text.txt", join(s.text, ' ') + "\n");
  KeyValues meta{{"id", s.id},
                 {"seed", std::to_string(s.seed)},
                 {"labels", labels_str(s.labels)},
                 {"edits", edits_str(s.intent)},
                 {"cell", std::to_string(s.intent.cell)},
                 {"magnitude", fmt_double(s.intent.magnitude)}};
  write_text(dir / "labels.txt", format_kv(meta));
}

EditSample load_sample(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("sample directory not found: " + dir.string());
  EditSample s;
  const auto meta = load_kv(dir / "labels.txt");
  auto field = [&](const std::string& k) {
    auto it = meta.find(k);
    if (it == meta.end()) throw DataError("labels.txt lacks '" + k + "' in " + dir.string());
    return it->second;
  };
  s.id = field("id");
  s.seed = parse_u64(field("seed"));
  s.labels = parse_labels(field("labels"));
  for (const auto& name : split(field("edits"), ',')) s.intent.edits.push_back(parse_edit(name));
  s.intent.cell = parse_u64(field("cell"));
  s.intent.magnitude = std::stod(field("magnitude"));
  s.intent.validate();
  if (s.intent.labels() != s.labels) throw DataError("labels disagree with edits in " + dir.string());
  s.source = load_tensor(dir / "source.nft");
  s.target = load_tensor(dir / "target.nft");
  s.signals = load_signal_set(dir);
  s.text = load_tokens(dir / "text.txt");
  return s;
}

SignalSet load_signal_set(const fs::path& dir) {
  SignalSet out;
  for (auto m : sigproc::kModalities) {
    auto rec = sigproc::load_recording(dir / (file_stem(m) + ".lmsg"));
    const auto optics = dir / (file_stem(m) + ".optics");
    if (fs::exists(optics)) rec.optics = sigproc::load_optics(optics);
    out[m] = std::move(rec);
  }
  return out;
}

std::vector<std::string> load_tokens(const fs::path& path) {
  std::vector<std::string> out;
  std::istringstream text(read_text(path));
  for (std::string tok; text >> tok;) out.push_back(tok);
  return out;
}

std::vector<ManifestRow> build_corpus(const fs::path& root, const CorpusConfig& cfg) {
  cfg.validate();
  fs::create_directories(root / "samples");
  const auto n_train = std::size_t(std::llround(double(cfg.n) * cfg.split_ratio));
  std::vector<ManifestRow> rows;
  std::ostringstream manifest;
  manifest << "id\tseed\tsplit\tlabels\tedits\tcell\tmagnitude\n";
  for (std::size_t i = 0; i < cfg.n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "s%05zu", i);
    const std::uint64_t seed = sub_seed(cfg.seed, i);
    const EditSample s = make_sample(id, seed, cfg.snr_db, cfg.intent);
    save_sample(sample_dir(root, id), s);
    ManifestRow row{id, seed, i < n_train ? "train" : "test", s.labels, s.intent};
    manifest << row.id << '\t' << row.seed << '\t' << row.split << '\t' << labels_str(row.labels) << '\t'
             << edits_str(row.intent) << '\t' << row.intent.cell << '\t' << fmt_double(row.intent.magnitude) << '\n';
    rows.push_back(std::move(row));
  }
  KeyValues meta{{"n", std::to_string(cfg.n)},
                 {"seed", std::to_string(cfg.seed)},
                 {"split_ratio", fmt_double(cfg.split_ratio)},
                 {"snr_db", fmt_double(cfg.snr_db)},
                 {"min_magnitude", fmt_double(cfg.intent.min_magnitude)},
                 {"max_magnitude", fmt_double(cfg.intent.max_magnitude)}};
  write_text(root / "corpus.cfg", format_kv(meta));
  write_text(root / "manifest.tsv", manifest.str());
  return rows;
}

std::vector<ManifestRow> read_manifest(const fs::path& root) {
  std::istringstream is(read_text(root / "manifest.tsv"));
  std::string line;
  if (!std::getline(is, line) || line.rfind("id\t", 0) != 0) throw DataError("manifest.tsv lacks a header");
  std::vector<ManifestRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 7) throw DataError("manifest row must have 7 fields: " + line);
    ManifestRow r;
    r.id = f[0];
    r.seed = parse_u64(f[1]);
    r.split = f[2];
    if (r.split != "train" && r.split != "test") throw DataError("unknown split: " + r.split);
    r.labels = parse_labels(f[3]);
    for (const auto& name : split(f[4], ',')) r.intent.edits.push_back(parse_edit(name));
    r.intent.cell = parse_u64(f[5]);
    r.intent.magnitude = std::stod(f[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace loongx::datasynth
