#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "acceptance.h"
#include "loongx/numerics/io.h"

namespace loongx::acceptance {

namespace fs = std::filesystem;

namespace {

struct Stage {
  std::string name;
  std::string args;                 // after the global options; {R} is the run root
  std::vector<std::string> outputs;  // files or directories under {R}
};

std::string expand(std::string s, const fs::path& root) {
  for (std::size_t at; (at = s.find("{R}")) != std::string::npos;) s.replace(at, 3, root.string());
  return s;
}

/// Relative path and FNV-1a of every regular file under p.
std::string fingerprint(const fs::path& p) {
  if (fs::is_regular_file(p)) return hex64(fnv1a64(read_text(p)));
  std::vector<std::string> lines;
  for (const auto& e : fs::recursive_directory_iterator(p))
    if (e.is_regular_file())
      lines.push_back(fs::relative(e.path(), p).string() + " " + hex64(fnv1a64(read_text(e.path()))));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

}  // namespace

Outcome determinism(const Context& ctx) {
  const std::string cfg = (ctx.source_dir / "configs/tiny.cfg").string();
  const std::vector<Stage> stages = {
      {"synth", "synth --out {R}/corpus", {"corpus", "stdout"}},
      {"preprocess", "preprocess --corpus {R}/corpus --cache {R}/cache", {"cache"}},
      {"pretrain", "pretrain --corpus {R}/corpus --cache {R}/cache --out {R}/pre", {"pre"}},
      {"train", "train --corpus {R}/corpus --cache {R}/cache --init {R}/pre/pretrain.ckpt --out {R}/ft", {"ft"}},
      {"edit",
       "edit --checkpoint {R}/ft/last.ckpt --input {R}/corpus/samples/s00039/source.nft --signals-dir "
       "{R}/corpus/samples/s00039 --out {R}/edit.nft --png {R}/edit.png",
       {"edit.nft", "edit.png"}},
      {"eval", "eval --corpus {R}/corpus --cache {R}/cache --checkpoint {R}/ft/last.ckpt --runs 2 --out {R}/ev --png",
       {"ev"}},
      {"classify", "classify --corpus {R}/corpus --out {R}/cls", {"cls/classify.json"}},
      {"sweep", "sweep --corpus {R}/corpus --out {R}/sw", {"sw/sweep.tsv"}},
  };
  std::vector<fs::path> roots = {ctx.work / "determinism_a", ctx.work / "determinism_b"};
  for (const auto& r : roots) {
    fs::remove_all(r);
    fs::create_directories(r);
  }
  std::size_t identical = 0;
  std::string diverged;
  for (const auto& st : stages) {
    std::vector<std::string> prints(roots.size());
    for (std::size_t i = 0; i < roots.size(); ++i) {
      const fs::path out = roots[i] / "stdout";
      const std::string cmd = "\"" + ctx.cli.string() + "\" --seed 11 --config \"" + cfg + "\" " +
                              expand(st.args, roots[i]) + " > \"" + (roots[i] / (st.name + ".log")).string() + "\" 2>&1";
      const int rc = std::system(cmd.c_str());
      if (rc != 0) return {false, "stage " + st.name + " exited with status " + std::to_string(rc)};
      if (st.name == "synth") fs::copy_file(roots[i] / "synth.log", out, fs::copy_options::overwrite_existing);
      for (const auto& o : st.outputs) prints[i] += o + "\n" + fingerprint(roots[i] / o);
    }
    if (prints[0] == prints[1]) {
      ++identical;
    } else {
      diverged += (diverged.empty() ? "" : ", ") + st.name;
    }
  }
  const std::string hash = read_text(roots[0] / "stdout");
  const auto at = hash.find("corpus_hash\t");
  const std::string corpus_hash = at == std::string::npos ? "?" : hash.substr(at + 12, 16);
  return {identical == stages.size(),
          std::to_string(identical) + "/" + std::to_string(stages.size()) +
              " CLI stages byte-identical on rerun (synth, preprocess, pretrain, train, edit, eval, classify, sweep); "
              "corpus hash " + corpus_hash + (diverged.empty() ? "" : "; diverged: " + diverged)};
}

}  // namespace loongx::acceptance
