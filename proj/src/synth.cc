#include "repbias/synth.h"

#include <cmath>
#include <fstream>

#include "repbias/csv.h"
#include "repbias/error.h"
#include "repbias/random.h"

namespace repbias {
namespace {

constexpr double kAnchor = 1.0;
constexpr double kTiltRange = 0.9;

std::string Join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

}  // namespace

SynthMode ParseSynthMode(const std::string& name) {
  if (name == "planted") return SynthMode::kPlanted;
  if (name == "extrema-only") return SynthMode::kExtremaOnly;
  if (name == "crossing") return SynthMode::kCrossing;
  throw UsageError("unknown synth mode '" + name + "'");
}

std::string SynthModeName(SynthMode mode) {
  switch (mode) {
    case SynthMode::kPlanted:
      return "planted";
    case SynthMode::kExtremaOnly:
      return "extrema-only";
    case SynthMode::kCrossing:
      return "crossing";
  }
  return "?";
}

SynthData GenerateSynthetic(const SynthOptions& o) {
  if (o.core_dims == 0 || o.core_dims >= o.dim) {
    throw UsageError("synth: need 0 < core_dims < dim");
  }
  const std::size_t pairs = o.off_words_per_doc / 2 + (o.off_words_per_doc % 2);
  const std::size_t extras = o.mode == SynthMode::kPlanted ? o.off_words_per_doc : 2 * pairs;
  const std::size_t anchor = o.mode == SynthMode::kCrossing ? 1 : 0;
  if (o.doc_length < extras + anchor + 1) throw UsageError("synth: doc_length too small");
  if (o.docs_per_group < 2 || o.core_vocab_per_label == 0 || o.off_vocab == 0) {
    throw UsageError("synth: sizes must be positive");
  }

  Rng rng(DeriveSeed(o.seed, "synth"));
  SynthData data;
  auto& vocab = data.vocabulary;

  // Core words: label centre on axis 0 plus isotropic spread in the core.
  for (int label = 0; label < 2; ++label) {
    for (std::size_t i = 0; i < o.core_vocab_per_label; ++i) {
      std::vector<double> v(o.dim, 0.0);
      for (std::size_t d = 0; d < o.core_dims; ++d) v[d] = o.core_spread * rng.Normal();
      v[0] += (label == 1 ? 0.5 : -0.5) * o.label_separation;
      vocab.emplace_back("c" + std::to_string(label) + "_" + std::to_string(i), std::move(v));
    }
  }
  // Off-core words (kPlanted) or antipodal pairs (other modes).
  for (std::size_t i = 0; i < o.off_vocab; ++i) {
    std::vector<double> v(o.dim, 0.0);
    for (std::size_t d = o.core_dims; d < o.dim; ++d) {
      if (o.mode == SynthMode::kCrossing) {
        const double mag = kAnchor + o.strength * std::fabs(rng.Normal());
        v[d] = rng.Below(2) ? mag : -mag;
      } else {
        v[d] = o.strength * rng.Normal();
      }
    }
    if (o.mode == SynthMode::kPlanted) {
      vocab.emplace_back("o_" + std::to_string(i), std::move(v));
    } else {
      std::vector<double> mirror = v;
      for (std::size_t d = o.core_dims; d < o.dim; ++d) mirror[d] = -v[d];
      vocab.emplace_back("p_" + std::to_string(i), std::move(v));
      vocab.emplace_back("q_" + std::to_string(i), std::move(mirror));
    }
  }
  if (o.mode == SynthMode::kCrossing) {
    for (std::size_t i = 0; i < o.off_vocab; ++i) {
      std::vector<double> v(o.dim, 0.0);
      for (std::size_t d = o.core_dims; d < o.dim; ++d) {
        v[d] = kTiltRange * (2.0 * rng.Uniform() - 1.0);
      }
      vocab.emplace_back("t_" + std::to_string(i), std::move(v));
    }
    vocab.emplace_back("the", std::vector<double>(o.dim, 0.0));
    for (std::size_t d = o.core_dims; d < o.dim; ++d) vocab.back().second[d] = -kAnchor;
  }

  std::size_t doc_no = 0;
  for (int group = 0; group < 2; ++group) {
    for (std::size_t n = 0; n < o.docs_per_group; ++n) {
      const int label = static_cast<int>(rng.Below(2));
      std::vector<std::string> words;
      // Pairs first and adjacent so that their off-core sum cancels exactly.
      if (group == 1 && o.mode != SynthMode::kPlanted) {
        for (std::size_t p = 0; p < pairs; ++p) {
          const std::string idx = std::to_string(rng.Below(o.off_vocab));
          words.push_back("p_" + idx);
          words.push_back("q_" + idx);
        }
      }
      if (group == 1 && o.mode == SynthMode::kPlanted) {
        for (std::size_t k = 0; k < o.off_words_per_doc; ++k) {
          words.push_back("o_" + std::to_string(rng.Below(o.off_vocab)));
        }
      }
      if (group == 0 && o.mode == SynthMode::kCrossing) {
        for (std::size_t k = 0; k < o.off_words_per_doc; ++k) {
          words.push_back("t_" + std::to_string(rng.Below(o.off_vocab)));
        }
      }
      while (words.size() + anchor < o.doc_length) {
        words.push_back("c" + std::to_string(label) + "_" +
                        std::to_string(rng.Below(o.core_vocab_per_label)));
      }
      if (anchor) words.push_back("the");

      SynthDocument doc;
      doc.id = "d" + std::to_string(doc_no++);
      doc.text = Join(words);
      doc.label = label == 1 ? "pos" : "neg";
      doc.group = group == 1 ? "group1" : "group0";
      data.documents.push_back(std::move(doc));
    }
  }
  return data;
}

void WriteSynthetic(const SynthData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SynthTable(data).Save(dir / "embeddings.txt");
  std::ofstream out(dir / "corpus.csv", std::ios::binary);
  if (!out) throw DataError("cannot write " + (dir / "corpus.csv").string());
  WriteSyntheticCorpus(data, out);
  if (!out) throw DataError("write error on " + (dir / "corpus.csv").string());
}

void WriteSyntheticCorpus(const SynthData& data, std::ostream& out) {
  WriteCsvRow(out, {"id", "text", "label", "group"});
  for (const auto& d : data.documents) WriteCsvRow(out, {d.id, d.text, d.label, d.group});
}

EmbeddingTable SynthTable(const SynthData& data) {
  return EmbeddingTable::FromEntries(data.vocabulary, "<synthetic>");
}

Corpus SynthCorpus(const SynthData& data) {
  Corpus c;
  c.label_names = {"neg", "pos"};
  c.group_names = {"group0", "group1"};
  const PreprocessProfile profile;
  c.profile = profile.name;
  for (const auto& d : data.documents) {
    Sample s;
    s.id = d.id;
    s.text = d.text;
    s.tokens = Tokenize(d.text, profile);
    s.label = d.label == "pos" ? 1 : 0;
    s.group = d.group == "group1" ? 1 : 0;
    c.samples.push_back(std::move(s));
  }
  return c;
}

}  // namespace repbias
