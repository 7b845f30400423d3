#ifndef REPBIAS_SYNTH_H_
#define REPBIAS_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "repbias/corpus.h"
#include "repbias/embedding_store.h"

namespace repbias {

// Planted-bias fixtures. Word vectors live in R^dim; the first core_dims
// coordinates form the "core" subspace that carries the label signal and
// dominates the variance. Every document has exactly doc_length tokens.
//
//   kPlanted      group 0 uses core words only, so its encodings lie in the
//                 core subspace; group 1 adds off_words_per_doc words with
//                 N(0, strength^2) off-core coordinates. Both encodings are
//                 biased.
//   kExtremaOnly  group 1 adds antipodal word pairs (w, -w off-core). The
//                 pairs cancel in the average but not in the extrema, so only
//                 the extrema encoding is biased.
//   kCrossing     as kExtremaOnly for group 1, while group 0 adds "tilt"
//                 words that move its average but never its extrema (a shared
//                 anchor word dominates every off-core extreme). The gap is
//                 negative under extrema and positive under average.
enum class SynthMode { kPlanted, kExtremaOnly, kCrossing };

struct SynthOptions {
  SynthMode mode = SynthMode::kPlanted;
  std::size_t dim = 20;
  std::size_t core_dims = 5;
  std::size_t docs_per_group = 200;
  std::size_t doc_length = 12;
  std::size_t off_words_per_doc = 3;
  std::size_t core_vocab_per_label = 50;
  std::size_t off_vocab = 60;
  double strength = 1.0;
  double label_separation = 6.0;
  double core_spread = 2.0;
  std::uint64_t seed = 0;
};

struct SynthDocument {
  std::string id;
  std::string text;
  std::string label;  // "neg" or "pos"
  std::string group;  // "group0" or "group1"
};

struct SynthData {
  std::vector<std::pair<std::string, std::vector<double>>> vocabulary;
  std::vector<SynthDocument> documents;
};

SynthMode ParseSynthMode(const std::string& name);
std::string SynthModeName(SynthMode mode);

SynthData GenerateSynthetic(const SynthOptions& options);

// Writes <dir>/embeddings.txt and <dir>/corpus.csv (columns id, text, label,
// group).
void WriteSynthetic(const SynthData& data, const std::filesystem::path& dir);
// The corpus.csv content alone.
void WriteSyntheticCorpus(const SynthData& data, std::ostream& out);

// In-memory equivalents of loading the written files with the default
// profile.
EmbeddingTable SynthTable(const SynthData& data);
Corpus SynthCorpus(const SynthData& data);

}  // namespace repbias

#endif  // REPBIAS_SYNTH_H_
