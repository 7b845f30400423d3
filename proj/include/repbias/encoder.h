#ifndef REPBIAS_ENCODER_H_
#define REPBIAS_ENCODER_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repbias/corpus.h"
#include "repbias/embedding_store.h"
#include "repbias/matrix.h"

namespace repbias {

enum class EncodingKind { kAverage, kExtrema, kConvex };

// kSkip ignores out-of-vocabulary tokens; kZero counts them as zero vectors.
enum class OovPolicy { kSkip, kZero };

struct EncodingStrategy {
  EncodingKind kind = EncodingKind::kAverage;
  double lambda = 1.0;  // weight of the average term; used by kConvex only
  OovPolicy oov = OovPolicy::kSkip;

  static EncodingStrategy Average(OovPolicy oov = OovPolicy::kSkip);
  static EncodingStrategy Extrema(OovPolicy oov = OovPolicy::kSkip);
  static EncodingStrategy Convex(double lambda, OovPolicy oov = OovPolicy::kSkip);

  // "avg", "ext" or "convex:<lambda>".
  std::string Label() const;
  // Inverse of Label(). Throws UsageError.
  static EncodingStrategy Parse(const std::string& label, OovPolicy oov = OovPolicy::kSkip);

  bool operator==(const EncodingStrategy&) const = default;
};

// Mean of the token vectors (one term per occurrence). Throws DataError when
// tokens is empty or, under kSkip, no token is in vocabulary.
std::vector<double> EncodeAverage(std::span<const std::string> tokens,
                                  const EmbeddingTable& table, OovPolicy oov);

// Per dimension, the largest value when it strictly exceeds |min|, else the
// smallest value. Same errors as EncodeAverage.
std::vector<double> EncodeExtrema(std::span<const std::string> tokens,
                                  const EmbeddingTable& table, OovPolicy oov);

// lambda * average + (1 - lambda) * extrema. lambda == 1 and lambda == 0
// return the pure encodings bit-for-bit.
std::vector<double> EncodeConvex(std::span<const std::string> tokens,
                                 const EmbeddingTable& table, double lambda,
                                 OovPolicy oov);

// Dispatches on strategy.kind. Absent when the sample cannot be encoded.
std::optional<std::vector<double>> TryEncode(std::span<const std::string> tokens,
                                             const EmbeddingTable& table,
                                             const EncodingStrategy& strategy);

struct EncodingMatrix {
  Matrix rows;
  std::vector<std::string> sample_ids;
  std::vector<int> groups;
  std::vector<int> labels;
  EncodingStrategy strategy;
  std::size_t skipped_token_count = 0;
  std::vector<std::string> dropped_sample_ids;

  std::vector<std::size_t> RowsOfGroup(int group) const;
};

// One row per encodable sample, in corpus order. Throws DataError if every
// sample is dropped.
EncodingMatrix EncodeCorpus(const Corpus& corpus, const EmbeddingTable& table,
                            const EncodingStrategy& strategy);

// `id,v0,...,v{d-1}` with shortest round-trip values.
void WriteEncodingCsv(const EncodingMatrix& encodings, const std::string& path);

}  // namespace repbias

#endif  // REPBIAS_ENCODER_H_
