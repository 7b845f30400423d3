#include "repbias/encoder.h"

#include <cmath>
#include <fstream>

#include "repbias/csv.h"
#include "repbias/error.h"

namespace repbias {
namespace {

// Contributing vectors after OOV resolution. A null span stands for a zero
// vector under kZero.
struct Resolved {
  std::vector<std::span<const double>> vectors;
  std::size_t zero_count = 0;
  std::size_t skipped = 0;
};

Resolved Resolve(std::span<const std::string> tokens, const EmbeddingTable& table,
                 OovPolicy oov) {
  Resolved r;
  for (const auto& t : tokens) {
    if (auto v = table.Lookup(t)) {
      r.vectors.push_back(*v);
    } else if (oov == OovPolicy::kZero) {
      ++r.zero_count;
    } else {
      ++r.skipped;
    }
  }
  return r;
}

bool Encodable(const Resolved& r) { return !r.vectors.empty() || r.zero_count > 0; }

std::vector<double> Average(const Resolved& r, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  for (const auto& v : r.vectors) {
    for (std::size_t d = 0; d < dim; ++d) out[d] += v[d];
  }
  const double n = static_cast<double>(r.vectors.size() + r.zero_count);
  for (double& x : out) x /= n;
  return out;
}

std::vector<double> Extrema(const Resolved& r, std::size_t dim) {
  std::vector<double> out(dim, 0.0);
  for (std::size_t d = 0; d < dim; ++d) {
    bool first = r.zero_count == 0;
    double hi = 0.0;
    double lo = 0.0;
    for (const auto& v : r.vectors) {
      if (first) {
        hi = lo = v[d];
        first = false;
      } else {
        hi = std::max(hi, v[d]);
        lo = std::min(lo, v[d]);
      }
    }
    out[d] = hi > std::fabs(lo) ? hi : lo;
  }
  return out;
}

std::vector<double> Combine(const Resolved& r, std::size_t dim,
                            const EncodingStrategy& s) {
  switch (s.kind) {
    case EncodingKind::kAverage:
      return Average(r, dim);
    case EncodingKind::kExtrema:
      return Extrema(r, dim);
    case EncodingKind::kConvex:
      break;
  }
  if (s.lambda == 1.0) return Average(r, dim);
  if (s.lambda == 0.0) return Extrema(r, dim);
  auto avg = Average(r, dim);
  const auto ext = Extrema(r, dim);
  for (std::size_t d = 0; d < dim; ++d) {
    avg[d] = s.lambda * avg[d] + (1.0 - s.lambda) * ext[d];
  }
  return avg;
}

void CheckLambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw UsageError("lambda must lie in [0, 1]");
  }
}

std::vector<double> EncodeOrThrow(std::span<const std::string> tokens,
                                  const EmbeddingTable& table,
                                  const EncodingStrategy& strategy) {
  if (tokens.empty()) throw DataError("cannot encode an empty token list");
  const Resolved r = Resolve(tokens, table, strategy.oov);
  if (!Encodable(r)) throw DataError("no in-vocabulary tokens");
  return Combine(r, table.dim(), strategy);
}

}  // namespace

EncodingStrategy EncodingStrategy::Average(OovPolicy oov) {
  return {EncodingKind::kAverage, 1.0, oov};
}

EncodingStrategy EncodingStrategy::Extrema(OovPolicy oov) {
  return {EncodingKind::kExtrema, 0.0, oov};
}

EncodingStrategy EncodingStrategy::Convex(double lambda, OovPolicy oov) {
  CheckLambda(lambda);
  return {EncodingKind::kConvex, lambda, oov};
}

std::string EncodingStrategy::Label() const {
  switch (kind) {
    case EncodingKind::kAverage:
      return "avg";
    case EncodingKind::kExtrema:
      return "ext";
    case EncodingKind::kConvex:
      return "convex:" + FormatDouble(lambda);
  }
  return "?";
}

EncodingStrategy EncodingStrategy::Parse(const std::string& label, OovPolicy oov) {
  if (label == "avg" || label == "average") return Average(oov);
  if (label == "ext" || label == "extrema") return Extrema(oov);
  if (label.starts_with("convex:")) {
    const std::string v = label.substr(7);
    char* end = nullptr;
    const double lambda = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0') throw UsageError("bad lambda in '" + label + "'");
    return Convex(lambda, oov);
  }
  throw UsageError("unknown strategy '" + label + "'");
}

std::vector<double> EncodeAverage(std::span<const std::string> tokens,
                                  const EmbeddingTable& table, OovPolicy oov) {
  return EncodeOrThrow(tokens, table, EncodingStrategy::Average(oov));
}

std::vector<double> EncodeExtrema(std::span<const std::string> tokens,
                                  const EmbeddingTable& table, OovPolicy oov) {
  return EncodeOrThrow(tokens, table, EncodingStrategy::Extrema(oov));
}

std::vector<double> EncodeConvex(std::span<const std::string> tokens,
                                 const EmbeddingTable& table, double lambda,
                                 OovPolicy oov) {
  return EncodeOrThrow(tokens, table, EncodingStrategy::Convex(lambda, oov));
}

std::optional<std::vector<double>> TryEncode(std::span<const std::string> tokens,
                                             const EmbeddingTable& table,
                                             const EncodingStrategy& strategy) {
  if (tokens.empty()) return std::nullopt;
  const Resolved r = Resolve(tokens, table, strategy.oov);
  if (!Encodable(r)) return std::nullopt;
  return Combine(r, table.dim(), strategy);
}

std::vector<std::size_t> EncodingMatrix::RowsOfGroup(int group) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i] == group) out.push_back(i);
  }
  return out;
}

EncodingMatrix EncodeCorpus(const Corpus& corpus, const EmbeddingTable& table,
                            const EncodingStrategy& strategy) {
  if (strategy.kind == EncodingKind::kConvex) CheckLambda(strategy.lambda);
  EncodingMatrix out;
  out.strategy = strategy;
  std::vector<std::vector<double>> encoded;
  for (const auto& s : corpus.samples) {
    Resolved r = Resolve(s.tokens, table, strategy.oov);
    out.skipped_token_count += r.skipped;
    if (s.tokens.empty() || !Encodable(r)) {
      out.dropped_sample_ids.push_back(s.id);
      continue;
    }
    encoded.push_back(Combine(r, table.dim(), strategy));
    out.sample_ids.push_back(s.id);
    out.groups.push_back(s.group);
    out.labels.push_back(s.label);
  }
  if (encoded.empty()) throw DataError("every sample was dropped during encoding");
  out.rows = Matrix(encoded.size(), table.dim());
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    std::copy(encoded[i].begin(), encoded[i].end(), out.rows.row(i).begin());
  }
  return out;
}

void WriteEncodingCsv(const EncodingMatrix& encodings, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  std::vector<std::string> fields{"id"};
  for (std::size_t d = 0; d < encodings.rows.cols(); ++d) {
    fields.push_back("v" + std::to_string(d));
  }
  WriteCsvRow(out, fields);
  for (std::size_t i = 0; i < encodings.rows.rows(); ++i) {
    fields.assign({encodings.sample_ids[i]});
    for (double v : encodings.rows.row(i)) fields.push_back(FormatDouble(v));
    WriteCsvRow(out, fields);
  }
}

}  // namespace repbias
