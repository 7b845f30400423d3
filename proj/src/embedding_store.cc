#include "repbias/embedding_store.h"

#include <charconv>
#include <cmath>
#include <fstream>

#include "repbias/csv.h"
#include "repbias/error.h"
#include "repbias/unicode.h"

namespace repbias {
namespace {

std::vector<std::string_view> SplitSpaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t next = line.find(' ', pos);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

bool IsUnsignedInteger(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

std::string Where(const std::string& path, std::size_t line_no) {
  return path + ":" + std::to_string(line_no);
}

}  // namespace

void EmbeddingTable::Insert(std::string token, std::span<const double> values,
                            const std::string& where) {
  if (dim_ == 0) {
    if (values.empty()) throw DataError(where + ": vector has no values");
    dim_ = values.size();
  } else if (values.size() != dim_) {
    throw DataError(where + ": expected " + std::to_string(dim_) +
                    " values, found " + std::to_string(values.size()));
  }
  token = NormalizeNfc(token);
  const auto [it, inserted] = index_.emplace(token, tokens_.size());
  if (!inserted) throw DataError(where + ": duplicate token '" + token + "'");
  tokens_.push_back(std::move(token));
  values_.insert(values_.end(), values.begin(), values.end());
}

EmbeddingTable EmbeddingTable::Load(const std::filesystem::path& path,
                                    std::optional<std::size_t> expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file " + path.string());

  EmbeddingTable table;
  table.source_path_ = path.string();
  std::optional<std::size_t> header_dim;
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  bool first_content_line = true;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    while (!view.empty() && (view.back() == '\r' || view.back() == ' ')) {
      view.remove_suffix(1);
    }
    if (view.empty()) continue;
    const auto fields = SplitSpaces(view);
    const std::string where = Where(table.source_path_, line_no);

    if (first_content_line) {
      first_content_line = false;
      if (fields.size() == 2 && IsUnsignedInteger(fields[0]) &&
          IsUnsignedInteger(fields[1])) {
        std::size_t d = 0;
        std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), d);
        header_dim = d;
        continue;
      }
    }
    if (fields.size() < 2 || fields[0].empty()) {
      throw DataError(where + ": expected a token followed by values");
    }
    values.clear();
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const auto f = fields[i];
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() ||
          !std::isfinite(v)) {
        throw DataError(where + ": non-numeric value '" + std::string(f) + "'");
      }
      values.push_back(v);
    }
    table.Insert(std::string(fields[0]), values, where);
  }
  if (in.bad()) throw DataError("read error on " + path.string());
  if (table.tokens_.empty()) throw DataError(path.string() + ": no vectors");
  if (header_dim && *header_dim != table.dim_) {
    throw DataError(path.string() + ": header dim " + std::to_string(*header_dim) +
                    " disagrees with data dim " + std::to_string(table.dim_));
  }
  if (expected_dim && *expected_dim != table.dim_) {
    throw DataError(path.string() + ": dim " + std::to_string(table.dim_) +
                    " != expected " + std::to_string(*expected_dim));
  }
  return table;
}

EmbeddingTable EmbeddingTable::FromEntries(
    const std::vector<std::pair<std::string, std::vector<double>>>& entries,
    std::string source) {
  EmbeddingTable table;
  table.source_path_ = std::move(source);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    for (double v : entries[i].second) {
      if (!std::isfinite(v)) throw DataError("non-finite embedding value");
    }
    table.Insert(entries[i].first, entries[i].second,
                 table.source_path_ + "[" + std::to_string(i) + "]");
  }
  if (table.tokens_.empty()) throw DataError("embedding table is empty");
  return table;
}

std::optional<std::span<const double>> EmbeddingTable::Lookup(
    std::string_view token) const {
  auto it = index_.find(NormalizeNfc(token));
  if (it == index_.end()) return std::nullopt;
  return std::span<const double>(values_.data() + it->second * dim_, dim_);
}

void EmbeddingTable::Save(const std::filesystem::path& path, bool with_header) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  Write(out, with_header);
  if (!out) throw DataError("write error on " + path.string());
}

void EmbeddingTable::Write(std::ostream& out, bool with_header) const {
  if (with_header) out << tokens_.size() << ' ' << dim_ << '\n';
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out << tokens_[i];
    for (std::size_t j = 0; j < dim_; ++j) {
      out << ' ' << FormatDouble(values_[i * dim_ + j]);
    }
    out << '\n';
  }
}

}  // namespace repbias
