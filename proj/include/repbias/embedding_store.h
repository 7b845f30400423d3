#ifndef REPBIAS_EMBEDDING_STORE_H_
#define REPBIAS_EMBEDDING_STORE_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace repbias {

// Immutable token -> vector map loaded from a whitespace-separated text file
// (GloVe / fastText .vec layout). Tokens are stored NFC-normalized and matched
// byte-exactly, so lookup is case-sensitive.
class EmbeddingTable {
 public:
  // Parses `token v1 ... vd` lines. A first line holding exactly two
  // non-negative integers is read as a `count dim` header and skipped; its dim
  // must agree with the data. Blank lines are ignored. Throws DataError on IO
  // failure, ragged lines, non-numeric or non-finite values, duplicate tokens,
  // or a dim different from `expected_dim`.
  static EmbeddingTable Load(const std::filesystem::path& path,
                             std::optional<std::size_t> expected_dim = std::nullopt);

  // Builds a table from in-memory entries, with the same validation as Load.
  static EmbeddingTable FromEntries(
      const std::vector<std::pair<std::string, std::vector<double>>>& entries,
      std::string source = "<memory>");

  // Absent when the token is out of vocabulary.
  std::optional<std::span<const double>> Lookup(std::string_view token) const;

  // Writes the table back in load order using shortest round-trip values.
  void Save(const std::filesystem::path& path, bool with_header = false) const;
  void Write(std::ostream& out, bool with_header = false) const;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  const std::string& source_path() const { return source_path_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  EmbeddingTable() = default;
  void Insert(std::string token, std::span<const double> values,
              const std::string& where);

  std::size_t dim_ = 0;
  std::string source_path_;
  std::vector<std::string> tokens_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace repbias

#endif  // REPBIAS_EMBEDDING_STORE_H_
