#ifndef REPBIAS_CORPUS_H_
#define REPBIAS_CORPUS_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace repbias {

struct CodepointRange {
  char32_t first = 0;
  char32_t last = 0;
  bool operator==(const CodepointRange&) const = default;
};

// Text preprocessing settings. With no allowed_ranges, characters in the
// Unicode categories Co, Cf and So are stripped; otherwise only whitespace
// and code points inside one of the ranges survive.
struct PreprocessProfile {
  std::string name = "default";
  bool lowercase = false;
  std::size_t min_tokens = 0;
  std::vector<CodepointRange> allowed_ranges;

  // Legal documents: keep case, drop documents under 30 tokens.
  static PreprocessProfile Hldc();
  // Tweets: lowercase, no length filter.
  static PreprocessProfile Mtc();

  // Flat `key = value` text with keys lowercase, min_tokens, allowed_ranges
  // (comma-separated `U+0900-U+097F` or `0x20-0x7E` items). '#' starts a
  // comment. Unknown keys are an error.
  static PreprocessProfile Parse(std::string_view text, std::string name);
  static PreprocessProfile LoadFile(const std::filesystem::path& path);
};

// Resolves `spec` as (1) an existing profile file path, (2) `<spec>.profile`
// inside $REPBIAS_PROFILE_DIR, or (3) a built-in name (hldc, mtc, default).
PreprocessProfile ResolveProfile(const std::string& spec);

// NFC-normalizes, strips disallowed characters, optionally lowercases, splits
// on Unicode whitespace, then peels leading and trailing punctuation (general
// category P*) into one-character tokens. Interior punctuation stays put, so
// "a.b" and "http://x.y/z" remain single tokens.
std::vector<std::string> Tokenize(std::string_view text, const PreprocessProfile& profile);

struct Sample {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  int label = 0;
  int group = 0;
};

struct Corpus {
  std::vector<Sample> samples;
  std::array<std::string, 2> label_names;
  std::array<std::string, 2> group_names;
  std::string profile;

  std::size_t GroupCount(int group) const;
  // Checks id uniqueness and binary label/group values.
  void Validate() const;
};

struct CsvColumns {
  std::string text;
  std::string label;
  std::string group;
  // When unset, sample ids are the 1-based data row numbers.
  std::optional<std::string> id;
};

struct CsvLoadResult {
  Corpus corpus;
  std::size_t rows_read = 0;
  std::size_t dropped_null_rows = 0;
};

// Rows whose label or group cell is null (empty, NA, N/A, NaN, null, None;
// case-insensitive) are dropped and counted. Label and group values are
// encoded by byte-wise lexicographic order: the smaller value becomes 0.
CsvLoadResult LoadCsv(const std::filesystem::path& path, const CsvColumns& columns);

// Tokenizes every sample and records the profile name.
Corpus TokenizeCorpus(Corpus corpus, const PreprocessProfile& profile);

struct FilterResult {
  Corpus corpus;
  std::size_t dropped = 0;
};

FilterResult FilterMinLength(const Corpus& corpus, std::size_t min_tokens);

// Downsamples the larger group uniformly at random to the smaller group's
// size. Retained samples keep corpus order.
Corpus BalanceByGroup(const Corpus& corpus, std::uint64_t seed);

struct SplitPlan {
  std::vector<std::string> train_ids;  // corpus order
  std::vector<std::string> test_ids;   // corpus order
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

// Split stratified by (label, group) cell; see StratifiedHoldout.
SplitPlan MakeSplit(const Corpus& corpus, double train_fraction, std::uint64_t seed);

// Document counts, token lengths and positive-label rate, per group and in
// total.
struct LengthStats {
  std::size_t count = 0;
  double mean_tokens = 0.0;
  std::size_t min_tokens = 0;
  std::size_t max_tokens = 0;
  double positive_percent = 0.0;  // share of label 1, in percent
};

struct CorpusStats {
  LengthStats total;
  std::array<LengthStats, 2> group;
};

CorpusStats ComputeCorpusStats(const Corpus& corpus);

}  // namespace repbias

#endif  // REPBIAS_CORPUS_H_
