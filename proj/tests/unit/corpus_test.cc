#include "repbias/corpus.h"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "repbias/error.h"
#include "repbias/stratify.h"
#include "test_util.h"

namespace repbias {
namespace {

using testing::TempDir;
using testing::WriteFile;

using Tokens = std::vector<std::string>;

PreprocessProfile Lowercasing() {
  PreprocessProfile p;
  p.lowercase = true;
  return p;
}

TEST(TokenizeTest, SplitsEdgePunctuation) {
  EXPECT_EQ(Tokenize("Hello, world!", Lowercasing()), (Tokens{"hello", ",", "world", "!"}));
}

TEST(TokenizeTest, MtcPlaceholders) {
  EXPECT_EQ(Tokenize("USER URL HASHTAG", PreprocessProfile::Mtc()),
            (Tokens{"user", "url", "hashtag"}));
}

TEST(TokenizeTest, EmptyAndWhitespaceOnly) {
  EXPECT_TRUE(Tokenize("", PreprocessProfile{}).empty());
  EXPECT_TRUE(Tokenize(" \t\n  ", PreprocessProfile{}).empty());
}

TEST(TokenizeTest, InteriorPunctuationStays) {
  EXPECT_EQ(Tokenize("see http://x.y/z, ok?", PreprocessProfile{}),
            (Tokens{"see", "http://x.y/z", ",", "ok", "?"}));
  EXPECT_EQ(Tokenize("(a.b)", PreprocessProfile{}), (Tokens{"(", "a.b", ")"}));
  EXPECT_EQ(Tokenize("\"quoted...\"", PreprocessProfile{}),
            (Tokens{"\"", "quoted", ".", ".", ".", "\""}));
}

TEST(TokenizeTest, NoLowercasingByDefault) {
  EXPECT_EQ(Tokenize("Court ORDER", PreprocessProfile::Hldc()), (Tokens{"Court", "ORDER"}));
}

TEST(TokenizeTest, DevanagariSurvivesAndSymbolsAreStripped) {
  // Devanagari word, a private-use char, a zero-width space (Cf) and an emoji (So).
  const std::string text = "\xE0\xA4\xA8\xE0\xA4\xAE\xE0\xA4\xB8\xE0\xA5\x8D\xE0\xA4\xA4\xE0\xA5\x87"
                           " a\xEE\x80\x80" "b c\xE2\x80\x8B" "d \xF0\x9F\x98\x80";
  EXPECT_EQ(Tokenize(text, PreprocessProfile{}),
            (Tokens{"\xE0\xA4\xA8\xE0\xA4\xAE\xE0\xA4\xB8\xE0\xA5\x8D\xE0\xA4\xA4\xE0\xA5\x87",
                    "ab", "cd"}));
}

TEST(TokenizeTest, AllowedRangesRestrictCharacters) {
  PreprocessProfile p;
  p.allowed_ranges = {{0x20, 0x7E}};
  EXPECT_EQ(Tokenize("abc \xE0\xA4\xA8 d\xC3\xA9" "f", p), (Tokens{"abc", "df"}));
}

TEST(TokenizeTest, NfcBeforeMatching) {
  EXPECT_EQ(Tokenize("cafe\xCC\x81", PreprocessProfile{}), (Tokens{"caf\xC3\xA9"}));
}

TEST(TokenizeTest, UnicodeLowercasing) {
  EXPECT_EQ(Tokenize("\xC3\x89T\xC3\x89", Lowercasing()), (Tokens{"\xC3\xA9t\xC3\xA9"}));
}

TEST(ProfileTest, BuiltinsAndParsing) {
  EXPECT_EQ(PreprocessProfile::Hldc().min_tokens, 30u);
  EXPECT_FALSE(PreprocessProfile::Hldc().lowercase);
  EXPECT_TRUE(PreprocessProfile::Mtc().lowercase);
  EXPECT_EQ(PreprocessProfile::Mtc().min_tokens, 0u);

  const auto p = PreprocessProfile::Parse(
      "# comment\nlowercase = yes\nmin_tokens = 12\nallowed_ranges = 0x20-0x7E, U+0900-U+097F, 0A\n",
      "custom");
  EXPECT_EQ(p.name, "custom");
  EXPECT_TRUE(p.lowercase);
  EXPECT_EQ(p.min_tokens, 12u);
  ASSERT_EQ(p.allowed_ranges.size(), 3u);
  EXPECT_EQ(p.allowed_ranges[1], (CodepointRange{0x900, 0x97F}));
  EXPECT_EQ(p.allowed_ranges[2], (CodepointRange{0x0A, 0x0A}));

  EXPECT_THROW(PreprocessProfile::Parse("colour = red\n", "x"), DataError);
  EXPECT_THROW(PreprocessProfile::Parse("min_tokens = -1\n", "x"), DataError);
  EXPECT_THROW(PreprocessProfile::Parse("allowed_ranges = 7F-20\n", "x"), DataError);
  EXPECT_THROW(PreprocessProfile::Parse("lowercase\n", "x"), DataError);
}

TEST(ProfileTest, ResolveOrder) {
  TempDir dir;
  WriteFile(dir / "strict.profile", "min_tokens = 7\n");
  EXPECT_EQ(ResolveProfile((dir / "strict.profile").string()).min_tokens, 7u);
  setenv("REPBIAS_PROFILE_DIR", dir.path().c_str(), 1);
  EXPECT_EQ(ResolveProfile("strict").min_tokens, 7u);
  EXPECT_EQ(ResolveProfile("hldc").min_tokens, 30u);
  unsetenv("REPBIAS_PROFILE_DIR");
  EXPECT_THROW(ResolveProfile("strict"), UsageError);
  EXPECT_EQ(ResolveProfile("default").name, "default");
}

CsvColumns Columns() { return {"text", "label", "group", std::nullopt}; }

TEST(LoadCsvTest, LexicographicEncoding) {
  TempDir dir;
  WriteFile(dir / "c.csv",
            "text,label,group\nfirst doc,yes,b\nsecond,no,a\nthird,yes,a\nfourth,no,b\n");
  const auto r = LoadCsv(dir / "c.csv", Columns());
  ASSERT_EQ(r.corpus.samples.size(), 4u);
  EXPECT_EQ(r.corpus.label_names, (std::array<std::string, 2>{"no", "yes"}));
  EXPECT_EQ(r.corpus.group_names, (std::array<std::string, 2>{"a", "b"}));
  EXPECT_EQ(r.corpus.samples[0].label, 1);
  EXPECT_EQ(r.corpus.samples[0].group, 1);
  EXPECT_EQ(r.corpus.samples[1].label, 0);
  EXPECT_EQ(r.corpus.samples[1].group, 0);
  EXPECT_EQ(r.corpus.samples[0].id, "1");
  EXPECT_EQ(r.corpus.samples[3].id, "4");
  EXPECT_EQ(r.corpus.samples[0].text, "first doc");
  EXPECT_EQ(r.dropped_null_rows, 0u);
}

TEST(LoadCsvTest, NullRowsDroppedAndCounted) {
  TempDir dir;
  WriteFile(dir / "c.csv",
            "id,text,label,group\nx1,t,yes,a\nx2,t,no,\nx3,t,no,b\nx4,t,yes,b\nx5,t,NA,a\n");
  CsvColumns cols = Columns();
  cols.id = "id";
  const auto r = LoadCsv(dir / "c.csv", cols);
  EXPECT_EQ(r.dropped_null_rows, 2u);
  EXPECT_EQ(r.rows_read, 5u);
  ASSERT_EQ(r.corpus.samples.size(), 3u);
  EXPECT_EQ(r.corpus.samples[1].id, "x3");
}

TEST(LoadCsvTest, ThreeLabelValuesFail) {
  TempDir dir;
  WriteFile(dir / "c.csv", "text,label,group\na,x,g\nb,y,h\nc,z,g\n");
  EXPECT_THROW(LoadCsv(dir / "c.csv", Columns()), DataError);
}

TEST(LoadCsvTest, SingleGroupValueFails) {
  TempDir dir;
  WriteFile(dir / "c.csv", "text,label,group\na,x,g\nb,y,g\n");
  EXPECT_THROW(LoadCsv(dir / "c.csv", Columns()), DataError);
}

TEST(LoadCsvTest, MissingColumnAndEmptyFail) {
  TempDir dir;
  WriteFile(dir / "c.csv", "text,label\na,x\n");
  EXPECT_THROW(LoadCsv(dir / "c.csv", Columns()), DataError);
  WriteFile(dir / "d.csv", "text,label,group\n");
  EXPECT_THROW(LoadCsv(dir / "d.csv", Columns()), DataError);
}

TEST(LoadCsvTest, DuplicateIdsFail) {
  TempDir dir;
  WriteFile(dir / "c.csv", "id,text,label,group\n1,a,x,g\n1,b,y,h\n");
  CsvColumns cols = Columns();
  cols.id = "id";
  EXPECT_THROW(LoadCsv(dir / "c.csv", cols), DataError);
}

Corpus MakeCorpus(const std::vector<std::pair<int, int>>& label_group,
                  const std::vector<std::size_t>& lengths = {}) {
  Corpus c;
  c.label_names = {"neg", "pos"};
  c.group_names = {"g0", "g1"};
  for (std::size_t i = 0; i < label_group.size(); ++i) {
    Sample s;
    s.id = "s" + std::to_string(i);
    s.label = label_group[i].first;
    s.group = label_group[i].second;
    const std::size_t len = lengths.empty() ? 3 : lengths[i];
    for (std::size_t t = 0; t < len; ++t) s.tokens.push_back("w");
    c.samples.push_back(s);
  }
  return c;
}

Corpus GroupSized(std::size_t g0, std::size_t g1) {
  std::vector<std::pair<int, int>> lg;
  for (std::size_t i = 0; i < g0; ++i) lg.emplace_back(static_cast<int>(i % 2), 0);
  for (std::size_t i = 0; i < g1; ++i) lg.emplace_back(static_cast<int>(i % 3 == 0), 1);
  return MakeCorpus(lg);
}

std::set<std::string> Ids(const Corpus& c) {
  std::set<std::string> ids;
  for (const auto& s : c.samples) ids.insert(s.id);
  return ids;
}

TEST(FilterMinLengthTest, Examples) {
  const Corpus c = MakeCorpus({{0, 0}, {1, 1}}, {10, 40});
  const auto r = FilterMinLength(c, 30);
  ASSERT_EQ(r.corpus.samples.size(), 1u);
  EXPECT_EQ(r.corpus.samples[0].id, "s1");
  EXPECT_EQ(r.dropped, 1u);
  const auto id = FilterMinLength(c, 0);
  EXPECT_EQ(id.corpus.samples.size(), 2u);
  EXPECT_EQ(id.dropped, 0u);
  EXPECT_THROW(FilterMinLength(c, 41), DataError);
}

TEST(BalanceByGroupTest, Examples) {
  const Corpus balanced = GroupSized(596, 596);
  EXPECT_EQ(Ids(BalanceByGroup(balanced, 1)), Ids(balanced));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Corpus b = BalanceByGroup(GroupSized(10, 4), seed);
    EXPECT_EQ(b.GroupCount(0), 4u);
    EXPECT_EQ(b.GroupCount(1), 4u);
  }
  EXPECT_EQ(Ids(BalanceByGroup(GroupSized(10, 4), 9)), Ids(BalanceByGroup(GroupSized(10, 4), 9)));
  EXPECT_THROW(BalanceByGroup(GroupSized(5, 0), 0), DataError);
}

TEST(BalanceByGroupTest, IdempotentAndOrderPreserving) {
  const Corpus once = BalanceByGroup(GroupSized(37, 81), 5);
  const Corpus twice = BalanceByGroup(once, 77);
  EXPECT_EQ(Ids(once), Ids(twice));
  // Retained samples keep corpus order.
  std::vector<int> index;
  for (const auto& s : once.samples) index.push_back(std::stoi(s.id.substr(1)));
  EXPECT_TRUE(std::is_sorted(index.begin(), index.end()));
}

TEST(BalanceByGroupTest, DifferentSeedsPickDifferentSubsets) {
  EXPECT_NE(Ids(BalanceByGroup(GroupSized(60, 20), 1)), Ids(BalanceByGroup(GroupSized(60, 20), 2)));
}

TEST(MakeSplitTest, HldcShape) {
  const Corpus c = GroupSized(596, 596);
  const SplitPlan plan = MakeSplit(c, 1000.0 / 1192.0, 0);
  EXPECT_EQ(plan.test_ids.size(), 192u);
  EXPECT_EQ(plan.train_ids.size(), 1000u);
}

TEST(MakeSplitTest, SingletonCellsGoToTrain) {
  const Corpus c = MakeCorpus({{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  const SplitPlan plan = MakeSplit(c, 0.5, 3);
  EXPECT_EQ(plan.train_ids.size(), 4u);
  EXPECT_TRUE(plan.test_ids.empty());
}

TEST(MakeSplitTest, CoversCorpusAndIsStratified) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<int> size(8, 300);
    std::vector<std::pair<int, int>> lg;
    const int n = size(gen);
    for (int i = 0; i < n; ++i) lg.emplace_back(static_cast<int>(gen() % 2), static_cast<int>(gen() % 2));
    const Corpus c = MakeCorpus(lg);
    const double f = std::uniform_real_distribution<double>(0.1, 0.9)(gen);
    const SplitPlan plan = MakeSplit(c, f, trial);

    std::set<std::string> all(plan.train_ids.begin(), plan.train_ids.end());
    for (const auto& id : plan.test_ids) ASSERT_TRUE(all.insert(id).second);
    ASSERT_EQ(all, Ids(c));

    const std::set<std::string> train(plan.train_ids.begin(), plan.train_ids.end());
    std::map<int, std::pair<int, int>> cell;  // stratum -> (train, total)
    for (const auto& s : c.samples) {
      auto& e = cell[s.label * 2 + s.group];
      e.first += train.count(s.id) ? 1 : 0;
      e.second += 1;
    }
    for (const auto& [key, e] : cell) {
      if (e.second == 1) {
        EXPECT_EQ(e.first, 1);
      } else {
        EXPECT_LE(std::abs(e.first - f * e.second), 1.0 + 1e-9);
      }
    }
    const SplitPlan again = MakeSplit(c, f, trial);
    EXPECT_EQ(again.train_ids, plan.train_ids);
  }
}

TEST(MakeSplitTest, FractionMustBeInside) {
  const Corpus c = GroupSized(4, 4);
  EXPECT_THROW(MakeSplit(c, 0.0, 0), UsageError);
  EXPECT_THROW(MakeSplit(c, 1.0, 0), UsageError);
}

TEST(StratifiedFoldsTest, BalancedDeal) {
  std::vector<int> strata;
  for (int i = 0; i < 103; ++i) strata.push_back(i % 4 == 0 ? 0 : (i % 3 == 0 ? 1 : 2));
  const auto folds = StratifiedFolds(strata, 5, 17);
  std::map<int, int> sizes;
  std::map<std::pair<int, int>, int> per;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    ASSERT_GE(folds[i], 0);
    ASSERT_LT(folds[i], 5);
    ++sizes[folds[i]];
    ++per[{strata[i], folds[i]}];
  }
  int lo = 1000, hi = 0;
  for (const auto& [f, n] : sizes) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  EXPECT_LE(hi - lo, 1);
  for (int s = 0; s < 3; ++s) {
    int slo = 1000, shi = 0;
    for (int f = 0; f < 5; ++f) {
      slo = std::min(slo, per[{s, f}]);
      shi = std::max(shi, per[{s, f}]);
    }
    EXPECT_LE(shi - slo, 1);
  }
  EXPECT_EQ(folds, StratifiedFolds(strata, 5, 17));
  EXPECT_THROW(StratifiedFolds(strata, 1, 0), UsageError);
}

TEST(CorpusStatsTest, ToyCorpus) {
  Corpus c = MakeCorpus({{1, 0}, {0, 0}, {1, 1}}, {2, 4, 9});
  const CorpusStats s = ComputeCorpusStats(c);
  EXPECT_EQ(s.total.count, 3u);
  EXPECT_DOUBLE_EQ(s.total.mean_tokens, 5.0);
  EXPECT_EQ(s.total.min_tokens, 2u);
  EXPECT_EQ(s.total.max_tokens, 9u);
  EXPECT_NEAR(s.total.positive_percent, 200.0 / 3.0, 1e-12);
  EXPECT_EQ(s.group[0].count, 2u);
  EXPECT_DOUBLE_EQ(s.group[0].mean_tokens, 3.0);
  EXPECT_DOUBLE_EQ(s.group[0].positive_percent, 50.0);
  EXPECT_EQ(s.group[1].min_tokens, 9u);
  EXPECT_DOUBLE_EQ(s.group[1].positive_percent, 100.0);
}

TEST(TokenizeCorpusTest, RecordsProfileAndTokens) {
  Corpus c = MakeCorpus({{0, 0}, {1, 1}});
  c.samples[0].text = "A b.";
  c.samples[1].text = "";
  const Corpus t = TokenizeCorpus(c, PreprocessProfile::Mtc());
  EXPECT_EQ(t.profile, "mtc");
  EXPECT_EQ(t.samples[0].tokens, (Tokens{"a", "b", "."}));
  EXPECT_TRUE(t.samples[1].tokens.empty());
}

}  // namespace
}  // namespace repbias
