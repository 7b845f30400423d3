#include "repbias/corpus.h"

#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "repbias/csv.h"
#include "repbias/error.h"
#include "repbias/random.h"
#include "repbias/stratify.h"
#include "repbias/unicode.h"

namespace repbias {
namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool IsNull(std::string_view raw) {
  const std::string v = Lower(Trim(raw));
  return v.empty() || v == "na" || v == "n/a" || v == "nan" || v == "null" ||
         v == "none";
}

char32_t ParseCodepoint(std::string_view s) {
  s = Trim(s);
  if (s.starts_with("U+") || s.starts_with("u+") || s.starts_with("0x") ||
      s.starts_with("0X")) {
    s.remove_prefix(2);
  }
  if (s.empty()) throw DataError("profile: empty code point");
  char* end = nullptr;
  const std::string buf(s);
  const unsigned long v = std::strtoul(buf.c_str(), &end, 16);
  if (*end != '\0' || v > 0x10FFFF) {
    throw DataError("profile: bad code point '" + buf + "'");
  }
  return static_cast<char32_t>(v);
}

bool ParseBool(std::string_view v) {
  const std::string s = Lower(Trim(v));
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw DataError("profile: bad boolean '" + s + "'");
}

bool Allowed(UChar32 cp, const PreprocessProfile& profile) {
  if (u_isUWhiteSpace(cp)) return true;
  if (profile.allowed_ranges.empty()) {
    const auto type = u_charType(cp);
    return type != U_PRIVATE_USE_CHAR && type != U_FORMAT_CHAR &&
           type != U_OTHER_SYMBOL;
  }
  const auto c = static_cast<char32_t>(cp);
  return std::any_of(profile.allowed_ranges.begin(), profile.allowed_ranges.end(),
                     [c](const CodepointRange& r) { return c >= r.first && c <= r.last; });
}

void AppendUtf8(std::string& out, UChar32 cp) {
  char buf[4];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<uint8_t*>(buf), len, 4, cp, error);
  if (error) return;  // cp is always a valid scalar here
  out.append(buf, static_cast<std::size_t>(len));
}

std::vector<UChar32> DecodeUtf8(std::string_view s) {
  std::vector<UChar32> cps;
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const auto n = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < n) {
    UChar32 cp;
    U8_NEXT(p, i, n, cp);
    cps.push_back(cp < 0 ? 0xFFFD : cp);
  }
  return cps;
}

void EmitChunk(const std::vector<UChar32>& chunk, std::vector<std::string>& out) {
  std::size_t begin = 0;
  std::size_t end = chunk.size();
  while (begin < end && u_ispunct(chunk[begin])) ++begin;
  while (end > begin && u_ispunct(chunk[end - 1])) --end;
  for (std::size_t i = 0; i < begin; ++i) {
    std::string t;
    AppendUtf8(t, chunk[i]);
    out.push_back(std::move(t));
  }
  if (end > begin) {
    std::string core;
    for (std::size_t i = begin; i < end; ++i) AppendUtf8(core, chunk[i]);
    out.push_back(std::move(core));
  }
  for (std::size_t i = end; i < chunk.size(); ++i) {
    std::string t;
    AppendUtf8(t, chunk[i]);
    out.push_back(std::move(t));
  }
}

}  // namespace

PreprocessProfile PreprocessProfile::Hldc() {
  PreprocessProfile p;
  p.name = "hldc";
  p.lowercase = false;
  p.min_tokens = 30;
  return p;
}

PreprocessProfile PreprocessProfile::Mtc() {
  PreprocessProfile p;
  p.name = "mtc";
  p.lowercase = true;
  p.min_tokens = 0;
  return p;
}

PreprocessProfile PreprocessProfile::Parse(std::string_view text, std::string name) {
  PreprocessProfile p;
  p.name = std::move(name);
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = Trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw DataError("profile line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = Lower(Trim(view.substr(0, eq)));
    const std::string_view value = Trim(view.substr(eq + 1));
    if (key == "lowercase") {
      p.lowercase = ParseBool(value);
    } else if (key == "min_tokens") {
      const std::string v(value);
      char* end = nullptr;
      const long long n = std::strtoll(v.c_str(), &end, 10);
      if (v.empty() || *end != '\0' || n < 0) {
        throw DataError("profile: bad min_tokens '" + v + "'");
      }
      p.min_tokens = static_cast<std::size_t>(n);
    } else if (key == "allowed_ranges") {
      p.allowed_ranges.clear();
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = Trim(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        if (item.empty()) continue;
        const auto dash = item.find('-');
        CodepointRange r;
        r.first = ParseCodepoint(item.substr(0, dash));
        r.last = dash == std::string_view::npos ? r.first : ParseCodepoint(item.substr(dash + 1));
        if (r.last < r.first) throw DataError("profile: reversed range");
        p.allowed_ranges.push_back(r);
      }
    } else {
      throw DataError("profile: unknown key '" + key + "'");
    }
  }
  return p;
}

PreprocessProfile PreprocessProfile::LoadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open profile " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return Parse(buf.str(), path.stem().string());
}

PreprocessProfile ResolveProfile(const std::string& spec) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(spec)) return PreprocessProfile::LoadFile(spec);
  if (const char* dir = std::getenv("REPBIAS_PROFILE_DIR"); dir && *dir) {
    const fs::path candidate = fs::path(dir) / (spec + ".profile");
    if (fs::is_regular_file(candidate)) return PreprocessProfile::LoadFile(candidate);
  }
  if (spec == "hldc") return PreprocessProfile::Hldc();
  if (spec == "mtc") return PreprocessProfile::Mtc();
  if (spec == "default") return PreprocessProfile{};
  throw UsageError("unknown profile '" + spec + "'");
}

std::vector<std::string> Tokenize(std::string_view text, const PreprocessProfile& profile) {
  const std::string normalized = NormalizeNfc(text);
  std::string kept;
  kept.reserve(normalized.size());
  for (UChar32 cp : DecodeUtf8(normalized)) {
    if (Allowed(cp, profile)) AppendUtf8(kept, cp);
  }
  if (profile.lowercase) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(kept);
    u.toLower(icu::Locale::getRoot());
    kept.clear();
    u.toUTF8String(kept);
  }

  std::vector<std::string> tokens;
  std::vector<UChar32> chunk;
  for (UChar32 cp : DecodeUtf8(kept)) {
    if (u_isUWhiteSpace(cp)) {
      if (!chunk.empty()) EmitChunk(chunk, tokens);
      chunk.clear();
    } else {
      chunk.push_back(cp);
    }
  }
  if (!chunk.empty()) EmitChunk(chunk, tokens);
  return tokens;
}

std::size_t Corpus::GroupCount(int group) const {
  return static_cast<std::size_t>(std::count_if(
      samples.begin(), samples.end(), [group](const Sample& s) { return s.group == group; }));
}

void Corpus::Validate() const {
  std::unordered_set<std::string> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.id).second) throw DataError("duplicate sample id '" + s.id + "'");
    if ((s.label != 0 && s.label != 1) || (s.group != 0 && s.group != 1)) {
      throw DataError("sample '" + s.id + "' has a non-binary label or group");
    }
  }
}

CsvLoadResult LoadCsv(const std::filesystem::path& path, const CsvColumns& columns) {
  auto records = ReadCsvFile(path);
  if (records.empty()) throw DataError(path.string() + ": missing header row");
  const auto& header = records.front();
  auto column_index = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (Trim(header[i]) == name) return i;
    }
    throw DataError(path.string() + ": missing column '" + name + "'");
  };
  const std::size_t text_col = column_index(columns.text);
  const std::size_t label_col = column_index(columns.label);
  const std::size_t group_col = column_index(columns.group);
  const std::optional<std::size_t> id_col =
      columns.id ? std::optional(column_index(*columns.id)) : std::nullopt;

  struct RawRow {
    std::string id, text, label, group;
  };
  std::vector<RawRow> rows;
  CsvLoadResult result;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    // A lone empty field is a blank line.
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (rec.size() != header.size()) {
      throw DataError(path.string() + ": record " + std::to_string(r) + " has " +
                      std::to_string(rec.size()) + " fields, header has " +
                      std::to_string(header.size()));
    }
    ++result.rows_read;
    if (IsNull(rec[label_col]) || IsNull(rec[group_col])) {
      ++result.dropped_null_rows;
      continue;
    }
    rows.push_back({id_col ? std::string(rec[*id_col]) : std::to_string(r), rec[text_col],
                    std::string(Trim(rec[label_col])), std::string(Trim(rec[group_col]))});
  }
  if (rows.empty()) throw DataError(path.string() + ": corpus is empty");

  auto encode = [&](auto member, const std::string& what) {
    std::set<std::string> distinct;
    for (const auto& row : rows) distinct.insert(row.*member);
    if (distinct.size() != 2) {
      throw DataError(path.string() + ": column '" + what + "' has " +
                      std::to_string(distinct.size()) + " distinct values, expected 2");
    }
    return std::array<std::string, 2>{*distinct.begin(), *std::next(distinct.begin())};
  };
  Corpus& corpus = result.corpus;
  corpus.label_names = encode(&RawRow::label, columns.label);
  corpus.group_names = encode(&RawRow::group, columns.group);
  corpus.profile = "raw";
  corpus.samples.reserve(rows.size());
  for (auto& row : rows) {
    Sample s;
    s.id = std::move(row.id);
    s.text = std::move(row.text);
    s.label = row.label == corpus.label_names[0] ? 0 : 1;
    s.group = row.group == corpus.group_names[0] ? 0 : 1;
    corpus.samples.push_back(std::move(s));
  }
  corpus.Validate();
  return result;
}

Corpus TokenizeCorpus(Corpus corpus, const PreprocessProfile& profile) {
  for (auto& s : corpus.samples) s.tokens = Tokenize(s.text, profile);
  corpus.profile = profile.name;
  return corpus;
}

FilterResult FilterMinLength(const Corpus& corpus, std::size_t min_tokens) {
  FilterResult result;
  result.corpus.label_names = corpus.label_names;
  result.corpus.group_names = corpus.group_names;
  result.corpus.profile = corpus.profile;
  for (const auto& s : corpus.samples) {
    if (s.tokens.size() >= min_tokens) {
      result.corpus.samples.push_back(s);
    } else {
      ++result.dropped;
    }
  }
  if (result.corpus.samples.empty()) {
    throw DataError("no samples with at least " + std::to_string(min_tokens) + " tokens");
  }
  return result;
}

Corpus BalanceByGroup(const Corpus& corpus, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    members[corpus.samples[i].group].push_back(i);
  }
  if (members[0].empty() || members[1].empty()) {
    throw DataError("cannot balance: a group has no samples");
  }
  if (members[0].size() == members[1].size()) return corpus;

  const int major = members[0].size() > members[1].size() ? 0 : 1;
  auto& pool = members[major];
  Rng rng(seed);
  rng.Shuffle(std::span(pool));
  pool.resize(members[1 - major].size());

  std::vector<bool> keep(corpus.samples.size(), false);
  for (const auto& g : members) {
    for (std::size_t i : g) keep[i] = true;
  }
  Corpus out;
  out.label_names = corpus.label_names;
  out.group_names = corpus.group_names;
  out.profile = corpus.profile;
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    if (keep[i]) out.samples.push_back(corpus.samples[i]);
  }
  return out;
}

SplitPlan MakeSplit(const Corpus& corpus, double train_fraction, std::uint64_t seed) {
  std::vector<int> strata;
  strata.reserve(corpus.samples.size());
  for (const auto& s : corpus.samples) strata.push_back(s.label * 2 + s.group);
  const auto is_test = StratifiedHoldout(strata, train_fraction, seed);
  SplitPlan plan;
  plan.seed = seed;
  plan.train_fraction = train_fraction;
  for (std::size_t i = 0; i < corpus.samples.size(); ++i) {
    (is_test[i] ? plan.test_ids : plan.train_ids).push_back(corpus.samples[i].id);
  }
  return plan;
}

CorpusStats ComputeCorpusStats(const Corpus& corpus) {
  auto summarize = [&](auto&& include) {
    LengthStats st;
    std::size_t total_tokens = 0;
    std::size_t positives = 0;
    for (const auto& s : corpus.samples) {
      if (!include(s)) continue;
      const std::size_t n = s.tokens.size();
      st.min_tokens = st.count == 0 ? n : std::min(st.min_tokens, n);
      st.max_tokens = std::max(st.max_tokens, n);
      total_tokens += n;
      positives += s.label == 1 ? 1 : 0;
      ++st.count;
    }
    if (st.count > 0) {
      st.mean_tokens = static_cast<double>(total_tokens) / static_cast<double>(st.count);
      st.positive_percent =
          100.0 * static_cast<double>(positives) / static_cast<double>(st.count);
    }
    return st;
  };
  CorpusStats stats;
  stats.total = summarize([](const Sample&) { return true; });
  for (int g = 0; g < 2; ++g) {
    stats.group[g] = summarize([g](const Sample& s) { return s.group == g; });
  }
  return stats;
}

}  // namespace repbias
