#include "repbias/cli.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "repbias/audit.h"
#include "repbias/corpus.h"
#include "repbias/csv.h"
#include "repbias/embedding_store.h"
#include "repbias/encoder.h"
#include "repbias/error.h"
#include "repbias/pca.h"
#include "repbias/random.h"
#include "repbias/report.h"
#include "repbias/svm.h"
#include "repbias/synth.h"
#include "repbias/tradeoff.h"

namespace repbias {
namespace {

namespace fs = std::filesystem;

// Every file a command produces is buffered here and written only after all
// computation succeeded. Each file goes through a temporary name and a
// rename; on failure the files already placed are removed again.
class OutputSet {
 public:
  void Add(std::string name, std::string content) {
    files_.emplace_back(std::move(name), std::move(content));
  }

  void Commit(const fs::path& dir) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string());
    std::vector<fs::path> placed;
    try {
      for (const auto& [name, content] : files_) {
        const fs::path target = dir / name;
        const fs::path tmp = dir / (name + ".partial");
        {
          std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
          f << content;
          f.close();
          if (!f) {
            fs::remove(tmp, ec);
            throw DataError("cannot write " + target.string());
          }
        }
        fs::rename(tmp, target, ec);
        if (ec) {
          fs::remove(tmp, ec);
          throw DataError("cannot write " + target.string());
        }
        placed.push_back(target);
      }
    } catch (...) {
      for (const auto& p : placed) fs::remove(p, ec);
      throw;
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

template <typename Fn>
std::string Render(Fn&& fn) {
  std::ostringstream s;
  fn(s);
  return s.str();
}

// ---- flag parsing helpers ----

std::vector<std::string> SplitOn(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

double ParseDouble(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) {
    throw UsageError("bad " + what + ": '" + s + "'");
  }
  return v;
}

long long ParseInt(const std::string& s, const std::string& what) {
  long long v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw UsageError("bad " + what + ": '" + s + "'");
  return v;
}

// "5,10,15" or ranges like "1:20"; kept in the given order.
std::vector<std::size_t> ParseDims(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& part : SplitOn(s, ',')) {
    const auto range = SplitOn(part, ':');
    if (range.size() == 1) {
      const long long k = ParseInt(part, "dimension");
      if (k < 1) throw UsageError("dimensions must be positive");
      out.push_back(static_cast<std::size_t>(k));
    } else if (range.size() == 2) {
      const long long lo = ParseInt(range[0], "dimension range");
      const long long hi = ParseInt(range[1], "dimension range");
      if (lo < 1 || hi < lo) throw UsageError("bad dimension range '" + part + "'");
      for (long long k = lo; k <= hi; ++k) out.push_back(static_cast<std::size_t>(k));
    } else {
      throw UsageError("bad dimension list '" + s + "'");
    }
  }
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] <= out[i - 1]) throw UsageError("dimensions must be strictly increasing");
  }
  return out;
}

// Exponent range "lo:hi:step" for powers of two.
std::array<int, 3> ParseExponentRange(const std::string& s, const std::string& what) {
  const auto parts = SplitOn(s, ':');
  if (parts.size() != 3) throw UsageError(what + " must look like lo:hi:step");
  std::array<int, 3> r{};
  for (int i = 0; i < 3; ++i) r[i] = static_cast<int>(ParseInt(parts[i], what));
  if (r[2] <= 0 || r[1] < r[0]) throw UsageError("bad " + what + " '" + s + "'");
  return r;
}

std::array<double, 3> ParseLambdaGrid(const std::string& s) {
  const auto parts = SplitOn(s, ':');
  if (parts.size() != 3) throw UsageError("lambda grid must look like start:stop:step");
  return {ParseDouble(parts[0], "lambda grid"), ParseDouble(parts[1], "lambda grid"),
          ParseDouble(parts[2], "lambda grid")};
}

std::optional<ValidationScheme> ParseScheme(const std::string& s) {
  const auto parts = SplitOn(s, ':');
  if (parts.size() > 2) throw UsageError("bad scheme '" + s + "'");
  if (parts[0] == "auto" && parts.size() == 1) return std::nullopt;
  if (parts[0] == "kfold") {
    const int folds = parts.size() == 2 ? static_cast<int>(ParseInt(parts[1], "folds")) : 5;
    if (folds < 2) throw UsageError("kfold needs at least 2 folds");
    return ValidationScheme::KFold(folds);
  }
  if (parts[0] == "holdout") {
    const double f = parts.size() == 2 ? ParseDouble(parts[1], "holdout fraction") : 0.2;
    if (!(f > 0.0 && f < 1.0)) throw UsageError("holdout fraction must lie in (0, 1)");
    return ValidationScheme::Holdout(f);
  }
  throw UsageError("scheme must be auto, kfold[:N] or holdout[:F]");
}

OovPolicy ParseOov(const std::string& s) {
  if (s == "skip") return OovPolicy::kSkip;
  if (s == "zero") return OovPolicy::kZero;
  throw UsageError("--oov must be skip or zero");
}

bool ParsePcaFit(const std::string& s) {
  if (s == "all") return false;
  if (s == "train") return true;
  throw UsageError("--pca-fit must be all or train");
}

std::string AbsolutePath(const std::string& p) {
  if (p.empty()) return p;
  return fs::absolute(fs::path(p)).lexically_normal().string();
}

// Profile files are pinned to absolute paths; built-in names stay names.
std::string ResolveProfileSpec(const std::string& spec) {
  std::error_code ec;
  if (fs::is_regular_file(spec, ec)) return AbsolutePath(spec);
  if (const char* dir = std::getenv("REPBIAS_PROFILE_DIR"); dir && *dir) {
    const fs::path p = fs::path(dir) / (spec + ".profile");
    if (fs::is_regular_file(p, ec)) return AbsolutePath(p.string());
  }
  return spec;
}

std::string FileSafe(std::string label) {
  std::replace(label.begin(), label.end(), ':', '_');
  return label;
}

std::string NowTimestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(sde, nullptr, 10));
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

// ---- shared flag groups ----

struct DataFlags {
  std::string data;
  std::string embeddings;
  std::string text_col = "text";
  std::string label_col = "label";
  std::string group_col = "group";
  std::string id_col;
  std::size_t expected_dim = 0;
  std::string profile = "default";
  bool no_balance = false;
  std::uint64_t seed = 0;
  std::string oov = "skip";
};

void AddDataFlags(CLI::App* app, DataFlags& f, bool with_embeddings) {
  app->add_option("--data", f.data, "CSV corpus")->required();
  app->add_option("--text-col", f.text_col, "text column")->capture_default_str();
  app->add_option("--label-col", f.label_col, "binary label column")->capture_default_str();
  app->add_option("--group-col", f.group_col, "protected attribute column")
      ->capture_default_str();
  app->add_option("--id-col", f.id_col, "sample id column (default: row number)");
  app->add_option("--profile", f.profile, "preprocessing profile: name or file")
      ->capture_default_str();
  app->add_flag("--no-balance", f.no_balance, "keep group sizes as loaded");
  app->add_option("--seed", f.seed, "master seed")->capture_default_str();
  if (with_embeddings) {
    app->add_option("--embeddings", f.embeddings, "word vector text file")->required();
    app->add_option("--expected-dim", f.expected_dim, "required vector dimension");
    app->add_option("--oov", f.oov, "out-of-vocabulary policy: skip or zero")
        ->capture_default_str();
  }
}

Json DataParams(const DataFlags& f, bool with_embeddings) {
  Json p;
  p["data"] = AbsolutePath(f.data);
  p["text-col"] = f.text_col;
  p["label-col"] = f.label_col;
  p["group-col"] = f.group_col;
  p["id-col"] = f.id_col.empty() ? Json(nullptr) : Json(f.id_col);
  p["profile"] = ResolveProfileSpec(f.profile);
  p["no-balance"] = f.no_balance;
  p["seed"] = std::to_string(f.seed);
  if (with_embeddings) {
    p["embeddings"] = AbsolutePath(f.embeddings);
    p["expected-dim"] = f.expected_dim ? Json(std::to_string(f.expected_dim)) : Json(nullptr);
    p["oov"] = f.oov;
  }
  return p;
}

struct Inputs {
  Corpus corpus;
  std::optional<EmbeddingTable> table;
  Json warnings = Json::array();
};

Inputs LoadInputs(const DataFlags& f, bool with_embeddings) {
  Inputs in;
  CsvColumns cols{f.text_col, f.label_col, f.group_col, std::nullopt};
  if (!f.id_col.empty()) cols.id = f.id_col;
  CsvLoadResult loaded = LoadCsv(f.data, cols);
  if (loaded.dropped_null_rows > 0) {
    in.warnings.push_back(std::to_string(loaded.dropped_null_rows) +
                          " rows dropped for a null label or group");
  }
  const PreprocessProfile profile = ResolveProfile(f.profile);
  Corpus corpus = TokenizeCorpus(std::move(loaded.corpus), profile);
  FilterResult filtered = FilterMinLength(corpus, profile.min_tokens);
  if (filtered.dropped > 0) {
    in.warnings.push_back(std::to_string(filtered.dropped) + " samples shorter than " +
                          std::to_string(profile.min_tokens) + " tokens dropped");
  }
  corpus = std::move(filtered.corpus);
  if (!f.no_balance) {
    const std::size_t before = corpus.samples.size();
    corpus = BalanceByGroup(corpus, DeriveSeed(f.seed, "balance"));
    if (corpus.samples.size() < before) {
      in.warnings.push_back(std::to_string(before - corpus.samples.size()) +
                            " samples removed to balance groups");
    }
  }
  in.corpus = std::move(corpus);
  if (with_embeddings) {
    std::optional<std::size_t> dim;
    if (f.expected_dim) dim = f.expected_dim;
    in.table = EmbeddingTable::Load(f.embeddings, dim);
  }
  return in;
}

void NoteEncodingWarnings(const EncodingMatrix& enc, Json& warnings) {
  const std::string label = enc.strategy.Label();
  if (!enc.dropped_sample_ids.empty()) {
    warnings.push_back(label + ": " + std::to_string(enc.dropped_sample_ids.size()) +
                       " samples without in-vocabulary tokens dropped");
  }
  if (enc.skipped_token_count > 0) {
    warnings.push_back(label + ": " + std::to_string(enc.skipped_token_count) +
                       " out-of-vocabulary tokens");
  }
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string timestamp;
  unsigned threads = 1;
  std::string out_dir;
};

Json Manifest(const std::string& command, const Json& params, const Context& ctx) {
  Json m;
  m["command"] = command;
  m["tool_version"] = kToolVersion;
  m["timestamp"] = ctx.timestamp;
  m["params"] = params;
  return m;
}

void PrintStatsTable(std::ostream& out, const CorpusStats& s, const Corpus& c) {
  out << std::left << std::setw(16) << "group" << std::right << std::setw(8) << "num"
      << std::setw(10) << "avg" << std::setw(8) << "min" << std::setw(8) << "max"
      << std::setw(12) << ("%" + c.label_names[1]) << "\n";
  auto row = [&](const std::string& name, const LengthStats& l) {
    out << std::left << std::setw(16) << name << std::right << std::setw(8) << l.count
        << std::setw(10) << std::fixed << std::setprecision(2) << l.mean_tokens
        << std::setw(8) << l.min_tokens << std::setw(8) << l.max_tokens << std::setw(12)
        << l.positive_percent << "\n";
    out.unsetf(std::ios::floatfield);
  };
  row(c.group_names[0], s.group[0]);
  row(c.group_names[1], s.group[1]);
  row("Total", s.total);
}

// ---- commands ----

struct StatsFlags {
  DataFlags data;
};

int CmdStats(const StatsFlags& f, const Context& ctx) {
  Json params = DataParams(f.data, false);
  Inputs in = LoadInputs(f.data, false);
  const CorpusStats stats = ComputeCorpusStats(in.corpus);
  PrintStatsTable(ctx.out, stats, in.corpus);
  if (!ctx.out_dir.empty()) {
    Json report;
    report["manifest"] = Manifest("stats", params, ctx);
    report["corpus_stats"] = ToJson(stats, in.corpus);
    report["warnings"] = in.warnings;
    OutputSet files;
    files.Add("report.json", DumpJson(report));
    files.Add("manifest.json", DumpJson(report["manifest"]));
    files.Commit(ctx.out_dir);
  }
  return kExitOk;
}

struct AuditFlags {
  DataFlags data;
  std::string strategies = "avg,ext";
  std::string dims = "all";
  int splits = 20;
  std::string pca_fit = "all";
  double train_fraction = 0.8;
  bool save_encodings = false;
};

int CmdAudit(const AuditFlags& f, const Context& ctx) {
  if (f.splits < 0) throw UsageError("--splits must be non-negative");
  const OovPolicy oov = ParseOov(f.data.oov);
  const bool train_only = ParsePcaFit(f.pca_fit);
  std::vector<EncodingStrategy> strategies;
  for (const auto& label : SplitOn(f.strategies, ',')) {
    strategies.push_back(EncodingStrategy::Parse(label, oov));
  }
  std::optional<std::vector<std::size_t>> dims;
  if (f.dims != "all") dims = ParseDims(f.dims);

  Json params = DataParams(f.data, true);
  params["strategies"] = f.strategies;
  params["dims"] = f.dims;
  params["splits"] = std::to_string(f.splits);
  params["pca-fit"] = f.pca_fit;
  params["train-fraction"] = FormatDouble(f.train_fraction);
  params["save-encodings"] = f.save_encodings;

  Inputs in = LoadInputs(f.data, true);
  std::optional<SplitPlan> split;
  if (train_only) {
    split = MakeSplit(in.corpus, f.train_fraction, DeriveSeed(f.data.seed, "split"));
  }

  OutputSet files;
  std::vector<GroupErrorProfile> profiles;
  std::vector<SplitBaseline> baselines;
  std::vector<std::string> baseline_labels;
  std::vector<EncodingMatrix> encodings;
  Json profile_json = Json::array();
  Json baseline_json = Json::array();

  for (const auto& strategy : strategies) {
    EncodingMatrix enc = EncodeCorpus(in.corpus, *in.table, strategy);
    NoteEncodingWarnings(enc, in.warnings);
    PcaModel model;
    if (split) {
      std::vector<std::size_t> train_rows;
      const std::set<std::string> train_ids(split->train_ids.begin(), split->train_ids.end());
      for (std::size_t i = 0; i < enc.sample_ids.size(); ++i) {
        if (train_ids.count(enc.sample_ids[i])) train_rows.push_back(i);
      }
      model = FitPca(enc.rows, train_rows);
    } else {
      model = FitPca(enc.rows);
    }
    std::vector<std::size_t> ks;
    if (dims) {
      ks = *dims;
    } else {
      for (std::size_t k = 1; k <= model.max_components(); ++k) ks.push_back(k);
    }
    GroupErrorProfile profile = ComputeGroupErrorProfile(model, enc, ks);
    profile_json.push_back(ToJson(profile, &model));
    if (f.splits > 0) {
      baselines.push_back(RandomSplitBaseline(model, enc, ks, f.splits, f.data.seed));
      baseline_labels.push_back(strategy.Label());
      baseline_json.push_back(ToJson(baselines.back(), strategy.Label()));
    }
    files.Add("pca_" + FileSafe(strategy.Label()) + ".json", DumpJson(ToJson(model)));
    if (f.save_encodings) {
      files.Add("encodings_" + FileSafe(strategy.Label()) + ".csv", Render([&](std::ostream& s) {
                  std::vector<std::string> header{"id"};
                  for (std::size_t c = 0; c < enc.rows.cols(); ++c) {
                    header.push_back("v" + std::to_string(c));
                  }
                  WriteCsvRow(s, header);
                  for (std::size_t r = 0; r < enc.rows.rows(); ++r) {
                    std::vector<std::string> row{enc.sample_ids[r]};
                    for (double v : enc.rows.row(r)) row.push_back(FormatDouble(v));
                    WriteCsvRow(s, row);
                  }
                }));
    }
    ctx.out << strategy.Label() << ":";
    for (std::size_t i = 0; i < ks.size(); ++i) {
      ctx.out << " k=" << ks[i] << " gap=" << FormatDouble(profile.gap[i]);
      if (i + 1 < ks.size()) ctx.out << ";";
    }
    ctx.out << "\n";
    profiles.push_back(std::move(profile));
    encodings.push_back(std::move(enc));
  }

  const NormStats norms = ComputeNormStats(encodings);
  Json report;
  report["manifest"] = Manifest("audit", params, ctx);
  report["corpus_stats"] = ToJson(ComputeCorpusStats(in.corpus), in.corpus);
  report["norm_stats"] = ToJson(norms);
  report["group_error_profiles"] = std::move(profile_json);
  report["split_baselines"] = std::move(baseline_json);
  report["warnings"] = in.warnings;

  files.Add("group_errors.csv",
            Render([&](std::ostream& s) { WriteGroupErrorsCsv(s, profiles); }));
  if (!baselines.empty()) {
    files.Add("baseline.csv", Render([&](std::ostream& s) {
                WriteBaselineCsv(s, baselines, baseline_labels);
              }));
  }
  files.Add("report.json", DumpJson(report));
  files.Add("manifest.json", DumpJson(report["manifest"]));
  files.Commit(ctx.out_dir);
  return kExitOk;
}

struct ModelFlags {
  std::string c_range = "-3:11:2";
  std::string gamma_range = "-11:3:2";
  std::string scheme = "auto";
  std::string pca_fit = "all";
  double train_fraction = 0.8;
  bool standardize = false;
};

void AddModelFlags(CLI::App* app, ModelFlags& f) {
  app->add_option("--c-range", f.c_range, "log2 C grid lo:hi:step")->capture_default_str();
  app->add_option("--gamma-range", f.gamma_range, "log2 gamma grid lo:hi:step")
      ->capture_default_str();
  app->add_option("--scheme", f.scheme, "validation: auto, kfold[:N], holdout[:F]")
      ->capture_default_str();
  app->add_option("--pca-fit", f.pca_fit, "rows used to fit PCA: all or train")
      ->capture_default_str();
  app->add_option("--train-fraction", f.train_fraction, "share of rows used for training")
      ->capture_default_str();
  app->add_flag("--standardize", f.standardize, "standardize features before the SVM");
}

void ModelParams(const ModelFlags& f, Json& p) {
  p["c-range"] = f.c_range;
  p["gamma-range"] = f.gamma_range;
  p["scheme"] = f.scheme;
  p["pca-fit"] = f.pca_fit;
  p["train-fraction"] = FormatDouble(f.train_fraction);
  p["standardize"] = f.standardize;
}

PipelineOptions MakePipelineOptions(const DataFlags& d, const ModelFlags& m,
                                    const Context& ctx) {
  PipelineOptions o;
  o.seed = d.seed;
  if (!(m.train_fraction > 0.0 && m.train_fraction < 1.0)) {
    throw UsageError("--train-fraction must lie in (0, 1)");
  }
  o.train_fraction = m.train_fraction;
  o.oov = ParseOov(d.oov);
  const auto c = ParseExponentRange(m.c_range, "--c-range");
  const auto g = ParseExponentRange(m.gamma_range, "--gamma-range");
  o.grid = GridSpec::Exponential(c[0], c[1], c[2], g[0], g[1], g[2]);
  o.scheme = ParseScheme(m.scheme);
  o.pca_train_only = ParsePcaFit(m.pca_fit);
  o.standardize = m.standardize;
  o.search.threads = ctx.threads;
  return o;
}

struct TrainFlags {
  DataFlags data;
  ModelFlags model;
  std::string strategy = "avg";
  std::size_t pca_dims = 0;
};

int CmdTrain(const TrainFlags& f, const Context& ctx) {
  const PipelineOptions options = MakePipelineOptions(f.data, f.model, ctx);
  const EncodingStrategy strategy = EncodingStrategy::Parse(f.strategy, options.oov);
  Json params = DataParams(f.data, true);
  ModelParams(f.model, params);
  params["strategy"] = f.strategy;
  params["pca-dims"] = f.pca_dims ? Json(std::to_string(f.pca_dims)) : Json(nullptr);

  Inputs in = LoadInputs(f.data, true);
  std::optional<std::size_t> k;
  if (f.pca_dims) {
    if (f.pca_dims > in.table->dim()) {
      throw UsageError("--pca-dims " + std::to_string(f.pca_dims) +
                       " exceeds the embedding dimension " + std::to_string(in.table->dim()));
    }
    k = f.pca_dims;
  }
  PipelineRun run = RunPipeline(in.corpus, *in.table, strategy, k, options);
  NoteEncodingWarnings(run.encodings, in.warnings);

  Json model = ToJson(run.model);
  model["strategy"] = strategy.Label();
  model["pca_dims"] = k ? Json(*k) : Json(nullptr);
  model["standardize"] = options.standardize;

  Json train;
  train["strategy"] = strategy.Label();
  train["pca_dims"] = k ? Json(*k) : Json(nullptr);
  train["train_rows"] = run.train_rows;
  train["test_rows"] = run.test_rows;
  train["test_accuracy"] = run.test_accuracy;
  train["grid_search"] = ToJson(run.search);
  if (k) {
    train["err_g0"] = *run.err_group0;
    train["err_g1"] = *run.err_group1;
    train["gap"] = *run.gap;
  }

  Json report;
  report["manifest"] = Manifest("train", params, ctx);
  report["corpus_stats"] = ToJson(ComputeCorpusStats(in.corpus), in.corpus);
  report["train"] = std::move(train);
  report["warnings"] = in.warnings;

  OutputSet files;
  files.Add("model.json", DumpJson(model));
  files.Add("grid.csv", Render([&](std::ostream& s) { WriteGridCsv(s, run.search); }));
  if (k) files.Add("pca_" + FileSafe(strategy.Label()) + ".json", DumpJson(ToJson(run.pca)));
  files.Add("report.json", DumpJson(report));
  files.Add("manifest.json", DumpJson(report["manifest"]));
  files.Commit(ctx.out_dir);

  ctx.out << "best C=" << FormatDouble(run.model.hyperparams.c)
          << " gamma=" << FormatDouble(run.model.hyperparams.gamma) << " ("
          << run.search.scheme.Label() << " accuracy " << FormatDouble(run.search.best_accuracy)
          << ")\n";
  ctx.out << "test_accuracy: " << FormatDouble(run.test_accuracy) << "\n";
  return kExitOk;
}

struct SweepFlags {
  DataFlags data;
  ModelFlags model;
  std::string lambda_grid = "0:1:0.1";
  std::string refine;  // step; empty when not refining
  bool refine_given = false;
  std::string around;
  double epsilon = 0.01;
  std::string gap_budget;
  std::string dims = "5,10,15,30";
  bool fast = false;
};

int CmdSweep(const SweepFlags& f, const Context& ctx) {
  SweepOptions options;
  options.pipeline = MakePipelineOptions(f.data, f.model, ctx);
  options.fast = f.fast;
  const auto grid_spec = ParseLambdaGrid(f.lambda_grid);
  const std::vector<double> grid = LambdaGrid(grid_spec[0], grid_spec[1], grid_spec[2]);
  const std::vector<std::size_t> k_set = ParseDims(f.dims);
  std::optional<double> refine_step;
  if (f.refine_given) refine_step = f.refine.empty() ? 0.01 : ParseDouble(f.refine, "--refine");
  std::optional<double> around;
  if (!f.around.empty()) around = ParseDouble(f.around, "--around");
  std::optional<double> budget;
  if (!f.gap_budget.empty()) budget = ParseDouble(f.gap_budget, "--gap-budget");
  if (!(f.epsilon >= 0.0)) throw UsageError("--epsilon must be non-negative");

  Json params = DataParams(f.data, true);
  ModelParams(f.model, params);
  params["lambda-grid"] = f.lambda_grid;
  params["refine"] = refine_step ? Json(FormatDouble(*refine_step)) : Json(nullptr);
  params["around"] = around ? Json(FormatDouble(*around)) : Json(nullptr);
  params["epsilon"] = FormatDouble(f.epsilon);
  params["gap-budget"] = budget ? Json(FormatDouble(*budget)) : Json(nullptr);
  params["dims"] = f.dims;
  params["fast"] = f.fast;

  Inputs in = LoadInputs(f.data, true);
  std::vector<TradeoffRecord> records = Sweep(in.corpus, *in.table, grid, k_set, options);

  auto choose = [&](std::span<const TradeoffRecord> recs) {
    if (budget) return RecommendWithGapBudget(recs, *budget, k_set);
    return Recommend(recs, f.epsilon, k_set);
  };
  Recommendation rec = choose(records);
  Json coarse = ToJson(rec);
  if (refine_step) {
    const double centre = around ? *around : rec.lambda_star;
    records = Refine(records, centre, *refine_step, grid_spec[2], in.corpus, *in.table, k_set,
                     options);
    rec = choose(records);
  }

  Json recs = Json::array();
  for (const auto& r : records) recs.push_back(ToJson(r));
  Json report;
  report["manifest"] = Manifest("sweep", params, ctx);
  report["corpus_stats"] = ToJson(ComputeCorpusStats(in.corpus), in.corpus);
  report["tradeoff"] = std::move(recs);
  if (refine_step) report["coarse_recommendation"] = std::move(coarse);
  report["recommendation"] = ToJson(rec);
  report["warnings"] = in.warnings;

  OutputSet files;
  files.Add("tradeoff.csv", Render([&](std::ostream& s) { WriteTradeoffCsv(s, records); }));
  files.Add("report.json", DumpJson(report));
  files.Add("manifest.json", DumpJson(report["manifest"]));
  files.Commit(ctx.out_dir);

  ctx.out << "records: " << records.size() << "\n";
  ctx.out << "lambda_star: " << FormatDouble(rec.lambda_star)
          << " accuracy=" << FormatDouble(rec.achieved_accuracy)
          << " max_abs_gap=" << FormatDouble(rec.achieved_max_abs_gap)
          << (rec.feasible ? "" : " (gap budget not met)") << "\n";
  return kExitOk;
}

struct SynthFlags {
  SynthOptions options;
  std::string mode = "planted";
};

int CmdSynth(SynthFlags f, const Context& ctx) {
  f.options.mode = ParseSynthMode(f.mode);
  const SynthOptions& o = f.options;
  if (o.core_dims == 0 || o.core_dims >= o.dim) {
    throw UsageError("--core-dims must lie in [1, dim)");
  }
  if (o.docs_per_group == 0 || o.doc_length == 0) {
    throw UsageError("--docs-per-group and --doc-length must be positive");
  }
  if (!(o.strength >= 0.0)) throw UsageError("--strength must be non-negative");
  Json params;
  params["mode"] = f.mode;
  params["strength"] = FormatDouble(o.strength);
  params["dim"] = std::to_string(o.dim);
  params["core-dims"] = std::to_string(o.core_dims);
  params["docs-per-group"] = std::to_string(o.docs_per_group);
  params["doc-length"] = std::to_string(o.doc_length);
  params["off-words"] = std::to_string(o.off_words_per_doc);
  params["seed"] = std::to_string(o.seed);

  const SynthData data = GenerateSynthetic(o);
  OutputSet files;
  files.Add("embeddings.txt",
            Render([&](std::ostream& s) { SynthTable(data).Write(s); }));
  files.Add("corpus.csv", Render([&](std::ostream& s) { WriteSyntheticCorpus(data, s); }));
  files.Add("manifest.json", DumpJson(Manifest("synth", params, ctx)));
  files.Commit(ctx.out_dir);
  ctx.out << "wrote " << data.documents.size() << " documents and " << data.vocabulary.size()
          << " word vectors to " << ctx.out_dir << "\n";
  return kExitOk;
}

int Dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             int depth);

// Rebuilds the original command line from a manifest and runs it again with
// the recorded timestamp.
int CmdReplay(const std::string& manifest_path, const Context& ctx, int depth) {
  if (depth > 0) throw UsageError("a manifest cannot replay another manifest");
  std::ifstream f(manifest_path, std::ios::binary);
  if (!f) throw DataError("cannot open manifest " + manifest_path);
  Json m;
  try {
    m = Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw DataError("manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!m.is_object() || !m.contains("command") || !m.contains("params") ||
      !m["params"].is_object()) {
    throw DataError("manifest lacks command or params");
  }
  const std::string command = m["command"].get<std::string>();
  if (command == "replay") throw DataError("manifest records a replay");
  if (m.value("tool_version", std::string()) != kToolVersion) {
    ctx.err << "warning: manifest written by version " << m.value("tool_version", std::string("?"))
            << ", replaying with " << kToolVersion << "\n";
  }
  std::vector<std::string> args{command};
  for (const auto& [key, value] : m["params"].items()) {
    if (value.is_null()) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
    } else if (value.is_string()) {
      args.push_back("--" + key + "=" + value.get<std::string>());
    } else {
      throw DataError("manifest parameter '" + key + "' has an unexpected type");
    }
  }
  args.push_back("--out=" + ctx.out_dir);
  args.push_back("--threads=" + std::to_string(ctx.threads));
  args.push_back("--timestamp=" + m.value("timestamp", std::string()));
  return Dispatch(args, ctx.out, ctx.err, depth + 1);
}

int Dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             int depth) {
  CLI::App app{"Group-level representational bias audit for sentence encodings", "repbias"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string out_dir;
  unsigned threads = 0;
  std::string timestamp;
  auto add_common = [&](CLI::App* sub, bool out_required) {
    auto* o = sub->add_option("--out", out_dir, "output directory");
    if (out_required) o->required();
    sub->add_option("--threads", threads, "worker threads for grid search (0 = all cores)")
        ->capture_default_str();
    sub->add_option("--timestamp", timestamp, "manifest timestamp override")
        ->group("");  // hidden; used by replay
  };

  StatsFlags stats;
  auto* cmd_stats = app.add_subcommand("stats", "corpus statistics per group");
  AddDataFlags(cmd_stats, stats.data, false);
  add_common(cmd_stats, false);

  AuditFlags audit;
  auto* cmd_audit = app.add_subcommand("audit", "per-group PCA reconstruction error audit");
  AddDataFlags(cmd_audit, audit.data, true);
  cmd_audit->add_option("--strategies", audit.strategies, "avg, ext, convex:<lambda>, comma separated")
      ->capture_default_str();
  cmd_audit->add_option("--dims", audit.dims, "component counts, e.g. 1:20 or 5,10 (default all)")
      ->capture_default_str();
  cmd_audit->add_option("--splits", audit.splits, "random intra-group splits per k")
      ->capture_default_str();
  cmd_audit->add_option("--pca-fit", audit.pca_fit, "rows used to fit PCA: all or train")
      ->capture_default_str();
  cmd_audit->add_option("--train-fraction", audit.train_fraction,
                        "training share when --pca-fit=train")
      ->capture_default_str();
  cmd_audit->add_flag("--save-encodings", audit.save_encodings, "write encodings_<strategy>.csv");
  add_common(cmd_audit, true);

  TrainFlags train;
  auto* cmd_train = app.add_subcommand("train", "grid-searched RBF SVM on one encoding");
  AddDataFlags(cmd_train, train.data, true);
  AddModelFlags(cmd_train, train.model);
  cmd_train->add_option("--strategy", train.strategy, "avg, ext or convex:<lambda>")
      ->capture_default_str();
  cmd_train->add_option("--pca-dims", train.pca_dims, "train on the top-k component scores");
  add_common(cmd_train, true);

  SweepFlags sweep;
  auto* cmd_sweep = app.add_subcommand("sweep", "accuracy/gap trade-off over lambda");
  AddDataFlags(cmd_sweep, sweep.data, true);
  AddModelFlags(cmd_sweep, sweep.model);
  cmd_sweep->add_option("--lambda-grid", sweep.lambda_grid, "start:stop:step")
      ->capture_default_str();
  auto* refine_opt = cmd_sweep->add_option("--refine", sweep.refine,
                                           "add a finer grid (default step 0.01)")
                         ->expected(0, 1);
  cmd_sweep->add_option("--around", sweep.around, "centre of the refined grid (default: lambda*)");
  cmd_sweep->add_option("--epsilon", sweep.epsilon, "accuracy tolerance")->capture_default_str();
  cmd_sweep->add_option("--gap-budget", sweep.gap_budget,
                        "pick the most accurate lambda with max |gap| within this budget");
  cmd_sweep->add_option("--dims", sweep.dims, "component counts")->capture_default_str();
  cmd_sweep->add_flag("--fast", sweep.fast, "reuse lambda = 1 hyperparameters");
  add_common(cmd_sweep, true);

  SynthFlags synth;
  auto* cmd_synth = app.add_subcommand("synth", "write a planted-bias fixture");
  cmd_synth->add_option("--mode", synth.mode, "planted, extrema-only or crossing")
      ->capture_default_str();
  cmd_synth->add_option("--strength", synth.options.strength, "off-core scale")
      ->capture_default_str();
  cmd_synth->add_option("--dim", synth.options.dim)->capture_default_str();
  cmd_synth->add_option("--core-dims", synth.options.core_dims)->capture_default_str();
  cmd_synth->add_option("--docs-per-group", synth.options.docs_per_group)
      ->capture_default_str();
  cmd_synth->add_option("--doc-length", synth.options.doc_length)->capture_default_str();
  cmd_synth->add_option("--off-words", synth.options.off_words_per_doc)
      ->capture_default_str();
  cmd_synth->add_option("--seed", synth.options.seed)->capture_default_str();
  add_common(cmd_synth, true);

  std::string manifest_path;
  auto* cmd_replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  cmd_replay->add_option("manifest", manifest_path, "manifest.json")->required();
  add_common(cmd_replay, true);

  // CLI11 wants argv order reversed.
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Context ctx{out, err, timestamp.empty() ? NowTimestamp() : timestamp,
              threads ? threads : std::max(1u, std::thread::hardware_concurrency()),
              out_dir.empty() ? std::string() : AbsolutePath(out_dir)};

  if (cmd_stats->parsed()) return CmdStats(stats, ctx);
  if (cmd_audit->parsed()) return CmdAudit(audit, ctx);
  if (cmd_train->parsed()) return CmdTrain(train, ctx);
  if (cmd_sweep->parsed()) {
    sweep.refine_given = refine_opt->count() > 0;
    return CmdSweep(sweep, ctx);
  }
  if (cmd_synth->parsed()) return CmdSynth(synth, ctx);
  return CmdReplay(manifest_path, ctx, depth);
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return Dispatch(args, out, err, 0);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace repbias
