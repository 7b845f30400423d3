// Standalone acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles/qp_oracle.h"
#include "oracles/svd_oracle.h"
#include "repbias/audit.h"
#include "repbias/cli.h"
#include "repbias/corpus.h"
#include "repbias/encoder.h"
#include "repbias/pca.h"
#include "repbias/random.h"
#include "repbias/report.h"
#include "repbias/svm.h"
#include "repbias/synth.h"
#include "repbias/tradeoff.h"
#include "unit/test_util.h"

namespace repbias {
namespace {

namespace fs = std::filesystem;
using testing::RandomMatrix;
using testing::ReadFile;
using testing::TempDir;

// Collects the first failure message of a criterion.
class Check {
 public:
  void That(bool ok, const std::string& what) {
    if (!ok && failure_.empty()) failure_ = what;
  }
  bool ok() const { return failure_.empty(); }
  const std::string& failure() const { return failure_; }

 private:
  std::string failure_;
};

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int RunQuiet(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = RunCli(args, out, err);
  if (code != 0) std::cerr << "  repbias " << args[0] << " exited " << code << ": " << err.str();
  return code;
}

// 1. Eigenvalues and reconstruction errors against an SVD oracle.
void PcaOracle(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(1001);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 5 + gen() % 36, d = 2 + gen() % 19;
    const Matrix x = RandomMatrix(n, d, gen, 1.0 + static_cast<double>(t % 5));
    const PcaModel m = FitPca(x);
    const auto o = oracle::FitSvdPca(x);
    const double scale = o.eigenvalues(0);
    for (std::size_t j = 0; j < m.max_components(); ++j) {
      const double want = o.eigenvalues(static_cast<Eigen::Index>(j));
      c.That(std::abs(m.eigenvalues[j] - want) <= 1e-8 * scale,
             "eigenvalue mismatch at trial " + std::to_string(t));
    }
    for (std::size_t k = 1; k <= m.max_components(); ++k) {
      const double want = oracle::SvdReconstructionError(o, x, k);
      const double got = ReconstructionError(m, x, k);
      c.That(std::abs(got - want) <= 1e-8 * std::max(want, scale),
             "reconstruction error mismatch at trial " + std::to_string(t));
    }
  }
  c.That(Seconds(start) < 5.0, "runtime over 5 s");
}

// 2. Structural properties of every fitted model.
void PcaStructure(Check& c) {
  std::mt19937_64 gen(1002);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 5 + gen() % 36, d = 2 + gen() % 19;
    const Matrix x = RandomMatrix(n, d, gen, 2.0);
    const PcaModel m = FitPca(x);
    const std::size_t r = m.max_components();
    const std::string at = " at trial " + std::to_string(t);
    for (std::size_t a = 0; a < r; ++a) {
      for (std::size_t b = 0; b < r; ++b) {
        double dot = 0;
        for (std::size_t i = 0; i < d; ++i) dot += m.components(i, a) * m.components(i, b);
        c.That(std::abs(dot - (a == b ? 1.0 : 0.0)) <= 1e-8, "not orthonormal" + at);
      }
    }
    double total = 0;
    for (double e : m.eigenvalues) total += e;
    double prev = ReconstructionError(m, x, 1);
    for (std::size_t k = 1; k <= r; ++k) {
      const double err = ReconstructionError(m, x, k);
      c.That(err <= prev + 1e-12, "error not monotone in k" + at);
      prev = err;
      double tail = 0;
      for (std::size_t j = k; j < r; ++j) tail += m.eigenvalues[j];
      const double want = tail * static_cast<double>(n - 1) / static_cast<double>(n);
      c.That(std::abs(err - want) <= 1e-6 * std::max(want, 1e-6 * total),
             "eigenvalue tail identity" + at);
    }
    if (r == d) c.That(ReconstructionError(m, x, d) <= 1e-10, "nonzero error at k = d" + at);
  }
}

// 3. Encoder algebra on random tables and token lists.
void EncoderAlgebra(Check& c) {
  std::mt19937_64 gen(1003);
  std::normal_distribution<double> value(0, 2);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t d = 1 + gen() % 8, vocab = 1 + gen() % 10, len = 1 + gen() % 12;
    std::vector<std::pair<std::string, std::vector<double>>> entries;
    for (std::size_t w = 0; w < vocab; ++w) {
      std::vector<double> v(d);
      for (double& x : v) x = value(gen);
      entries.emplace_back("w" + std::to_string(w), v);
    }
    const EmbeddingTable table = EmbeddingTable::FromEntries(entries);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < len; ++i) tokens.push_back("w" + std::to_string(gen() % vocab));
    const std::string at = " at case " + std::to_string(t);

    const auto avg = EncodeAverage(tokens, table, OovPolicy::kSkip);
    const auto ext = EncodeExtrema(tokens, table, OovPolicy::kSkip);
    for (std::size_t j = 0; j < d; ++j) {
      double lo = INFINITY, hi = -INFINITY, mag = 0;
      for (const auto& tok : tokens) {
        const double x = (*table.Lookup(tok))[j];
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        mag = std::max(mag, std::abs(x));
      }
      c.That(std::abs(ext[j]) == mag, "extrema does not dominate" + at);
      c.That(ext[j] == lo || ext[j] == hi, "extrema is not a member value" + at);
      c.That(avg[j] >= lo - 1e-12 && avg[j] <= hi + 1e-12, "average outside hull" + at);
    }

    const double lambda = std::uniform_real_distribution<double>(0, 1)(gen);
    const auto conv = EncodeConvex(tokens, table, lambda, OovPolicy::kSkip);
    for (std::size_t j = 0; j < d; ++j) {
      c.That(std::abs(conv[j] - (lambda * avg[j] + (1 - lambda) * ext[j])) <= 1e-12,
             "convex combination not affine" + at);
    }

    auto shuffled = tokens;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    const auto avg2 = EncodeAverage(shuffled, table, OovPolicy::kSkip);
    const auto ext2 = EncodeExtrema(shuffled, table, OovPolicy::kSkip);
    for (std::size_t j = 0; j < d; ++j) {
      c.That(std::abs(avg2[j] - avg[j]) <= 1e-12, "average depends on order" + at);
      c.That(ext2[j] == ext[j], "extrema depends on order" + at);
    }
  }
}

// 4. SMO against a dense interior-point QP oracle.
void SvmOracle(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 gen(1004);
  std::normal_distribution<double> noise(0, 1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 4 + gen() % 57, dim = 1 + gen() % 4;
    const double sep = std::uniform_real_distribution<double>(0, 3)(gen);
    Matrix x(n, dim);
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      const int label = i % 2 ? 1 : -1;
      for (std::size_t j = 0; j < dim; ++j) x(i, j) = noise(gen) + (j == 0 ? label * sep / 2 : 0);
      y.push_back(label);
    }
    const double cc = std::pow(2.0, static_cast<double>(gen() % 9) - 3.0);
    const double gamma = std::pow(2.0, static_cast<double>(gen() % 7) - 4.0);
    const std::string at = " at instance " + std::to_string(t);
    const DualSolution s = SolveDual(x, y, {cc, gamma});
    const auto o = oracle::SolveSvmDualQp(x, y, cc, gamma);
    c.That(std::abs(s.dual_objective - o.dual_objective) <= 1e-4 * std::abs(o.dual_objective),
           "dual objective differs from QP oracle" + at);
    double eq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      c.That(s.alpha[i] >= -1e-9 && s.alpha[i] <= cc + 1e-9, "box constraint violated" + at);
      eq += s.alpha[i] * y[i];
    }
    c.That(std::abs(eq) <= 1e-6, "equality constraint violated" + at);
  }

  const Matrix xor4 = testing::FromRows({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
  const std::vector<int> xy{1, 1, -1, -1};
  c.That(EvaluateAccuracy(TrainSvm(xor4, xy, {10, 1}), xor4, xy) == 1.0, "XOR-4 not fitted");

  Matrix blobs(60, 2);
  std::vector<int> by;
  for (std::size_t i = 0; i < 60; ++i) {
    const int label = i % 2 ? 1 : -1;
    blobs(i, 0) = noise(gen) + 4.0 * label;
    blobs(i, 1) = noise(gen);
    by.push_back(label);
  }
  c.That(EvaluateAccuracy(TrainSvm(blobs, by, {1, 0.5}), blobs, by) == 1.0,
         "separable blobs not fitted");
  c.That(Seconds(start) < 30.0, "runtime over 30 s");
}

// 5. Planted-bias detection end to end through the CLI.
void PlantedBias(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  TempDir dir;
  const std::string data = (dir / "data").string();
  if (RunQuiet({"synth", "--out", data, "--mode", "planted", "--strength", "1"}) != 0) {
    c.That(false, "synth failed");
    return;
  }
  const std::size_t d = SynthOptions{}.dim;
  if (RunQuiet({"audit", "--data", data + "/corpus.csv", "--embeddings", data + "/embeddings.txt",
                "--id-col", "id", "--strategies", "avg", "--splits", "20", "--dims",
                "5:" + std::to_string(d - 1), "--out", (dir / "audit").string()}) != 0) {
    c.That(false, "audit failed");
    return;
  }
  const auto report = nlohmann::json::parse(ReadFile(dir / "audit" / "report.json"));
  const auto& profile = report["group_error_profiles"][0];
  const auto& baseline = report["split_baselines"][0];
  double worst = INFINITY;
  for (std::size_t i = 0; i < profile["k"].size(); ++i) {
    const std::string at = " at k = " + std::to_string(profile["k"][i].get<int>());
    c.That(profile["gap"][i].get<double>() < 0.0, "gap not negative" + at);
    const auto& ratio = baseline["inter_intra_ratio"][i];
    c.That(!ratio.is_null() && ratio.get<double>() >= 5.0, "inter/intra ratio below 5" + at);
    if (!ratio.is_null()) worst = std::min(worst, ratio.get<double>());
  }
  c.That(baseline["repetitions"] == 20, "baseline did not use 20 repetitions");
  c.That(Seconds(start) < 60.0, "runtime over 60 s");
  std::cout << "  planted bias: min inter/intra ratio " << worst << " over k = 5.." << d - 1 << "\n";
}

// 6. Endpoint sweep equals pure-strategy runs; default grid size.
void EndpointConsistency(Check& c) {
  TempDir dir;
  const std::string data = (dir / "data").string();
  if (RunQuiet({"synth", "--out", data, "--mode", "extrema-only", "--docs-per-group", "40", "--dim",
                "10", "--core-dims", "3"}) != 0) {
    c.That(false, "synth failed");
    return;
  }
  const std::vector<std::string> common{"--data", data + "/corpus.csv", "--embeddings",
                                        data + "/embeddings.txt", "--id-col", "id", "--dims",
                                        "2,5", "--c-range", "-1:1:2", "--gamma-range", "-3:-1:2"};
  auto sweep = [&](const std::string& grid, const std::string& out) {
    std::vector<std::string> args{"sweep", "--lambda-grid", grid, "--out", (dir / out).string()};
    args.insert(args.end(), common.begin(), common.end());
    return RunQuiet(args);
  };
  if (sweep("0:1:1", "ends") != 0 || sweep("0:1:0.1", "full") != 0) {
    c.That(false, "sweep failed");
    return;
  }

  Corpus corpus = TokenizeCorpus(
      LoadCsv(data + "/corpus.csv", {"text", "label", "group", std::string("id")}).corpus,
      PreprocessProfile{});
  corpus = BalanceByGroup(corpus, DeriveSeed(0, "balance"));
  const auto table = EmbeddingTable::Load(data + "/embeddings.txt");
  PipelineOptions o;
  o.grid = GridSpec::Exponential(-1, 1, 2, -3, -1, 2);
  const std::vector<std::size_t> ks{2, 5};
  auto pure = EvaluateStrategy(corpus, table, EncodingStrategy::Extrema(), ks, o);
  const auto avg = EvaluateStrategy(corpus, table, EncodingStrategy::Average(), ks, o);
  pure.insert(pure.end(), avg.begin(), avg.end());
  std::ostringstream want;
  WriteTradeoffCsv(want, pure);
  c.That(ReadFile(dir / "ends" / "tradeoff.csv") == want.str(),
         "endpoint sweep differs from pure-strategy runs");

  const auto report = nlohmann::json::parse(ReadFile(dir / "full" / "report.json"));
  std::map<std::size_t, std::set<double>> per_k;
  for (const auto& r : report["tradeoff"]) per_k[r["k"].get<std::size_t>()].insert(r["lambda"].get<double>());
  c.That(per_k.size() == 2, "missing k in sweep");
  for (const auto& [k, lambdas] : per_k) {
    c.That(lambdas.size() == 11, "default grid did not give 11 records for k = " + std::to_string(k));
  }
}

// 7. Recommendation at a known gap zero-crossing, against exhaustive search.
void RecommendationCorrectness(Check& c) {
  std::mt19937_64 gen(1007);
  std::uniform_real_distribution<double> cross(0.02, 0.98), slope(0.5, 3.0), wobble(0, 0.004);
  const auto grid = LambdaGrid(0, 1, 0.1);
  const std::vector<std::size_t> ks{5, 10};
  const double epsilon = 0.01;
  int checked = 0;
  for (int t = 0; t < 500; ++t) {
    const double zero = cross(gen);
    const double s = slope(gen);
    std::vector<TradeoffRecord> recs;
    std::map<double, double> accuracy, worst_gap;
    for (double l : grid) {
      const double acc = 0.8 + wobble(gen);  // every lambda inside the epsilon band
      accuracy[l] = acc;
      for (std::size_t k : ks) {
        TradeoffRecord r;
        r.lambda = l;
        r.k = k;
        r.gap = s * (l - zero) * (k == 5 ? 1.0 : 0.5);
        r.err_group0 = 1.0 + r.gap;
        r.err_group1 = 1.0;
        r.test_accuracy = acc;
        recs.push_back(r);
        worst_gap[l] = std::max(worst_gap[l], std::abs(r.gap));
      }
    }
    // Exhaustive oracle: admissible lambdas, then smallest worst gap.
    double best_acc = 0;
    for (const auto& [l, a] : accuracy) best_acc = std::max(best_acc, a);
    double oracle_pick = -1;
    for (double l : grid) {
      if (accuracy[l] < best_acc - epsilon) continue;
      if (oracle_pick < 0 || worst_gap[l] < worst_gap[oracle_pick]) oracle_pick = l;
    }
    double nearest = grid[0];
    for (double l : grid) {
      if (std::abs(l - zero) < std::abs(nearest - zero)) nearest = l;
    }
    if (std::abs(std::abs(nearest - zero) - 0.05) < 1e-9) continue;  // equidistant crossing
    ++checked;
    const double got = Recommend(recs, epsilon, ks).lambda_star;
    c.That(got == oracle_pick, "recommendation differs from exhaustive search");
    c.That(got == nearest, "recommendation is not the grid point nearest the crossing");
  }
  c.That(checked > 400, "too few fixtures checked");
  const auto refined = RefineGrid(1.0, 0.01, 0.1);
  c.That(std::find(refined.begin(), refined.end(), 0.97) != refined.end(),
         "refined grid around 1.0 lacks 0.97");
}

// 8. Replaying manifests reproduces every output byte for byte.
void ReplayDeterminism(Check& c) {
  TempDir dir;
  const std::string data = (dir / "data").string();
  if (RunQuiet({"synth", "--out", data, "--docs-per-group", "40", "--dim", "10", "--core-dims",
                "3", "--seed", "8"}) != 0) {
    c.That(false, "synth failed");
    return;
  }
  const std::vector<std::string> in{"--data", data + "/corpus.csv", "--embeddings",
                                    data + "/embeddings.txt", "--id-col", "id", "--seed", "3"};
  const std::vector<std::vector<std::string>> runs{
      {"audit", "--splits", "6", "--save-encodings", "--strategies", "avg,ext,convex:0.3"},
      {"train", "--strategy", "convex:0.5", "--pca-dims", "4", "--c-range", "-1:3:2",
       "--gamma-range", "-3:-1:2"},
      {"sweep", "--lambda-grid", "0:1:0.5", "--dims", "2,4", "--c-range", "-1:1:2",
       "--gamma-range", "-3:-1:2", "--refine", "0.25"}};
  for (const auto& head : runs) {
    const fs::path original = dir / (head[0] + "-orig");
    std::vector<std::string> args = head;
    args.insert(args.end(), in.begin(), in.end());
    args.insert(args.end(), {"--out", original.string()});
    if (RunQuiet(args) != 0) {
      c.That(false, head[0] + " failed");
      continue;
    }
    const fs::path manifest = original / "manifest.json";
    const fs::path r1 = dir / (head[0] + "-r1"), r2 = dir / (head[0] + "-r2");
    if (RunQuiet({"replay", manifest.string(), "--out", r1.string()}) != 0 ||
        RunQuiet({"replay", manifest.string(), "--out", r2.string(), "--threads", "1"}) != 0) {
      c.That(false, head[0] + " replay failed");
      continue;
    }
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(original)) {
      const auto name = entry.path().filename();
      const std::string bytes = ReadFile(entry.path());
      c.That(fs::exists(r1 / name) && ReadFile(r1 / name) == bytes,
             head[0] + ": first replay differs in " + name.string());
      c.That(fs::exists(r2 / name) && ReadFile(r2 / name) == bytes,
             head[0] + ": second replay differs in " + name.string());
      ++files;
    }
    c.That(files >= 3, head[0] + " wrote too few files");
  }
}

Corpus GroupLabelCorpus(std::size_t g0, std::size_t g1, std::mt19937_64& gen) {
  Corpus c;
  c.label_names = {"neg", "pos"};
  c.group_names = {"a", "b"};
  for (std::size_t i = 0; i < g0 + g1; ++i) {
    Sample s;
    s.id = "s" + std::to_string(i);
    s.text = "x";
    s.tokens = {"x"};
    s.group = i < g0 ? 0 : 1;
    s.label = static_cast<int>(gen() % 2);
    c.samples.push_back(s);
  }
  return c;
}

// 9. Exact balancing and the 1192-row split shape.
void DatasetPlumbing(Check& c) {
  std::mt19937_64 gen(1009);
  for (int t = 0; t < 200; ++t) {
    const std::size_t g0 = 1 + gen() % 300, g1 = 1 + gen() % 300;
    const Corpus b = BalanceByGroup(GroupLabelCorpus(g0, g1, gen), gen());
    c.That(b.GroupCount(0) == std::min(g0, g1) && b.GroupCount(1) == std::min(g0, g1),
           "balanced group counts differ");
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Corpus corpus = GroupLabelCorpus(596, 596, gen);
    const SplitPlan plan = MakeSplit(corpus, 1000.0 / 1192.0, seed);
    c.That(plan.test_ids.size() == 192, "split of 1192 rows did not hold out 192");
    c.That(plan.train_ids.size() == 1000, "split of 1192 rows did not keep 1000 for training");
  }
}

}  // namespace
}  // namespace repbias

int main() {
  using Criterion = std::pair<const char*, std::function<void(repbias::Check&)>>;
  const std::vector<Criterion> criteria{
      {"pca-oracle-equivalence", repbias::PcaOracle},
      {"pca-structure", repbias::PcaStructure},
      {"encoder-algebra", repbias::EncoderAlgebra},
      {"svm-qp-equivalence", repbias::SvmOracle},
      {"planted-bias-detection", repbias::PlantedBias},
      {"endpoint-consistency", repbias::EndpointConsistency},
      {"recommendation-correctness", repbias::RecommendationCorrectness},
      {"replay-determinism", repbias::ReplayDeterminism},
      {"dataset-plumbing", repbias::DatasetPlumbing},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    repbias::Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(check);
    } catch (const std::exception& e) {
      check.That(false, std::string("exception: ") + e.what());
    }
    const double secs = repbias::Seconds(start);
    std::printf("%s criterion %zu %s (%.2f s)%s%s\n", check.ok() ? "PASS" : "FAIL", i + 1,
                criteria[i].first, secs, check.ok() ? "" : ": ", check.failure().c_str());
    std::fflush(stdout);
    if (!check.ok()) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
