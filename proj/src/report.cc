#include "repbias/report.h"

#include <cmath>
#include <ostream>

#include "repbias/csv.h"
#include "repbias/error.h"

namespace repbias {
namespace {

Json LengthJson(const LengthStats& s) {
  return {{"num", s.count},
          {"avg_tokens", s.mean_tokens},
          {"min_tokens", s.min_tokens},
          {"max_tokens", s.max_tokens},
          {"positive_percent", s.positive_percent}};
}

Json Hyperparams(const SvmHyperparams& hp) { return {{"c", hp.c}, {"gamma", hp.gamma}}; }

Json NormJson(const NormSummary& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"count", s.count}};
}

}  // namespace

Json ToJson(const CorpusStats& stats, const Corpus& corpus) {
  Json groups = Json::array();
  for (int g = 0; g < 2; ++g) {
    Json entry = LengthJson(stats.group[g]);
    entry["name"] = corpus.group_names[g];
    groups.push_back(std::move(entry));
  }
  return {{"profile", corpus.profile},
          {"label_names", corpus.label_names},
          {"group_names", corpus.group_names},
          {"total", LengthJson(stats.total)},
          {"groups", std::move(groups)}};
}

Json ToJson(const PcaModel& model) {
  Json components = Json::array();
  for (std::size_t r = 0; r < model.components.rows(); ++r) {
    components.push_back(std::vector<double>(model.components.row(r).begin(),
                                             model.components.row(r).end()));
  }
  return {{"dim", model.dim()},
          {"fitted_on", model.fitted_on},
          {"mean", model.mean},
          {"eigenvalues", model.eigenvalues},
          {"components", std::move(components)}};
}

PcaModel PcaModelFromJson(const Json& j) {
  PcaModel m;
  m.mean = j.at("mean").get<std::vector<double>>();
  m.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  m.fitted_on = j.at("fitted_on").get<std::size_t>();
  const auto& comps = j.at("components");
  m.components = Matrix(m.mean.size(), m.eigenvalues.size());
  if (comps.size() != m.mean.size()) throw DataError("pca json: bad component rows");
  for (std::size_t r = 0; r < comps.size(); ++r) {
    const auto row = comps[r].get<std::vector<double>>();
    if (row.size() != m.eigenvalues.size()) throw DataError("pca json: ragged components");
    for (std::size_t c = 0; c < row.size(); ++c) m.components(r, c) = row[c];
  }
  return m;
}

Json ToJson(const SvmModel& model) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < model.support_rows.rows(); ++r) {
    rows.push_back(std::vector<double>(model.support_rows.row(r).begin(),
                                       model.support_rows.row(r).end()));
  }
  return {{"kernel", "rbf"},
          {"hyperparams", Hyperparams(model.hyperparams)},
          {"feature_dim", model.feature_dim},
          {"bias", model.bias},
          {"dual_coeffs", model.dual_coeffs},
          {"support_rows", std::move(rows)},
          {"dual_objective", model.dual_objective},
          {"iterations", model.iterations}};
}

SvmModel SvmModelFromJson(const Json& j) {
  SvmModel m;
  m.hyperparams.c = j.at("hyperparams").at("c").get<double>();
  m.hyperparams.gamma = j.at("hyperparams").at("gamma").get<double>();
  m.feature_dim = j.at("feature_dim").get<std::size_t>();
  m.bias = j.at("bias").get<double>();
  m.dual_coeffs = j.at("dual_coeffs").get<std::vector<double>>();
  const auto& rows = j.at("support_rows");
  m.support_rows = Matrix(rows.size(), m.feature_dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = rows[r].get<std::vector<double>>();
    if (row.size() != m.feature_dim) throw DataError("svm json: ragged support rows");
    for (std::size_t c = 0; c < row.size(); ++c) m.support_rows(r, c) = row[c];
  }
  m.dual_objective = j.value("dual_objective", 0.0);
  m.iterations = j.value("iterations", std::uint64_t{0});
  return m;
}

Json ToJson(const GridSearchResult& result) {
  Json table = Json::array();
  for (const auto& cell : result.table) {
    table.push_back({{"c", cell.hyperparams.c},
                     {"gamma", cell.hyperparams.gamma},
                     {"val_accuracy", cell.accuracy}});
  }
  return {{"scheme", result.scheme.Label()},
          {"best", Hyperparams(result.best)},
          {"best_val_accuracy", result.best_accuracy},
          {"table", std::move(table)}};
}

Json ToJson(const GroupErrorProfile& profile, const PcaModel* model) {
  Json j = {{"strategy", profile.strategy.Label()},
            {"k", profile.k_values},
            {"err_g0", profile.err_group0},
            {"err_g1", profile.err_group1},
            {"gap", profile.gap}};
  std::vector<double> rms0, rms1;
  for (std::size_t i = 0; i < profile.k_values.size(); ++i) {
    rms0.push_back(std::sqrt(profile.err_group0[i]));
    rms1.push_back(std::sqrt(profile.err_group1[i]));
  }
  j["rms_g0"] = rms0;
  j["rms_g1"] = rms1;
  if (model) j["eigenvalues"] = model->eigenvalues;
  return j;
}

Json ToJson(const SplitBaseline& baseline, const std::string& strategy) {
  Json ratio = Json::array();
  for (const auto& r : baseline.inter_intra_ratio) {
    ratio.push_back(r ? Json(*r) : Json(nullptr));
  }
  return {{"strategy", strategy},
          {"repetitions", baseline.repetitions},
          {"seed", baseline.seed},
          {"k", baseline.k_values},
          {"inter_gap", baseline.inter_gap},
          {"mean_intra_gap", baseline.mean_intra_gap},
          {"max_intra_gap", baseline.max_intra_gap},
          {"inter_intra_ratio", std::move(ratio)}};
}

Json ToJson(const NormStats& stats) {
  Json out = Json::array();
  for (const auto& s : stats) {
    out.push_back({{"strategy", s.strategy},
                   {"group0", NormJson(s.group[0])},
                   {"group1", NormJson(s.group[1])},
                   {"all", NormJson(s.all)},
                   {"norms_overlap", NormsOverlap(s.group[0], s.group[1])}});
  }
  return out;
}

Json ToJson(const TradeoffRecord& r) {
  return {{"lambda", r.lambda},
          {"k", r.k},
          {"err_g0", r.err_group0},
          {"err_g1", r.err_group1},
          {"gap", r.gap},
          {"test_accuracy", r.test_accuracy},
          {"c", r.hyperparams.c},
          {"gamma", r.hyperparams.gamma}};
}

Json ToJson(const Recommendation& rec) {
  Json j = {{"rule", rec.rule},
            {"lambda_star", rec.lambda_star},
            {"epsilon", rec.epsilon},
            {"k_set", rec.k_set},
            {"best_accuracy", rec.best_accuracy},
            {"achieved_accuracy", rec.achieved_accuracy},
            {"achieved_max_abs_gap", rec.achieved_max_abs_gap},
            {"feasible", rec.feasible}};
  if (rec.gap_budget) j["gap_budget"] = *rec.gap_budget;
  return j;
}

void WriteGroupErrorsCsv(std::ostream& out, std::span<const GroupErrorProfile> profiles) {
  WriteCsvRow(out, {"strategy", "k", "err_g0", "err_g1", "gap"});
  for (const auto& p : profiles) {
    for (std::size_t i = 0; i < p.k_values.size(); ++i) {
      WriteCsvRow(out, {p.strategy.Label(), std::to_string(p.k_values[i]),
                        FormatDouble(p.err_group0[i]), FormatDouble(p.err_group1[i]),
                        FormatDouble(p.gap[i])});
    }
  }
}

void WriteBaselineCsv(std::ostream& out, std::span<const SplitBaseline> baselines,
                      std::span<const std::string> strategies) {
  WriteCsvRow(out, {"strategy", "k", "group", "repetition", "intra_gap"});
  for (std::size_t b = 0; b < baselines.size(); ++b) {
    const auto& base = baselines[b];
    for (std::size_t ki = 0; ki < base.k_values.size(); ++ki) {
      for (int g = 0; g < 2; ++g) {
        for (int r = 0; r < base.repetitions; ++r) {
          WriteCsvRow(out, {strategies[b], std::to_string(base.k_values[ki]),
                            std::to_string(g), std::to_string(r),
                            FormatDouble(base.intra_gaps[g][ki][static_cast<std::size_t>(r)])});
        }
      }
    }
  }
}

void WriteTradeoffCsv(std::ostream& out, std::span<const TradeoffRecord> records) {
  WriteCsvRow(out, {"lambda", "k", "err_g0", "err_g1", "gap", "test_accuracy", "c", "gamma"});
  for (const auto& r : records) {
    WriteCsvRow(out, {FormatDouble(r.lambda), std::to_string(r.k), FormatDouble(r.err_group0),
                      FormatDouble(r.err_group1), FormatDouble(r.gap),
                      FormatDouble(r.test_accuracy), FormatDouble(r.hyperparams.c),
                      FormatDouble(r.hyperparams.gamma)});
  }
}

void WriteGridCsv(std::ostream& out, const GridSearchResult& result) {
  WriteCsvRow(out, {"c", "gamma", "val_accuracy"});
  for (const auto& cell : result.table) {
    WriteCsvRow(out, {FormatDouble(cell.hyperparams.c), FormatDouble(cell.hyperparams.gamma),
                      FormatDouble(cell.accuracy)});
  }
}

std::string DumpJson(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace repbias
