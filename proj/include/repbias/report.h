#ifndef REPBIAS_REPORT_H_
#define REPBIAS_REPORT_H_

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "repbias/audit.h"
#include "repbias/corpus.h"
#include "repbias/pca.h"
#include "repbias/svm.h"
#include "repbias/tradeoff.h"

namespace repbias {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

Json ToJson(const CorpusStats& stats, const Corpus& corpus);
Json ToJson(const PcaModel& model);
PcaModel PcaModelFromJson(const Json& j);
Json ToJson(const SvmModel& model);
SvmModel SvmModelFromJson(const Json& j);
Json ToJson(const GridSearchResult& result);
Json ToJson(const GroupErrorProfile& profile, const PcaModel* model = nullptr);
Json ToJson(const SplitBaseline& baseline, const std::string& strategy);
Json ToJson(const NormStats& stats);
Json ToJson(const TradeoffRecord& record);
Json ToJson(const Recommendation& rec);

// CSV writers for the documented file schemas.
void WriteGroupErrorsCsv(std::ostream& out, std::span<const GroupErrorProfile> profiles);
void WriteBaselineCsv(std::ostream& out, std::span<const SplitBaseline> baselines,
                      std::span<const std::string> strategies);
void WriteTradeoffCsv(std::ostream& out, std::span<const TradeoffRecord> records);
void WriteGridCsv(std::ostream& out, const GridSearchResult& result);

// Serialized JSON text: two-space indent, trailing newline.
std::string DumpJson(const Json& j);

}  // namespace repbias

#endif  // REPBIAS_REPORT_H_
