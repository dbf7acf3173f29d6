#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "mrfdens/histogram.hpp"
#include "mrfdens/rate.hpp"
#include "mrfdens/relunet.hpp"
#include "mrfdens/scheffe.hpp"
#include "mrfdens/synth.hpp"

namespace mrfdens {

nlohmann::json factor_to_json(const HistogramFactor& f);
HistogramFactor factor_from_json(const nlohmann::json& j, int d, int b);
nlohmann::json hist_to_json(const ProductHistogram& h);
ProductHistogram hist_from_json(const nlohmann::json& j);

nlohmann::json candidates_to_json(const CandidateSet& c);
CandidateSet candidates_from_json(const nlohmann::json& j);

nlohmann::json model_to_json(const CliqueNetModel& m);
CliqueNetModel model_from_json(const nlohmann::json& j);

nlohmann::json potential_to_json(const PairPotential& p);
PairPotential potential_from_json(const nlohmann::json& j);

nlohmann::json rate_config_to_json(const RateConfig& cfg);
RateConfig rate_config_from_json(const nlohmann::json& j);
nlohmann::json rate_report_to_json(const RateReport& rep);

// CSV with header x1,...,xd and one %.17g-formatted point per row.
void write_samples_csv(std::ostream& out, const SampleMatrix& m);
SampleMatrix read_samples_csv(std::istream& in);
void write_samples_csv_file(const std::string& path, const SampleMatrix& m);
SampleMatrix read_samples_csv_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

// Validator for the JSON Schema subset used by the shipped schemas: type,
// properties, required, additionalProperties, items, enum, minimum, maximum,
// minItems, maxItems. Returns false and fills err with a $-path message.
bool validate_json(const nlohmann::json& doc, const nlohmann::json& schema, std::string& err);

}  // namespace mrfdens
