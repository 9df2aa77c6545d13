#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "brw/model.hpp"
#include "brw/rates.hpp"
#include "brw/simulate.hpp"

namespace brw {

using Json = nlohmann::ordered_json;

/// Model from the config document
///   {"offspring": {"2": 1.0},
///    "step": {"kind": "lattice", "span": 1.0, "pmf": {"-1": 0.25, "0": 0.5, "1": 0.25}}}
/// with step kinds "lattice", "weibull" (alpha, lambda) and "gumbel" (alpha).
/// Probabilities may be numbers or decimal strings. Throws ConfigError for
/// malformed documents; law and model errors propagate.
Model parse_model(const nlohmann::json& doc);
Model load_model(const std::filesystem::path& path);

/// %.17g, with inf, -inf and nan spelled out.
std::string format_double(double v);

/// Serializes with every floating value printed by format_double. Non-finite
/// values become the strings "inf", "-inf" and "nan".
std::string dump_json(const Json& value);

Json constants_json(const Model& model);
Json to_json(const RateReport& report);
/// wall_time_ms is written only when `with_timing` is set.
Json to_json(const EstimateRecord& record, bool with_timing);

/// First line of every CSV artifact: "# model_constants: {...}".
std::string csv_constants_line(const Model& model);

/// Writes through a temporary file in the same directory and renames it.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace brw
