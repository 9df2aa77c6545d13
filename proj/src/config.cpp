#include "brw/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "brw/error.hpp"

namespace brw {

namespace {

double probability(const nlohmann::json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw Error(ErrorCode::ConfigError, where + ": not a decimal number: " + s);
    return out;
  }
  throw Error(ErrorCode::ConfigError, where + ": probability must be a number or a decimal string");
}

long integer_key(const std::string& key, const std::string& where) {
  std::size_t used = 0;
  long out = 0;
  try {
    out = std::stol(key, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != key.size() || key.empty()) throw Error(ErrorCode::ConfigError, where + ": key is not an integer: " + key);
  return out;
}

const nlohmann::json& member(const nlohmann::json& obj, const char* name, const std::string& where) {
  if (!obj.is_object() || !obj.contains(name)) {
    throw Error(ErrorCode::ConfigError, where + ": missing field \"" + name + "\"");
  }
  return obj.at(name);
}

double number(const nlohmann::json& obj, const char* name, const std::string& where) {
  const auto& v = member(obj, name, where);
  if (!v.is_number()) throw Error(ErrorCode::ConfigError, where + "." + name + " must be a number");
  return v.get<double>();
}

void dump_value(const Json& v, std::string& out) {
  switch (v.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [k, item] : v.items()) {
        if (!first) out += ',';
        first = false;
        out += Json(k).dump();
        out += ':';
        dump_value(item, out);
      }
      out += '}';
      break;
    }
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& item : v) {
        if (!first) out += ',';
        first = false;
        dump_value(item, out);
      }
      out += ']';
      break;
    }
    case Json::value_t::number_float: {
      const double d = v.get<double>();
      if (std::isfinite(d)) {
        out += format_double(d);
      } else {
        out += '"' + format_double(d) + '"';
      }
      break;
    }
    default: out += v.dump(); break;
  }
}

}  // namespace

Model parse_model(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "model config must be a JSON object");
  const auto& off_doc = member(doc, "offspring", "config");
  if (!off_doc.is_object() || off_doc.empty()) throw Error(ErrorCode::ConfigError, "offspring must be a nonempty object");
  std::map<int, double> off_pmf;
  for (const auto& [key, value] : off_doc.items()) {
    const long k = integer_key(key, "offspring");
    if (k < 0 || k > 1'000'000) throw Error(ErrorCode::ConfigError, "offspring: child count out of range: " + key);
    off_pmf[static_cast<int>(k)] = probability(value, "offspring[" + key + "]");
  }
  OffspringLaw off = OffspringLaw::from_map(off_pmf);

  const auto& step_doc = member(doc, "step", "config");
  const auto& kind_doc = member(step_doc, "kind", "step");
  if (!kind_doc.is_string()) throw Error(ErrorCode::ConfigError, "step.kind must be a string");
  const std::string kind = kind_doc.get<std::string>();
  if (kind == "lattice") {
    const double span = number(step_doc, "span", "step");
    const auto& pmf_doc = member(step_doc, "pmf", "step");
    if (!pmf_doc.is_object() || pmf_doc.empty()) throw Error(ErrorCode::ConfigError, "step.pmf must be a nonempty object");
    std::map<long, double> pmf;
    for (const auto& [key, value] : pmf_doc.items()) pmf[integer_key(key, "step.pmf")] = probability(value, "step.pmf[" + key + "]");
    return Model::make(std::move(off), StepLaw::lattice(span, pmf));
  }
  if (kind == "weibull") {
    return Model::make(std::move(off), StepLaw::weibull(number(step_doc, "alpha", "step"), number(step_doc, "lambda", "step")));
  }
  if (kind == "gumbel") return Model::make(std::move(off), StepLaw::gumbel(number(step_doc, "alpha", "step")));
  throw Error(ErrorCode::ConfigError, "unknown step kind: " + kind);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read model config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return parse_model(doc);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) v = 0.0;  // drop the sign of zero
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dump_json(const Json& value) {
  std::string out;
  dump_value(value, out);
  return out;
}

Json constants_json(const Model& model) {
  const ModelConstants& c = model.constants;
  const auto flag = [](const AssumptionFlag& f) { return Json{{"ok", f.ok}, {"reason", f.reason}}; };
  Json j;
  j["x_star"] = c.x_star;
  if (c.degenerate) {
    j["theta_star"] = "degenerate";
  } else {
    j["theta_star"] = c.theta_star;
  }
  j["log_m"] = c.log_m;
  j["L"] = c.L;
  j["R"] = c.R;
  j["degenerate"] = c.degenerate;
  j["speed_residual"] = c.speed_residual;
  j["step"] = model.step.describe();
  j["assumptions"] = Json{{"A11", flag(c.a11)}, {"A12", flag(c.a12)}, {"A13", flag(c.a13)}, {"A14", flag(c.a14)}};
  return j;
}

Json to_json(const RateReport& report) {
  Json params = Json::object();
  for (const auto& [k, v] : report.params) params[k] = v;
  Json j;
  j["name"] = report.name;
  j["value"] = report.value;
  j["params"] = params;
  j["argopt"] = report.argopt;
  j["residual"] = report.residual;
  if (!report.flag.empty()) j["flag"] = report.flag;
  return j;
}

Json to_json(const EstimateRecord& record, bool with_timing) {
  Json details = Json::object();
  for (const auto& [k, v] : record.details) details[k] = v;
  Json j;
  j["name"] = record.name;
  j["estimate"] = record.estimate;
  j["log_domain"] = record.log_domain;
  j["std_error"] = record.std_error;
  j["replicas"] = record.replicas;
  j["seed"] = record.seed;
  if (with_timing && record.wall_time_ms) {
    j["wall_time_ms"] = *record.wall_time_ms;
  } else {
    j["wall_time_ms"] = nullptr;
  }
  j["method"] = to_string(record.method);
  j["tag"] = record.tag;
  j["details"] = details;
  return j;
}

std::string csv_constants_line(const Model& model) {
  return "# model_constants: " + dump_json(constants_json(model)) + "\n";
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::ConfigError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace brw
