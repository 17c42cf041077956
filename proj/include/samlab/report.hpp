#pragma once

// Flat serialisation of SharpnessReport: one JSON object or one CSV row, with
// the struct's field names as keys.

#include <string>
#include <vector>

#include <json.hpp>

#include "samlab/format.hpp"
#include "samlab/probes.hpp"

namespace samlab {

inline const std::vector<std::string>& sharpness_report_fields() {
  static const std::vector<std::string> fields = {
      "base_loss",      "l_asc",          "l_avg_mean",
      "l_avg_stderr",   "l_avg_samples",  "l_max_estimate",
      "l_max_restarts", "standardized_sharpness", "generalization_gap",
      "rho",            "data_scope"};
  return fields;
}

inline nlohmann::ordered_json to_json(const SharpnessReport& r) {
  nlohmann::ordered_json j;
  j["base_loss"] = r.base_loss;
  j["l_asc"] = r.l_asc;
  j["l_avg_mean"] = r.l_avg_mean;
  j["l_avg_stderr"] = r.l_avg_stderr;
  j["l_avg_samples"] = r.l_avg_samples;
  j["l_max_estimate"] = r.l_max_estimate;
  j["l_max_restarts"] = r.l_max_restarts;
  j["standardized_sharpness"] = r.standardized_sharpness;
  j["generalization_gap"] = r.generalization_gap;
  j["rho"] = r.rho;
  j["data_scope"] = r.data_scope;
  return j;
}

inline SharpnessReport sharpness_report_from_json(const nlohmann::json& j) {
  SharpnessReport r;
  r.base_loss = j.at("base_loss").get<double>();
  r.l_asc = j.at("l_asc").get<double>();
  r.l_avg_mean = j.at("l_avg_mean").get<double>();
  r.l_avg_stderr = j.at("l_avg_stderr").get<double>();
  r.l_avg_samples = j.at("l_avg_samples").get<std::size_t>();
  r.l_max_estimate = j.at("l_max_estimate").get<double>();
  r.l_max_restarts = j.at("l_max_restarts").get<int>();
  r.standardized_sharpness = j.at("standardized_sharpness").get<double>();
  r.generalization_gap = j.at("generalization_gap").get<double>();
  r.rho = j.at("rho").get<double>();
  r.data_scope = j.at("data_scope").get<std::string>();
  return r;
}

inline std::string sharpness_csv_header() { return join(sharpness_report_fields(), ","); }

inline std::string to_csv_row(const SharpnessReport& r) {
  return join({format_double(r.base_loss), format_double(r.l_asc), format_double(r.l_avg_mean),
               format_double(r.l_avg_stderr), std::to_string(r.l_avg_samples),
               format_double(r.l_max_estimate), std::to_string(r.l_max_restarts),
               format_double(r.standardized_sharpness), format_double(r.generalization_gap),
               format_double(r.rho), r.data_scope},
              ",");
}

}  // namespace samlab
