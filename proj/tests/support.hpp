#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ncr/model_io.hpp"
#include "ncr/ncmodel.hpp"

namespace testing_support {

// One-chart model; coordinate i with a positive exponent carries component
// "V{i+1}" of the same multiplicity.
inline nlohmann::ordered_json chart_doc(const std::vector<int>& exponents, const std::string& unit = "1",
                                        double radius = 1.0, const std::string& field = "real",
                                        const std::string& sign_mode = "general") {
  nlohmann::ordered_json d;
  d["name"] = "test";
  d["sign_mode"] = sign_mode;
  d["level_bound"] = 0.05;
  d["components"] = nlohmann::ordered_json::array();
  nlohmann::ordered_json chart;
  chart["id"] = "main";
  chart["field_kind"] = field;
  chart["dim"] = exponents.size();
  chart["exponents"] = exponents;
  chart["unit_factor"] = unit;
  chart["domain_radius"] = radius;
  chart["divisor_labels"] = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < exponents.size(); ++i) {
    if (exponents[i] <= 0) continue;
    const std::string id = "V" + std::to_string(i + 1);
    chart["divisor_labels"]["x" + std::to_string(i + 1)] = id;
    d["components"].push_back({{"id", id}, {"multiplicity", exponents[i]}, {"connected", true}});
  }
  d["charts"] = nlohmann::ordered_json::array({chart});
  return d;
}

inline ncr::NCModel chart_model(const std::vector<int>& exponents, const std::string& unit = "1", double radius = 1.0,
                                const std::string& field = "real") {
  return ncr::load_model(chart_doc(exponents, unit, radius, field).dump());
}

}  // namespace testing_support
