#include "topobench/cost.hpp"

#include <fstream>

#include "topobench/error.hpp"

namespace topobench {

Cost account_usage(const TokenUsage& usage, const std::string& model_family, const PriceTable& prices) {
  const auto it = prices.find(model_family);
  if (it == prices.end()) throw ConfigError("no price entry for model family '" + model_family + "'");
  return {static_cast<double>(usage.input_tokens) * it->second.input_per_million / 1e6,
          static_cast<double>(usage.output_tokens) * it->second.output_per_million / 1e6};
}

PriceTable parse_price_table(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("price_table", "expected object keyed by model family");
  PriceTable table;
  for (const auto& [family, entry] : j.items()) {
    if (!entry.is_object() || !entry.contains("input_per_million") || !entry.contains("output_per_million")) {
      throw ParseError("price_table." + family, "expected input_per_million and output_per_million");
    }
    const ModelPrice p{entry.at("input_per_million").get<double>(), entry.at("output_per_million").get<double>()};
    if (p.input_per_million < 0 || p.output_per_million < 0) {
      throw ParseError("price_table." + family, "negative price");
    }
    table.emplace(family, p);
  }
  return table;
}

PriceTable load_price_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open price table " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), e.what());
  }
  return parse_price_table(j);
}

void to_json(nlohmann::json& j, const Cost& c) {
  j = {{"input", c.input}, {"output", c.output}, {"total", c.total()}};
}

void from_json(const nlohmann::json& j, Cost& c) {
  c.input = j.value("input", 0.0);
  c.output = j.value("output", 0.0);
}

}  // namespace topobench
