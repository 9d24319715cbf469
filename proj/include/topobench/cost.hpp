#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "topobench/types.hpp"

namespace topobench {

/// Dollars per million tokens.
struct ModelPrice {
  double input_per_million = 0.0;
  double output_per_million = 0.0;
};

using PriceTable = std::map<std::string, ModelPrice>;

struct Cost {
  double input = 0.0;
  double output = 0.0;

  double total() const { return input + output; }
  Cost& operator+=(const Cost& o) {
    input += o.input;
    output += o.output;
    return *this;
  }
  friend bool operator==(const Cost&, const Cost&) = default;
};

/// Throws ConfigError when `model_family` has no price entry.
Cost account_usage(const TokenUsage& usage, const std::string& model_family, const PriceTable& prices);

/// {"family": {"input_per_million": x, "output_per_million": y}, ...}
PriceTable parse_price_table(const nlohmann::json& j);
PriceTable load_price_table(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const Cost& c);
void from_json(const nlohmann::json& j, Cost& c);

}  // namespace topobench
