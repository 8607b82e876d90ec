#pragma once

#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

namespace mvtp::cli {

/// Reads option defaults from a JSON object or, failing the leading '{', a
/// TOML/INI file. Nested JSON objects become sections. Keys outside any
/// section belong to `default_section`.
class JsonOrTomlConfig : public CLI::ConfigTOML {
 public:
  explicit JsonOrTomlConfig(std::string default_section) : default_section_(std::move(default_section)) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;

 private:
  std::vector<CLI::ConfigItem> parse(std::istream& input) const;

  std::string default_section_;
};

}  // namespace mvtp::cli
