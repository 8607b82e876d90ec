#include "config_format.hpp"

#include <cctype>
#include <iterator>
#include <sstream>
#include <string>

#include <json.hpp>

namespace mvtp::cli {
namespace {

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

void flatten(const nlohmann::json& obj, std::vector<std::string>& parents,
             std::vector<CLI::ConfigItem>& out) {
  for (const auto& [key, value] : obj.items()) {
    if (value.is_object()) {
      parents.push_back(key);
      flatten(value, parents, out);
      parents.pop_back();
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    if (value.is_array()) {
      for (const auto& e : value) item.inputs.push_back(scalar_text(e));
    } else if (!value.is_null()) {
      item.inputs.push_back(scalar_text(value));
    }
    out.push_back(std::move(item));
  }
}

}  // namespace

std::vector<CLI::ConfigItem> JsonOrTomlConfig::parse(std::istream& input) const {
  const std::string text{std::istreambuf_iterator<char>(input), std::istreambuf_iterator<char>()};
  std::size_t first = 0;
  while (first < text.size() && std::isspace(static_cast<unsigned char>(text[first]))) ++first;
  if (first == text.size() || text[first] != '{') {
    std::istringstream in(text);
    return CLI::ConfigTOML::from_config(in);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CLI::ConversionError("config", std::string("invalid JSON config: ") + e.what());
  }
  std::vector<CLI::ConfigItem> items;
  std::vector<std::string> parents;
  flatten(j, parents, items);
  return items;
}

std::vector<CLI::ConfigItem> JsonOrTomlConfig::from_config(std::istream& input) const {
  std::vector<CLI::ConfigItem> items = parse(input);
  if (!default_section_.empty()) {
    for (auto& item : items) {
      if (item.parents.empty() && item.name != "++" && item.name != "--") item.parents.push_back(default_section_);
    }
  }
  return items;
}

}  // namespace mvtp::cli
