#pragma once

#include <map>
#include <string>
#include <vector>

namespace nvcli {

// Line-oriented configuration:
//
//   # comment            (also ';')
//   [section]            a subcommand name
//   key = value          key is a long flag name of that subcommand, no dashes
//
// Values run to end of line with surrounding whitespace trimmed. Keys
// outside a section, unknown sections and unknown keys are errors.
struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

using ConfigFile = std::map<std::string, std::vector<ConfigEntry>>;

// Throws std::runtime_error with "path:line: message" on malformed input.
ConfigFile parse_config(const std::string& text, const std::string& path);

}  // namespace nvcli
