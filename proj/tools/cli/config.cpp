#include "config.hpp"

#include <sstream>
#include <stdexcept>

namespace nvcli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& path, std::size_t line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

ConfigFile parse_config(const std::string& text, const std::string& path) {
  ConfigFile out;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) bad(path, line, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      out[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) bad(path, line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) bad(path, line, "empty key");
    if (section.empty()) bad(path, line, "key '" + key + "' outside of a [section]");
    for (const auto& e : out[section])
      if (e.key == key) bad(path, line, "duplicate key '" + key + "'");
    out[section].push_back({key, value, line});
  }
  return out;
}

}  // namespace nvcli
