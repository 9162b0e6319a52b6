#pragma once

#include <filesystem>
#include <map>
#include <string>

namespace omra {

// `key=value` lines; blank lines and `#` comments are skipped.
using KeyValues = std::map<std::string, std::string>;

KeyValues read_key_values(const std::filesystem::path& path);
KeyValues parse_key_values(const std::string& text);

long kv_int(const KeyValues& kv, const std::string& key);
long kv_int(const KeyValues& kv, const std::string& key, long fallback);
double kv_double(const KeyValues& kv, const std::string& key, double fallback);

}  // namespace omra
