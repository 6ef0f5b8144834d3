#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace wgt {

// "key = value" lines; blank lines and '#' comments ignored. Throws
// UsageError on lines without '=' or repeated keys.
std::map<std::string, std::string> parse_key_values(std::string_view text);

// Typed accessors over a key-value map. Each throws UsageError naming the
// key when the value does not parse.
std::uint64_t as_uint(const std::string& key, const std::string& value);
double as_double(const std::string& key, const std::string& value);
bool as_bool(const std::string& key, const std::string& value);

}  // namespace wgt
