#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace wgt {

struct ParsedUrl {
  std::string scheme;  // lowercase, without "://"
  std::string host;    // lowercase, no port, no userinfo, no brackets
  std::string rest;    // everything after the authority ("/path?query#frag"), may be empty
};

// Accepts "<scheme>://<authority><rest>". Returns nullopt when there is no
// scheme separator or the host is empty (data:, blob:, relative references).
std::optional<ParsedUrl> parse_url(std::string_view url);

// True for dotted-quad IPv4 and any host containing ':' (IPv6).
bool is_ip_literal(std::string_view host);

std::string to_lower(std::string_view text);

}  // namespace wgt
