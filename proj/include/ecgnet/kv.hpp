#pragma once

#include <map>
#include <string>
#include <string_view>

namespace ecgnet {

/// Flat `key=value` text, one pair per line; '#' starts a comment line.
/// Keys are kept sorted so serialization is deterministic.
using KeyValues = std::map<std::string, std::string, std::less<>>;

KeyValues parse_key_values(std::string_view text);
std::string format_key_values(const KeyValues& kv);

} // namespace ecgnet
