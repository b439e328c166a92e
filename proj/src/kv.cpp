#include "ecgnet/kv.hpp"

#include "ecgnet/error.hpp"
#include "text_util.hpp"

namespace ecgnet {

KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    const auto rows = detail::lines(text);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto row = detail::trim(rows[i]);
        if (row.empty() || row.front() == '#') continue;
        const auto eq = row.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected key=value", i + 1);
        const auto key = detail::trim(row.substr(0, eq));
        if (key.empty()) throw ParseError("empty key", i + 1);
        kv[std::string(key)] = std::string(detail::trim(row.substr(eq + 1)));
    }
    return kv;
}

std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + '=' + v + '\n';
    return out;
}

} // namespace ecgnet
