#pragma once

namespace ecgnet::detail {

// Generated at configure time from data/class_map.csv.
extern const char* const kEmbeddedClassMap;

} // namespace ecgnet::detail
