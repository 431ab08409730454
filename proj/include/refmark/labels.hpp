#pragma once

#include <cstdint>
#include <string_view>

namespace refmark {

enum class Label : std::uint8_t { road, marking, other };

std::string_view to_string(Label label);
// Throws SchemaError on anything other than road | marking | other.
Label parse_label(std::string_view token);

}  // namespace refmark
