#pragma once

#include <optional>
#include <string_view>

namespace blade {

/// Domain files and prompt templates compiled into the library, by file name.
std::optional<std::string_view> embedded_file(std::string_view name);

}  // namespace blade
