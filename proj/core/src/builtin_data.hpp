#pragma once

#include <span>
#include <string_view>

namespace chemlambda::detail {

struct BuiltinFile {
  std::string_view name;
  std::string_view text;
};

/// Chemistry definitions and kind translations compiled in from chemistries/.
std::span<const BuiltinFile> builtin_files();

}  // namespace chemlambda::detail
