#pragma once

#include <cstddef>
#include <string_view>

namespace tokenaudit {

// Number of Unicode scalar values in a UTF-8 string (continuation bytes are
// not counted; invalid sequences count one per lead byte).
inline std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

}  // namespace tokenaudit
