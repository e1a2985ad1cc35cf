// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace pyab {

// Decodes UTF-8 into codepoints. Throws DataError on malformed input.
std::u32string decode_utf8(std::string_view text);

std::string encode_utf8(char32_t codepoint);
std::string encode_utf8(std::u32string_view text);

// CJK ideograph ranges (URO, extension A, compatibility, plane-2 extensions).
bool is_cjk(char32_t codepoint);

}  // namespace pyab
