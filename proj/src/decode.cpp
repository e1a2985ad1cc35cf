// SPDX-License-Identifier: Apache-2.0
#include "pyabbrev/decode.hpp"

#include "pyabbrev/errors.hpp"

namespace pyab {

ConversionQuery parse_query(const Vocabulary& vocab, std::string_view text,
                            const ConversionOptions& options) {
  const std::u32string chars = decode_utf8(text);
  ConversionQuery query;
  query.options = options;

  size_t i = 0;
  while (i < chars.size()) {
    if (chars[i] == U'{') {
      const size_t close = chars.find(U'}', i + 1);
      if (close == std::u32string::npos)
        throw DataError("unterminated '{' in conversion text");
      if (close == i + 1)
        throw DataError("empty abbreviation span '{}'");
      Span span{query.tokens.size(), static_cast<int>(close - i - 1)};
      for (size_t j = i + 1; j < close; ++j) {
        const char32_t c = chars[j];
        if (c < U'a' || c > U'z')
          throw DataError("abbreviation letters must be in 'a'..'z', found '" +
                          encode_utf8(c) + "'");
        query.tokens.ids.push_back(
            letter_mask_id(vocab, static_cast<char>(c)));
      }
      query.spans.push_back(span);
      i = close + 1;
    } else if (chars[i] == U'}') {
      throw DataError("unmatched '}' in conversion text");
    } else {
      query.tokens.ids.push_back(vocab.char_id(chars[i]));
      ++i;
    }
  }
  if (query.spans.empty())
    throw DataError("no {abbreviation} span found in conversion text");
  return query;
}

}  // namespace pyab
