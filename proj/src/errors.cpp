// SPDX-License-Identifier: Apache-2.0
#include "pyabbrev/errors.hpp"

#include "pyabbrev/utf8.hpp"

namespace pyab {

namespace {
std::string codepoint_label(char32_t cp) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "U+%04X", static_cast<unsigned>(cp));
  return "'" + encode_utf8(cp) + "' (" + buf + ")";
}
}  // namespace

MissingReadingError::MissingReadingError(char32_t codepoint)
    : DataError("no pinyin reading for character " + codepoint_label(codepoint)),
      codepoint_(codepoint) {}

NoCandidateError::NoCandidateError(int span_index, int position)
    : DataError("no feasible candidate for span " + std::to_string(span_index) +
                " at position " + std::to_string(position)),
      span_index_(span_index),
      position_(position) {}

ShortfallError::ShortfallError(int requested, int achievable)
    : DataError("test set shortfall: requested " + std::to_string(requested) +
                " records but only " + std::to_string(achievable) +
                " are achievable under the frequency cap"),
      requested_(requested),
      achievable_(achievable) {}

}  // namespace pyab
