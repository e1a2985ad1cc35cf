// SPDX-License-Identifier: Apache-2.0
#include "pyabbrev/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "pyabbrev/errors.hpp"
#include "pyabbrev/utf8.hpp"

namespace pyab {

namespace {

std::vector<std::string> special_tokens() {
  std::vector<std::string> out = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
  for (char c = 'A'; c <= 'Z'; ++c)
    out.push_back(std::string("[LETTER_") + c + "]");
  return out;
}

}  // namespace

Vocabulary::Vocabulary() {
  for (auto& tok : special_tokens()) {
    token_to_id_.emplace(tok, static_cast<int>(id_to_token_.size()));
    id_to_token_.push_back(tok);
  }
}

int Vocabulary::id_of(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? -1 : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size())
    throw std::invalid_argument("token id " + std::to_string(id) +
                                " out of range");
  return id_to_token_[id];
}

int Vocabulary::char_id(char32_t character) const {
  auto it = char_to_id_.find(character);
  return it == char_to_id_.end() ? kUnk : it->second;
}

void Vocabulary::add_character(char32_t character) {
  const std::string tok = encode_utf8(character);
  if (token_to_id_.count(tok))
    throw DataError("duplicate vocabulary token '" + tok + "'");
  const int id = size();
  token_to_id_.emplace(tok, id);
  id_to_token_.push_back(tok);
  char_to_id_.emplace(character, id);
}

char Vocabulary::letter_of(int id) const {
  if (!is_letter_mask(id))
    throw std::invalid_argument("id " + std::to_string(id) +
                                " is not a letter-mask token");
  return static_cast<char>('a' + (id - kLetterA));
}

char32_t Vocabulary::character_of(int id) const {
  const std::string& tok = token_of(id);
  if (is_special(id))
    throw std::invalid_argument("token " + tok + " is not a character");
  return decode_utf8(tok)[0];
}

Vocabulary build_vocabulary(const std::vector<SegmentedSentence>& corpus,
                            int min_count) {
  if (corpus.empty())
    throw std::invalid_argument("build_vocabulary: empty corpus");

  std::map<char32_t, long long> counts;  // ordered: codepoint tie-break
  for (const auto& sentence : corpus)
    for (const auto& word : sentence.words)
      for (char32_t cp : word) ++counts[cp];

  std::vector<std::pair<char32_t, long long>> ranked(counts.begin(),
                                                     counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary vocab;
  for (const auto& [cp, count] : ranked)
    if (count >= min_count) vocab.add_character(cp);
  return vocab;
}

TokenSequence encode(const Vocabulary& vocab, std::u32string_view text) {
  TokenSequence seq;
  seq.ids.reserve(text.size());
  for (char32_t cp : text) seq.ids.push_back(vocab.char_id(cp));
  return seq;
}

std::string decode(const Vocabulary& vocab, const TokenSequence& tokens) {
  std::string out;
  for (int id : tokens.ids) out += vocab.token_of(id);
  return out;
}

int letter_mask_id(const Vocabulary& vocab, char letter) {
  if (letter < 'a' || letter > 'z')
    throw std::invalid_argument(std::string("letter_mask_id: '") + letter +
                                "' is not in 'a'..'z'");
  (void)vocab;
  return Vocabulary::kLetterA + (letter - 'a');
}

void save_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary: " + path.string());
  for (int id = 0; id < vocab.size(); ++id) out << vocab.token_of(id) << '\n';
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary: " + path.string());

  const auto specials = special_tokens();
  Vocabulary vocab;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no < specials.size()) {
      if (line != specials[line_no])
        throw DataError(path.string() + ":" + std::to_string(line_no + 1) +
                        ": expected special token " + specials[line_no] +
                        ", found '" + line + "'");
    } else {
      const std::u32string cp = decode_utf8(line);
      if (cp.size() != 1)
        throw DataError(path.string() + ":" + std::to_string(line_no + 1) +
                        ": token must be a single character");
      vocab.add_character(cp[0]);
    }
    ++line_no;
  }
  if (line_no < specials.size())
    throw DataError(path.string() + ": vocabulary is missing special tokens");
  return vocab;
}

}  // namespace pyab
