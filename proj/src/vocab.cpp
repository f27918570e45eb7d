#include "mdug/vocab.hpp"

#include <cctype>
#include <stdexcept>

namespace mdug {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  words_ = {"[cls]", "[sep]", "[pad]", "[unk]", "[bos]", "[eos]"};
  words_.insert(words_.end(), words.begin(), words.end());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!index_.emplace(words_[i], static_cast<int>(i)).second)
      throw std::invalid_argument("duplicate vocabulary word: " + words_[i]);
  }
}

int Vocabulary::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view word) const { return index_.contains(std::string(word)); }

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& t : tokenize(text)) ids.push_back(id(t));
  return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> toks;
  for (int i : ids)
    if (i >= kNumSpecial && i < size()) toks.push_back(words_[i]);
  return join_tokens(toks);
}

}  // namespace mdug
