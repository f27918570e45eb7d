#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mdug {

/// Reserved token ids, fixed across every vocabulary.
enum SpecialToken : int { kCls = 0, kSep = 1, kPad = 2, kUnk = 3, kBos = 4, kEos = 5 };
inline constexpr int kNumSpecial = 6;

/// Lowercases and splits on ASCII whitespace.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);

class Vocabulary {
 public:
  /// Specials are prepended; `words` must not repeat.
  explicit Vocabulary(const std::vector<std::string>& words);

  int size() const { return static_cast<int>(words_.size()); }
  /// Unknown words map to kUnk.
  int id(std::string_view word) const;
  bool contains(std::string_view word) const;
  const std::string& word(int id) const { return words_.at(id); }

  std::vector<int> encode(std::string_view text) const;
  /// Drops specials.
  std::string decode(const std::vector<int>& ids) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace mdug
