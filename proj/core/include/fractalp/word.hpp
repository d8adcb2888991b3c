#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fractalp {

using Letter = std::uint8_t;

// Finite word over the alphabet {0,...,N-1}.  Cells of the level-n partition
// are indexed both by Word and by the flat lexicographic index in [0, N^n);
// the flat form is what the hot loops use.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<Letter> letters) : letters_(std::move(letters)) {}

  static Word parse(std::string_view s, int alphabet) {
    std::vector<Letter> out;
    out.reserve(s.size());
    for (char c : s) {
      if (c < '0' || c >= '0' + alphabet)
        throw std::invalid_argument("word letter out of range: " + std::string(s));
      out.push_back(static_cast<Letter>(c - '0'));
    }
    return Word(std::move(out));
  }

  std::size_t size() const { return letters_.size(); }
  bool empty() const { return letters_.empty(); }
  Letter operator[](std::size_t i) const { return letters_[i]; }
  const std::vector<Letter>& letters() const { return letters_; }

  void push_back(Letter l) { letters_.push_back(l); }
  void pop_back() { letters_.pop_back(); }

  Word prefix(std::size_t k) const {
    return Word(std::vector<Letter>(letters_.begin(), letters_.begin() + k));
  }

  Word concat(const Word& other) const {
    std::vector<Letter> out = letters_;
    out.insert(out.end(), other.letters_.begin(), other.letters_.end());
    return Word(std::move(out));
  }

  std::string str() const {
    std::string s;
    s.reserve(letters_.size());
    for (Letter l : letters_) s.push_back(static_cast<char>('0' + l));
    return s;
  }

  bool operator==(const Word& o) const { return letters_ == o.letters_; }
  // lexicographic within equal lengths; shorter words first across lengths
  bool operator<(const Word& o) const {
    if (letters_.size() != o.letters_.size())
      return letters_.size() < o.letters_.size();
    return letters_ < o.letters_;
  }

 private:
  std::vector<Letter> letters_;
};

// flat index <-> word conversions for the level-n cell enumeration
inline std::uint64_t cell_count(int alphabet, int level) {
  std::uint64_t c = 1;
  for (int i = 0; i < level; ++i) c *= static_cast<std::uint64_t>(alphabet);
  return c;
}

inline std::uint64_t index_of_word(const Word& w, int alphabet) {
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    idx = idx * static_cast<std::uint64_t>(alphabet) + w[i];
  return idx;
}

inline Word word_of_index(std::uint64_t idx, int alphabet, int level) {
  std::vector<Letter> letters(static_cast<std::size_t>(level));
  for (int i = level - 1; i >= 0; --i) {
    letters[static_cast<std::size_t>(i)] =
        static_cast<Letter>(idx % static_cast<std::uint64_t>(alphabet));
    idx /= static_cast<std::uint64_t>(alphabet);
  }
  return Word(std::move(letters));
}

// first letter of the flat cell index at a given level
inline int first_letter(std::uint64_t idx, int alphabet, int level) {
  std::uint64_t div = cell_count(alphabet, level - 1);
  return static_cast<int>(idx / div);
}

}  // namespace fractalp
