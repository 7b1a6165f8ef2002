#include "ccn/featurizer.hpp"

#include "ccn/errors.hpp"
#include "ccn/hashing.hpp"

namespace ccn {
namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
         (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char fold(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                : static_cast<char>(c);
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (unsigned char c : text) {
    if (is_word_byte(c)) {
      current += fold(c);
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

TokenSequence tokenize(std::string_view text, int vocab_size) {
  if (vocab_size < 2) throw InvalidArgument("vocab_size must be >= 2");
  TokenSequence seq;
  const auto words = split_words(text);
  if (words.empty()) {
    seq.ids.push_back(0);
    return seq;
  }
  seq.ids.reserve(words.size());
  const auto buckets = static_cast<std::uint64_t>(vocab_size - 1);
  for (const auto& w : words) {
    seq.ids.push_back(static_cast<int>(1 + hash64(w, kTokenHashSeed) % buckets));
  }
  return seq;
}

FeatureVector featurize(std::string_view text, int dim) {
  if (dim < 1) throw InvalidArgument("feature dim must be >= 1");
  FeatureVector v = FeatureVector::Zero(dim);
  const auto words = split_words(text);
  for (const auto& w : words) {
    const auto index = hash64(w, kTokenHashSeed) % static_cast<std::uint64_t>(dim);
    const double sign = (hash64(w, kSignHashSeed) & 1U) ? 1.0 : -1.0;
    v[static_cast<Eigen::Index>(index)] += sign;
  }
  if (words.size() > 1) v /= static_cast<double>(words.size());
  return v;
}

}  // namespace ccn
