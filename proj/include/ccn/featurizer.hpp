#pragma once

// Deterministic hashed text features. Stands in for a pretrained sentence
// encoder: offline, seed-stable, and cheap enough to train on from scratch.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ccn {

inline constexpr int kDefaultVocabSize = 8192;
inline constexpr int kDefaultFeatureDim = 128;
inline constexpr std::uint64_t kTokenHashSeed = 0x5eed'0001ULL;
inline constexpr std::uint64_t kSignHashSeed = 0x5eed'0002ULL;

using FeatureVector = Eigen::VectorXd;

struct TokenSequence {
  std::vector<int> ids;

  bool operator==(const TokenSequence&) const = default;
};

// Lowercased alphanumeric runs. Bytes >= 0x80 count as word characters so
// UTF-8 words stay whole.
std::vector<std::string> split_words(std::string_view text);

// Id 0 is reserved for "no tokens"; real tokens hash into [1, vocab_size).
TokenSequence tokenize(std::string_view text, int vocab_size = kDefaultVocabSize);

// Hashed bag of tokens: each token adds +-1 at hash mod dim, and the sum is
// divided by max(1, token count).
FeatureVector featurize(std::string_view text, int dim = kDefaultFeatureDim);

}  // namespace ccn
