#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "threadcast/discussion_graph.h"

namespace threadcast {

struct NodeFeatures {
  std::vector<double> embedding;
  double hate_raw = 0.0;
};

using Lexicon = std::unordered_set<std::string>;

// One token per line; blank lines are skipped, tokens are lowercased.
Lexicon load_lexicon(std::istream& in);

// ASCII-lowercases and splits on every byte that is not [0-9A-Za-z]. Bytes
// >= 0x80 are kept inside tokens so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

inline constexpr std::uint64_t kFeatureHashSeed = 0x7468726561646361ULL;

// Feature hashing: each token adds 1/sqrt(#tokens) to bucket
// xxhash64(token) mod d_text; hate_raw is the lexicon hit rate.
NodeFeatures featurize_hashed(std::string_view text, std::size_t d_text, const Lexicon& lexicon);

// Precomputed embeddings, one JSON object per line:
//   {"id": str, "embedding": [num, ...], "hate_raw": num}
class FeatureTable {
 public:
  static FeatureTable load(std::istream& in);

  void insert(std::string id, NodeFeatures features);
  const NodeFeatures* find(const std::string& id) const;
  std::size_t size() const { return rows_.size(); }
  // Embedding width shared by every row; 0 while empty.
  std::size_t dim() const { return dim_; }

 private:
  std::unordered_map<std::string, NodeFeatures> rows_;
  std::size_t dim_ = 0;
};

NodeFeatures featurize_from_file(const std::string& id, const FeatureTable& table, std::size_t d_text);

void write_feature_line(std::ostream& out, const std::string& id, const NodeFeatures& features);

enum class ScoreTransform { kNone, kLog1pSigned };
ScoreTransform parse_score_transform(std::string_view name);
const char* score_transform_name(ScoreTransform t);

// Embedding followed by the (optionally transformed) score: length d_text + 1.
std::vector<double> assemble_input(const NodeFeatures& features, std::int64_t score,
                                   ScoreTransform transform = ScoreTransform::kNone);

class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual NodeFeatures features(const CommentNode& node) const = 0;
  virtual std::size_t d_text() const = 0;
};

class HashedFeatureProvider final : public FeatureProvider {
 public:
  HashedFeatureProvider(std::size_t d_text, Lexicon lexicon);
  NodeFeatures features(const CommentNode& node) const override;
  std::size_t d_text() const override { return d_text_; }

 private:
  std::size_t d_text_;
  Lexicon lexicon_;
};

class FileFeatureProvider final : public FeatureProvider {
 public:
  FileFeatureProvider(std::size_t d_text, FeatureTable table);
  NodeFeatures features(const CommentNode& node) const override;
  std::size_t d_text() const override { return d_text_; }

 private:
  std::size_t d_text_;
  FeatureTable table_;
};

}  // namespace threadcast
