#include "threadcast/featurize.h"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "threadcast/hash.h"

namespace threadcast {

using nlohmann::json;

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

char lower(unsigned char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c); }

}  // namespace

Lexicon load_lexicon(std::istream& in) {
  Lexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    for (const std::string& tok : tokenize(line)) lex.insert(tok);
  }
  return lex;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_token_byte(c)) {
      current.push_back(lower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

NodeFeatures featurize_hashed(std::string_view text, std::size_t d_text, const Lexicon& lexicon) {
  if (d_text == 0) throw std::invalid_argument("featurize_hashed: d_text must be positive");
  NodeFeatures out;
  out.embedding.assign(d_text, 0.0);
  const std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) return out;

  const double weight = 1.0 / std::sqrt(static_cast<double>(tokens.size()));
  std::size_t hits = 0;
  for (const std::string& tok : tokens) {
    out.embedding[xxhash64(tok, kFeatureHashSeed) % d_text] += weight;
    if (lexicon.count(tok)) ++hits;
  }
  out.hate_raw = static_cast<double>(hits) / static_cast<double>(tokens.size());
  return out;
}

FeatureTable FeatureTable::load(std::istream& in) {
  FeatureTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json obj = json::parse(line);
      NodeFeatures f;
      f.embedding = obj.at("embedding").get<std::vector<double>>();
      f.hate_raw = obj.at("hate_raw").get<double>();
      if (!(f.hate_raw >= 0.0 && f.hate_raw <= 1.0)) throw std::runtime_error("hate_raw outside [0, 1]");
      table.insert(obj.at("id").get<std::string>(), std::move(f));
    } catch (const std::exception& e) {
      throw std::runtime_error("feature file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

void FeatureTable::insert(std::string id, NodeFeatures features) {
  if (rows_.empty()) {
    dim_ = features.embedding.size();
  } else if (features.embedding.size() != dim_) {
    throw std::invalid_argument("feature table: id '" + id + "' has dimension " +
                                std::to_string(features.embedding.size()) + ", expected " + std::to_string(dim_));
  }
  rows_.insert_or_assign(std::move(id), std::move(features));
}

const NodeFeatures* FeatureTable::find(const std::string& id) const {
  auto it = rows_.find(id);
  return it == rows_.end() ? nullptr : &it->second;
}

NodeFeatures featurize_from_file(const std::string& id, const FeatureTable& table, std::size_t d_text) {
  const NodeFeatures* f = table.find(id);
  if (!f) throw std::out_of_range("feature table: no entry for id '" + id + "'");
  if (f->embedding.size() != d_text) {
    throw std::invalid_argument("feature table: id '" + id + "' has dimension " +
                                std::to_string(f->embedding.size()) + ", expected " + std::to_string(d_text));
  }
  return *f;
}

void write_feature_line(std::ostream& out, const std::string& id, const NodeFeatures& features) {
  out << json{{"id", id}, {"embedding", features.embedding}, {"hate_raw", features.hate_raw}}.dump() << '\n';
}

ScoreTransform parse_score_transform(std::string_view name) {
  if (name == "none") return ScoreTransform::kNone;
  if (name == "log1p_signed") return ScoreTransform::kLog1pSigned;
  throw std::invalid_argument("unknown score transform '" + std::string(name) + "'");
}

const char* score_transform_name(ScoreTransform t) {
  return t == ScoreTransform::kNone ? "none" : "log1p_signed";
}

std::vector<double> assemble_input(const NodeFeatures& features, std::int64_t score, ScoreTransform transform) {
  std::vector<double> x;
  x.reserve(features.embedding.size() + 1);
  x.assign(features.embedding.begin(), features.embedding.end());
  double s = static_cast<double>(score);
  if (transform == ScoreTransform::kLog1pSigned) s = std::copysign(std::log1p(std::fabs(s)), s);
  x.push_back(s);
  return x;
}

HashedFeatureProvider::HashedFeatureProvider(std::size_t d_text, Lexicon lexicon)
    : d_text_(d_text), lexicon_(std::move(lexicon)) {
  if (d_text_ == 0) throw std::invalid_argument("hashed features: d_text must be positive");
}

NodeFeatures HashedFeatureProvider::features(const CommentNode& node) const {
  return featurize_hashed(node.text, d_text_, lexicon_);
}

FileFeatureProvider::FileFeatureProvider(std::size_t d_text, FeatureTable table)
    : d_text_(d_text), table_(std::move(table)) {}

NodeFeatures FileFeatureProvider::features(const CommentNode& node) const {
  return featurize_from_file(node.id, table_, d_text_);
}

}  // namespace threadcast
