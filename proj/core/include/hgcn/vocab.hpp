#pragma once

#include <istream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hgcn/corpus.hpp"
#include "hgcn/tensor.hpp"

namespace hgcn {

/// String <-> id map in first-appearance order. When constructed with an
/// unknown token, that token takes id 0 and absorbs every lookup miss;
/// otherwise a miss throws.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::string unknown_token);
  static Vocabulary from_list(std::vector<std::string> entries, std::optional<std::string> unknown_token);

  int add(const std::string& entry);
  int id(const std::string& entry) const;
  std::optional<int> find(const std::string& entry) const;
  bool contains(const std::string& entry) const { return index_.count(entry) > 0; }
  const std::string& entry(int id) const { return entries_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::string>& entries() const { return entries_; }
  const std::optional<std::string>& unknown_token() const { return unknown_; }

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int> index_;
  std::optional<std::string> unknown_;
};

inline constexpr const char* kUnknownWord = "<unk>";

Vocabulary build_vocab(const Corpus& corpus);

enum class UnknownInit { kMean, kZero };

struct EmbeddingReport {
  std::size_t dim = 0;
  std::size_t file_rows = 0;
  std::size_t matched = 0;
  std::vector<std::string> oov;  // vocabulary entries without a vector
};

/// Reads "word v1 ... vd" lines into a |V| x dim table aligned with `vocab`.
/// Words outside the vocabulary are skipped; vocabulary entries without a
/// vector (including the unknown token) get the mean of the matched vectors,
/// or zeros.
Tensor read_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t dim, UnknownInit unknown,
                       EmbeddingReport* report = nullptr);
Tensor load_embeddings(const std::string& path, const Vocabulary& vocab, std::size_t dim, UnknownInit unknown,
                       EmbeddingReport* report = nullptr);

void write_embeddings(std::ostream& out, const Vocabulary& vocab, const Tensor& table, bool skip_unknown = true);

}  // namespace hgcn
