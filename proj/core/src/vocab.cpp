#include "hgcn/vocab.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <stdexcept>

namespace hgcn {

Vocabulary::Vocabulary(std::string unknown_token) : unknown_(std::move(unknown_token)) { add(*unknown_); }

Vocabulary Vocabulary::from_list(std::vector<std::string> entries, std::optional<std::string> unknown_token) {
  Vocabulary v;
  v.unknown_ = std::move(unknown_token);
  for (auto& e : entries) v.add(e);
  if (v.unknown_ && (v.entries_.empty() || v.entries_[0] != *v.unknown_)) {
    throw std::invalid_argument("vocabulary: unknown token must be the first entry");
  }
  return v;
}

int Vocabulary::add(const std::string& entry) {
  auto [it, inserted] = index_.emplace(entry, static_cast<int>(entries_.size()));
  if (inserted) entries_.push_back(entry);
  return it->second;
}

std::optional<int> Vocabulary::find(const std::string& entry) const {
  auto it = index_.find(entry);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id(const std::string& entry) const {
  if (auto found = find(entry)) return *found;
  if (unknown_) return 0;
  throw std::out_of_range("vocabulary: unknown entry '" + entry + "'");
}

Vocabulary build_vocab(const Corpus& corpus) {
  Vocabulary v(kUnknownWord);
  for (const auto& s : corpus) {
    for (const auto& t : s.tokens) v.add(t);
  }
  return v;
}

Tensor read_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t dim, UnknownInit unknown,
                       EmbeddingReport* report) {
  Tensor table(Shape{vocab.size(), dim});
  std::vector<std::uint8_t> filled(vocab.size(), 0);
  std::vector<double> mean(dim, 0.0);
  EmbeddingReport rep;
  rep.dim = dim;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    const char* word_end = p;
    while (word_end < end && *word_end != ' ' && *word_end != '\t') ++word_end;
    std::string word(p, word_end);
    p = word_end;
    std::vector<double> vec;
    vec.reserve(dim);
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p >= end) break;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        throw std::runtime_error("embeddings line " + std::to_string(line_no) + ": malformed number");
      }
      vec.push_back(v);
      p = next;
    }
    if (vec.size() != dim) {
      throw std::runtime_error("embeddings line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                               " values, found " + std::to_string(vec.size()));
    }
    ++rep.file_rows;
    auto id = vocab.find(word);
    if (!id || filled[*id]) continue;
    filled[*id] = 1;
    ++rep.matched;
    for (std::size_t c = 0; c < dim; ++c) {
      table.at(*id, c) = vec[c];
      mean[c] += vec[c];
    }
  }
  if (rep.matched > 0) {
    for (double& m : mean) m /= static_cast<double>(rep.matched);
  }
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    if (filled[id]) continue;
    if (!(vocab.unknown_token() && id == 0)) rep.oov.push_back(vocab.entry(static_cast<int>(id)));
    for (std::size_t c = 0; c < dim; ++c) table.at(id, c) = unknown == UnknownInit::kMean ? mean[c] : 0.0;
  }
  if (report) *report = std::move(rep);
  return table;
}

Tensor load_embeddings(const std::string& path, const Vocabulary& vocab, std::size_t dim, UnknownInit unknown,
                       EmbeddingReport* report) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embeddings file '" + path + "'");
  return read_embeddings(in, vocab, dim, unknown, report);
}

void write_embeddings(std::ostream& out, const Vocabulary& vocab, const Tensor& table, bool skip_unknown) {
  const auto precision = out.precision();
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    if (skip_unknown && vocab.unknown_token() && id == 0) continue;
    out << vocab.entry(static_cast<int>(id));
    for (std::size_t c = 0; c < table.cols(); ++c) out << ' ' << table.at(id, c);
    out << '\n';
  }
  out.precision(precision);
}

}  // namespace hgcn
