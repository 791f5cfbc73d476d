#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgcn/corpus.hpp"
#include "hgcn/scope.hpp"

namespace hgcn {

struct HistoryEntry {
  std::string time;  // UTC, ISO 8601
  std::vector<Tag> bio;
  Provenance provenance = Provenance::kAuto;
};

struct AnnotationRecord {
  std::vector<Tag> bio;
  Provenance provenance = Provenance::kAuto;
  std::uint64_t version = 1;
  std::vector<HistoryEntry> history;  // oldest first
};

struct StoredDocument {
  std::size_t order = 0;
  AnnotatedSentence sentence;
  std::vector<AnnotationRecord> records;  // one per target
};

struct DocumentSummary {
  std::string id;
  std::size_t targets = 0;
  std::size_t human = 0;
  bool complete() const { return human == targets; }
};

class DocumentNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ScopeRejected : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class VersionConflict : public std::runtime_error {
 public:
  VersionConflict(std::uint64_t expected, std::uint64_t current);
  std::uint64_t current() const { return current_; }

 private:
  std::uint64_t current_;
};

/// Why `bio` cannot be the scope of target `k`, or an empty string. A scope
/// is one contiguous chunk covering the target.
std::string scope_violation(const AnnotatedSentence& sentence, std::size_t k, const std::vector<Tag>& bio);

/// One JSON file per document under a directory. Every read goes to disk; each
/// write replaces the file through a temp file and a rename, serialized per
/// document.
class AnnotationStore {
 public:
  explicit AnnotationStore(std::filesystem::path dir, Lexicon lexicon = {}, PreAnnotateOptions options = {});

  /// Adds sentences not yet stored. Targets without a scope are pre-annotated;
  /// targets that already carry one keep it, marked human unless the input
  /// names a provenance. Returns the number of documents written.
  std::size_t import(const Corpus& corpus);

  std::vector<DocumentSummary> list() const;
  StoredDocument get(const std::string& id) const;

  /// Replaces the scope of target k and marks it human. With
  /// `expected_version`, a mismatch with the stored version throws
  /// VersionConflict.
  AnnotationRecord save_scope(const std::string& id, std::size_t k, const std::vector<Tag>& bio,
                              std::optional<std::uint64_t> expected_version = std::nullopt);

  /// Fresh rule-based proposal for target k; nothing is written.
  PreAnnotation propose(const std::string& id, std::size_t k) const;

  /// Stored sentences in import order, scope_bio and provenance filled.
  Corpus export_corpus() const;
  AnnotationStats stats() const;

  /// Test hook run after the temp file is written and before the rename.
  void set_fault_hook(std::function<void(const std::filesystem::path&)> hook) { fault_hook_ = std::move(hook); }

  const std::filesystem::path& directory() const { return dir_; }
  std::filesystem::path path_of(const std::string& id) const;

 private:
  std::vector<StoredDocument> load_all() const;
  StoredDocument read(const std::filesystem::path& path) const;
  void write(const StoredDocument& doc) const;
  std::mutex& lock_for(const std::string& id) const;

  std::filesystem::path dir_;
  Lexicon lexicon_;
  PreAnnotateOptions options_;
  std::function<void(const std::filesystem::path&)> fault_hook_;
  mutable std::mutex locks_guard_;
  mutable std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

}  // namespace hgcn
