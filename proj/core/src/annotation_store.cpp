#include "hgcn/annotation_store.hpp"

#include <algorithm>
#include <chrono>
#include <cctype>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace hgcn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string now_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
  return out.str();
}

json tags_json(const std::vector<Tag>& tags) {
  json a = json::array();
  for (Tag t : tags) a.push_back(std::string(to_string(t)));
  return a;
}

std::vector<Tag> tags_from(const json& j) {
  std::vector<Tag> out;
  for (const auto& x : j) out.push_back(parse_tag(x.get<std::string>()));
  return out;
}

// Ids become file names: [A-Za-z0-9_-] pass through, everything else is
// written as %XX.
std::string file_stem(const std::string& id) {
  std::ostringstream out;
  for (unsigned char c : id) {
    if (std::isalnum(c) || c == '-' || c == '_') out << c;
    else out << '%' << std::uppercase << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
  }
  return out.str();
}

}  // namespace

VersionConflict::VersionConflict(std::uint64_t expected, std::uint64_t current)
    : std::runtime_error("version conflict: expected " + std::to_string(expected) + ", stored " +
                         std::to_string(current)),
      current_(current) {}

std::string scope_violation(const AnnotatedSentence& sentence, std::size_t k, const std::vector<Tag>& bio) {
  if (bio.size() != sentence.tokens.size())
    return "length " + std::to_string(bio.size()) + " does not match " + std::to_string(sentence.tokens.size()) +
           " tokens";
  if (auto rule = bio_violation(bio); !rule.empty()) return rule;
  const auto chunks = spans_of_bio(bio);
  if (chunks.empty()) return "scope is empty";
  if (chunks.size() > 1) return "scope must be one contiguous chunk";
  if (!chunks.front().contains(sentence.targets.at(k).span)) return "scope does not cover the target";
  return {};
}

AnnotationStore::AnnotationStore(fs::path dir, Lexicon lexicon, PreAnnotateOptions options)
    : dir_(std::move(dir)), lexicon_(std::move(lexicon)), options_(std::move(options)) {
  fs::create_directories(dir_);
}

fs::path AnnotationStore::path_of(const std::string& id) const { return dir_ / (file_stem(id) + ".json"); }

std::mutex& AnnotationStore::lock_for(const std::string& id) const {
  std::lock_guard<std::mutex> guard(locks_guard_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

StoredDocument AnnotationStore::read(const fs::path& path) const {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DocumentNotFound("no document at " + path.string());
  json j = json::parse(in);
  StoredDocument doc;
  doc.order = j.at("order").get<std::size_t>();
  doc.sentence = sentence_from_json(j.at("sentence").dump());
  for (const auto& r : j.at("records")) {
    AnnotationRecord rec;
    rec.bio = tags_from(r.at("bio"));
    rec.provenance = parse_provenance(r.at("provenance").get<std::string>());
    rec.version = r.at("version").get<std::uint64_t>();
    for (const auto& h : r.at("history"))
      rec.history.push_back({h.at("time").get<std::string>(), tags_from(h.at("bio")),
                             parse_provenance(h.at("provenance").get<std::string>())});
    doc.records.push_back(std::move(rec));
  }
  return doc;
}

void AnnotationStore::write(const StoredDocument& doc) const {
  json j;
  j["order"] = doc.order;
  j["sentence"] = json::parse(sentence_to_json(doc.sentence));
  json records = json::array();
  for (const auto& r : doc.records) {
    json history = json::array();
    for (const auto& h : r.history)
      history.push_back({{"time", h.time}, {"bio", tags_json(h.bio)}, {"provenance", std::string(to_string(h.provenance))}});
    records.push_back({{"bio", tags_json(r.bio)},
                       {"provenance", std::string(to_string(r.provenance))},
                       {"version", r.version},
                       {"history", std::move(history)}});
  }
  j["records"] = std::move(records);

  const fs::path target = path_of(doc.sentence.id);
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + temp.string());
    out << j.dump(1) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + temp.string());
  }
  if (fault_hook_) fault_hook_(temp);
  fs::rename(temp, target);
}

std::size_t AnnotationStore::import(const Corpus& corpus) {
  std::size_t next = 0;
  for (const auto& d : load_all()) next = std::max(next, d.order + 1);
  std::size_t written = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    StoredDocument doc;
    doc.sentence = corpus[i];
    if (doc.sentence.id.empty()) doc.sentence.id = "doc-" + std::to_string(i);
    std::lock_guard<std::mutex> lock(lock_for(doc.sentence.id));
    if (fs::exists(path_of(doc.sentence.id))) continue;
    doc.order = next++;
    for (std::size_t k = 0; k < doc.sentence.targets.size(); ++k) {
      auto& t = doc.sentence.targets[k];
      AnnotationRecord rec;
      if (t.scope_bio) {
        rec.bio = *t.scope_bio;
        rec.provenance = t.provenance ? parse_provenance(*t.provenance) : Provenance::kHuman;
      } else {
        auto p = pre_annotate_target(doc.sentence, k, lexicon_, options_);
        rec.bio = p.bio;
        rec.provenance = p.provenance;
        if (t.opinion_spans.empty()) t.opinion_spans = p.opinions;
      }
      t.scope_bio = rec.bio;
      t.provenance = std::string(to_string(rec.provenance));
      doc.records.push_back(std::move(rec));
    }
    write(doc);
    ++written;
  }
  return written;
}

std::vector<StoredDocument> AnnotationStore::load_all() const {
  std::vector<StoredDocument> docs;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
    docs.push_back(read(entry.path()));
  }
  std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.order < b.order; });
  return docs;
}

std::vector<DocumentSummary> AnnotationStore::list() const {
  std::vector<DocumentSummary> out;
  for (const auto& d : load_all()) {
    DocumentSummary s{d.sentence.id, d.records.size(), 0};
    for (const auto& r : d.records) s.human += r.provenance == Provenance::kHuman;
    out.push_back(std::move(s));
  }
  return out;
}

StoredDocument AnnotationStore::get(const std::string& id) const {
  const fs::path p = path_of(id);
  if (!fs::exists(p)) throw DocumentNotFound("unknown document '" + id + "'");
  return read(p);
}

AnnotationRecord AnnotationStore::save_scope(const std::string& id, std::size_t k, const std::vector<Tag>& bio,
                                             std::optional<std::uint64_t> expected_version) {
  std::lock_guard<std::mutex> lock(lock_for(id));
  StoredDocument doc = get(id);
  if (k >= doc.records.size())
    throw DocumentNotFound("document '" + id + "' has no target " + std::to_string(k));
  if (auto rule = scope_violation(doc.sentence, k, bio); !rule.empty()) throw ScopeRejected(rule);
  AnnotationRecord& rec = doc.records[k];
  if (expected_version && *expected_version != rec.version) throw VersionConflict(*expected_version, rec.version);
  rec.history.push_back({now_utc(), rec.bio, rec.provenance});
  rec.bio = bio;
  rec.provenance = Provenance::kHuman;
  rec.version++;
  doc.sentence.targets[k].scope_bio = bio;
  doc.sentence.targets[k].provenance = std::string(to_string(Provenance::kHuman));
  write(doc);
  return rec;
}

PreAnnotation AnnotationStore::propose(const std::string& id, std::size_t k) const {
  StoredDocument doc = get(id);
  if (k >= doc.sentence.targets.size())
    throw DocumentNotFound("document '" + id + "' has no target " + std::to_string(k));
  return pre_annotate_target(doc.sentence, k, lexicon_, options_);
}

Corpus AnnotationStore::export_corpus() const {
  Corpus out;
  for (auto& d : load_all()) {
    for (std::size_t k = 0; k < d.records.size(); ++k) {
      d.sentence.targets[k].scope_bio = d.records[k].bio;
      d.sentence.targets[k].provenance = std::string(to_string(d.records[k].provenance));
    }
    out.push_back(std::move(d.sentence));
  }
  return out;
}

AnnotationStats AnnotationStore::stats() const { return annotation_stats(export_corpus()); }

}  // namespace hgcn
