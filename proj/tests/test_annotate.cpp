#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "hgcn/annotate_server.hpp"
#include "hgcn/annotation_store.hpp"
#include "hgcn/toy_corpus.hpp"

#include "httplib.h"
#include "json.hpp"

using namespace hgcn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<Tag> kFoodScope = {Tag::kB, Tag::kI, Tag::kO, Tag::kO, Tag::kO, Tag::kO, Tag::kO, Tag::kO};
const std::vector<Tag> kServiceScope = {Tag::kO, Tag::kO, Tag::kO, Tag::kB, Tag::kI, Tag::kI, Tag::kI, Tag::kO};

Lexicon lexicon() { return Lexicon(toy_lexicon()); }

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("hgcn-store-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json bio_json(const std::vector<Tag>& bio) {
  json out = json::array();
  for (Tag t : bio) out.push_back(std::string(to_string(t)));
  return out;
}

}  // namespace

TEST(ScopeViolation, Rules) {
  const auto s = example_sentence();
  EXPECT_EQ(scope_violation(s, 0, kFoodScope), "");
  EXPECT_EQ(scope_violation(s, 1, kServiceScope), "");
  EXPECT_NE(scope_violation(s, 0, {Tag::kB}), "");
  auto orphan = kFoodScope;
  orphan[0] = Tag::kO;
  EXPECT_NE(scope_violation(s, 0, orphan).find("I without preceding B"), std::string::npos);
  EXPECT_EQ(scope_violation(s, 0, std::vector<Tag>(8, Tag::kO)), "scope is empty");
  auto two = kFoodScope;
  two[5] = Tag::kB;
  EXPECT_EQ(scope_violation(s, 0, two), "scope must be one contiguous chunk");
  EXPECT_EQ(scope_violation(s, 1, kFoodScope), "scope does not cover the target");
}

TEST(AnnotationStore, ImportPreAnnotatesAndPersists) {
  TempDir dir;
  AnnotationStore store(dir.path(), lexicon());
  EXPECT_EQ(store.import({example_sentence()}), 1u);
  EXPECT_EQ(store.import({example_sentence()}), 0u);
  const auto doc = store.get("great-food");
  ASSERT_EQ(doc.records.size(), 2u);
  EXPECT_EQ(doc.records[0].bio, kFoodScope);
  EXPECT_EQ(doc.records[1].bio, kServiceScope);
  EXPECT_EQ(doc.records[0].provenance, Provenance::kAuto);
  EXPECT_EQ(doc.records[0].version, 1u);

  // A second store over the same directory sees the same state.
  AnnotationStore reopened(dir.path(), lexicon());
  EXPECT_EQ(reopened.get("great-food").records[1].bio, kServiceScope);
  EXPECT_THROW(store.get("nope"), DocumentNotFound);
}

TEST(AnnotationStore, SaveTracksVersionsAndHistory) {
  TempDir dir;
  AnnotationStore store(dir.path(), lexicon());
  store.import({example_sentence()});
  std::vector<Tag> wider(8, Tag::kI);
  wider[0] = Tag::kB;
  const auto rec = store.save_scope("great-food", 0, wider, 1u);
  EXPECT_EQ(rec.version, 2u);
  EXPECT_EQ(rec.provenance, Provenance::kHuman);
  ASSERT_EQ(rec.history.size(), 1u);
  EXPECT_EQ(rec.history[0].bio, kFoodScope);
  EXPECT_EQ(rec.history[0].provenance, Provenance::kAuto);
  EXPECT_THROW(store.save_scope("great-food", 0, kFoodScope, 1u), VersionConflict);
  EXPECT_THROW(store.save_scope("great-food", 0, {Tag::kB}), ScopeRejected);
  EXPECT_EQ(store.get("great-food").records[0].bio, wider);

  const auto stats = store.stats();
  EXPECT_EQ(stats.total, 2u);
  EXPECT_EQ(stats.human, 1u);
  EXPECT_EQ(stats.automatic, 1u);
  EXPECT_EQ(stats.adjustment_ratio(), 0.5);
}

TEST(AnnotationStore, FailedWriteLeavesPreviousFileIntact) {
  TempDir dir;
  AnnotationStore store(dir.path(), lexicon());
  store.import({example_sentence()});
  const auto path = store.path_of("great-food");
  const std::string before = read_file(path);
  store.set_fault_hook([](const fs::path&) { throw std::runtime_error("simulated crash"); });
  EXPECT_THROW(store.save_scope("great-food", 1, kServiceScope, 1u),
               std::runtime_error);
  EXPECT_EQ(read_file(path), before);
  store.set_fault_hook(nullptr);
  EXPECT_EQ(store.get("great-food").records[1].version, 1u);
  // A leftover temp file from the interrupted write is not a document.
  EXPECT_EQ(store.list().size(), 1u);
  EXPECT_EQ(store.save_scope("great-food", 1, kServiceScope, 1u).version, 2u);
}

TEST(AnnotationStore, ExportReloadsAsValidDataset) {
  TempDir dir;
  AnnotationStore store(dir.path(), lexicon());
  ToyOptions o;
  o.size = 12;
  o.gold_scopes = false;
  Corpus corpus = make_toy_corpus(o);
  corpus.push_back(example_sentence());
  EXPECT_EQ(store.import(corpus), corpus.size());
  store.save_scope("great-food", 1, kServiceScope);
  const Corpus exported = store.export_corpus();
  ASSERT_EQ(exported.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) EXPECT_EQ(exported[i].id, corpus[i].id);
  const Corpus reloaded = parse_dataset(serialize_dataset(exported));
  for (std::size_t i = 0; i < reloaded.size(); ++i) {
    EXPECT_NO_THROW(validate_sentence(reloaded[i], i));
    for (std::size_t k = 0; k < reloaded[i].targets.size(); ++k) {
      EXPECT_TRUE(reloaded[i].targets[k].scope_bio.has_value());
      EXPECT_EQ(scope_violation(reloaded[i], k, *reloaded[i].targets[k].scope_bio), "");
    }
  }
  EXPECT_EQ(*reloaded.back().targets[1].provenance, "human");
}

TEST(AnnotationStore, ConcurrentSavesKeepEveryVersion) {
  TempDir dir;
  AnnotationStore store(dir.path(), lexicon());
  store.import({example_sentence()});
  std::atomic<int> conflicts{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&] {
      for (int i = 0; i < 5; ++i) store.save_scope("great-food", 0, kFoodScope);
      try {
        store.save_scope("great-food", 0, kFoodScope, 1u);
      } catch (const VersionConflict&) {
        ++conflicts;
      }
    });
  }
  for (auto& t : workers) t.join();
  const auto rec = store.get("great-food").records[0];
  EXPECT_EQ(rec.version, 21u);
  EXPECT_EQ(rec.history.size(), 20u);
  EXPECT_EQ(conflicts.load(), 4);
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    store_ = std::make_unique<AnnotationStore>(dir_.path(), lexicon());
    store_->import({example_sentence()});
    server_ = std::make_unique<AnnotateServer>(*store_, ServerOptions{"127.0.0.1", 0, std::nullopt});
    port_ = server_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override { server_->stop(); }

  httplib::Result post_scope(const std::string& id, int k, const std::vector<Tag>& bio,
                             std::optional<std::string> version = std::nullopt) {
    httplib::Headers headers;
    if (version) headers.emplace("If-Match", *version);
    return client_->Post("/api/docs/" + id + "/targets/" + std::to_string(k) + "/scope", headers,
                         json{{"bio", bio_json(bio)}}.dump(), "application/json");
  }

  TempDir dir_;
  std::unique_ptr<AnnotationStore> store_;
  std::unique_ptr<AnnotateServer> server_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

TEST_F(ServerTest, ListsAndFetchesDocuments) {
  auto res = client_->Get("/api/docs");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto list = json::parse(res->body);
  ASSERT_EQ(list.size(), 1u);
  EXPECT_EQ(list[0]["id"], "great-food");
  EXPECT_EQ(list[0]["complete"], false);

  res = client_->Get("/api/docs/great-food");
  ASSERT_TRUE(res);
  const auto doc = json::parse(res->body);
  EXPECT_EQ(doc["tokens"].size(), 8u);
  EXPECT_EQ(doc["targets"][0]["term"], "food");
  EXPECT_EQ(doc["targets"][0]["span"], json::array({1, 1}));
  EXPECT_EQ(doc["targets"][0]["record"]["bio"], bio_json(kFoodScope));
  EXPECT_EQ(doc["targets"][1]["record"]["bio"], bio_json(kServiceScope));
  EXPECT_EQ(doc["targets"][1]["polarity"], "negative");
}

TEST_F(ServerTest, PreAnnotateProposesScope) {
  auto res = client_->Post("/api/docs/great-food/targets/0/pre-annotate");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto body = json::parse(res->body);
  EXPECT_EQ(body["bio"], bio_json(kFoodScope));
  EXPECT_EQ(body["provenance"], "auto");
  EXPECT_EQ(body["opinion_spans"], json::array({json::array({0, 0})}));
}

TEST_F(ServerTest, SaveThenGetRoundTrips) {
  std::vector<Tag> wide(8, Tag::kI);
  wide[0] = Tag::kB;
  wide[7] = Tag::kO;
  auto res = post_scope("great-food", 1, wide, "1");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200) << res->body;
  EXPECT_EQ(res->get_header_value("ETag"), "\"2\"");
  const auto doc = json::parse(client_->Get("/api/docs/great-food")->body);
  const auto& rec = doc["targets"][1]["record"];
  EXPECT_EQ(rec["bio"], bio_json(wide));
  EXPECT_EQ(rec["provenance"], "human");
  EXPECT_EQ(rec["version"], 2);
  EXPECT_EQ(rec["history"].size(), 1u);
}

TEST_F(ServerTest, RejectsInvalidScopesWith422) {
  auto orphan = kFoodScope;
  orphan[0] = Tag::kO;
  auto res = post_scope("great-food", 0, orphan);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  const auto body = json::parse(res->body);
  EXPECT_NE(body["rule"].get<std::string>().find("I without preceding B"), std::string::npos);
  EXPECT_EQ(post_scope("great-food", 0, {Tag::kB, Tag::kI})->status, 422);
  EXPECT_EQ(post_scope("great-food", 0, kServiceScope)->status, 422);
  res = client_->Post("/api/docs/great-food/targets/0/scope", R"({"bio": ["B", "X"]})", "application/json");
  EXPECT_EQ(res->status, 422);
  // Nothing was written.
  EXPECT_EQ(store_->get("great-food").records[0].version, 1u);
}

TEST_F(ServerTest, MissingDocumentsAndTargetsAre404) {
  EXPECT_EQ(client_->Get("/api/docs/missing")->status, 404);
  EXPECT_EQ(post_scope("missing", 0, kFoodScope)->status, 404);
  EXPECT_EQ(post_scope("great-food", 7, kFoodScope)->status, 404);
  EXPECT_EQ(client_->Post("/api/docs/missing/targets/0/pre-annotate")->status, 404);
}

TEST_F(ServerTest, StaleVersionIs409) {
  ASSERT_EQ(post_scope("great-food", 0, kFoodScope, "1")->status, 200);
  auto res = post_scope("great-food", 0, kFoodScope, "1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(json::parse(res->body)["current_version"], 2);
  EXPECT_EQ(post_scope("great-food", 0, kFoodScope, "\"2\"")->status, 200);
  EXPECT_EQ(post_scope("great-food", 0, kFoodScope, "abc")->status, 400);
}

TEST_F(ServerTest, MalformedBodyIs400) {
  auto res = client_->Post("/api/docs/great-food/targets/0/scope", "{nope", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = client_->Post("/api/docs/great-food/targets/0/scope", R"({"tags": []})", "application/json");
  EXPECT_EQ(res->status, 400);
}

TEST_F(ServerTest, ExportAndStats) {
  ASSERT_EQ(post_scope("great-food", 0, kFoodScope)->status, 200);
  auto res = client_->Get("/api/stats");
  ASSERT_TRUE(res);
  const auto stats = json::parse(res->body);
  EXPECT_EQ(stats["total"], 2);
  EXPECT_EQ(stats["human"], 1);
  EXPECT_EQ(stats["auto"], 1);
  EXPECT_EQ(stats["auto_weak"], 0);
  EXPECT_EQ(stats["adjustment_ratio"], 0.5);

  res = client_->Get("/api/export");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const Corpus exported = parse_dataset(res->body);
  ASSERT_EQ(exported.size(), 1u);
  EXPECT_EQ(exported[0].targets[0].scope_bio, kFoodScope);
  EXPECT_EQ(exported[0].targets[0].provenance, "human");
  EXPECT_EQ(exported[0].targets[1].provenance, "auto");
}
