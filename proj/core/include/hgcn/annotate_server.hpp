#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "hgcn/annotation_store.hpp"

namespace hgcn {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> ui_dir;  // served at /
};

/// HTTP/JSON front end of an AnnotationStore.
///
///   GET  /api/docs
///   GET  /api/docs/{id}
///   POST /api/docs/{id}/targets/{k}/scope         body {"bio": [...]}, optional If-Match: <version>
///   POST /api/docs/{id}/targets/{k}/pre-annotate
///   GET  /api/export
///   GET  /api/stats
class AnnotateServer {
 public:
  AnnotateServer(AnnotationStore& store, ServerOptions options);
  ~AnnotateServer();
  AnnotateServer(const AnnotateServer&) = delete;
  AnnotateServer& operator=(const AnnotateServer&) = delete;

  /// Binds the socket; returns the bound port.
  int bind();
  /// Serves until stop(); bind() first.
  void run();
  /// bind() + run() on a background thread; returns once accepting.
  int start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hgcn
