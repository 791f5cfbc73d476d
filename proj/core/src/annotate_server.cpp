#include "hgcn/annotate_server.hpp"

#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace hgcn {

using nlohmann::json;

namespace {

json tags_json(const std::vector<Tag>& tags) {
  json a = json::array();
  for (Tag t : tags) a.push_back(std::string(to_string(t)));
  return a;
}

json span_json(const Span& s) { return json::array({s.start, s.end - 1}); }

json record_json(const AnnotationRecord& r) {
  json history = json::array();
  for (const auto& h : r.history)
    history.push_back({{"time", h.time}, {"bio", tags_json(h.bio)}, {"provenance", std::string(to_string(h.provenance))}});
  return {{"bio", tags_json(r.bio)},
          {"provenance", std::string(to_string(r.provenance))},
          {"version", r.version},
          {"history", std::move(history)}};
}

json document_json(const StoredDocument& d) {
  const auto& s = d.sentence;
  json targets = json::array();
  for (std::size_t k = 0; k < s.targets.size(); ++k) {
    const auto& t = s.targets[k];
    std::string term;
    for (std::size_t i = t.span.start; i < t.span.end; ++i) term += (i > t.span.start ? " " : "") + s.tokens[i];
    json opinions = json::array();
    for (const auto& o : t.opinion_spans) opinions.push_back(span_json(o));
    targets.push_back({{"index", k},
                       {"span", span_json(t.span)},
                       {"term", term},
                       {"polarity", std::string(to_string(t.polarity))},
                       {"opinion_spans", std::move(opinions)},
                       {"record", record_json(d.records.at(k))}});
  }
  return {{"id", s.id}, {"tokens", s.tokens}, {"tree", s.ptb.empty() ? to_ptb(s.tree) : s.ptb},
          {"targets", std::move(targets)}};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

std::size_t target_index(const httplib::Request& req) {
  const std::string& raw = req.path_params.at("k");
  std::size_t pos = 0;
  unsigned long long k = 0;
  try {
    k = std::stoull(raw, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != raw.size() || raw.empty()) throw DocumentNotFound("bad target index '" + raw + "'");
  return static_cast<std::size_t>(k);
}

std::optional<std::uint64_t> if_match(const httplib::Request& req) {
  if (!req.has_header("If-Match")) return std::nullopt;
  std::string v = req.get_header_value("If-Match");
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  try {
    std::size_t pos = 0;
    const auto n = std::stoull(v, &pos);
    if (pos == v.size()) return n;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("If-Match must carry a record version, got '" + v + "'");
}

// Maps store exceptions onto status codes.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const DocumentNotFound& e) {
    send_error(res, 404, e.what());
  } catch (const VersionConflict& e) {
    send_json(res, 409, {{"error", e.what()}, {"current_version", e.current()}});
  } catch (const ScopeRejected& e) {
    send_json(res, 422, {{"error", e.what()}, {"rule", e.what()}});
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("malformed request body: ") + e.what());
  } catch (const std::invalid_argument& e) {
    send_error(res, 400, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

struct AnnotateServer::Impl {
  AnnotationStore& store;
  ServerOptions options;
  httplib::Server http;
  std::thread worker;
  int port = -1;

  Impl(AnnotationStore& s, ServerOptions o) : store(s), options(std::move(o)) { routes(); }

  void routes() {
    http.Get("/api/docs", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        json out = json::array();
        for (const auto& d : store.list())
          out.push_back({{"id", d.id}, {"targets", d.targets}, {"human", d.human}, {"complete", d.complete()}});
        send_json(res, 200, out);
      });
    });
    http.Get("/api/docs/:id", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] { send_json(res, 200, document_json(store.get(req.path_params.at("id")))); });
    });
    http.Post("/api/docs/:id/targets/:k/scope", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.path_params.at("id");
        const std::size_t k = target_index(req);
        const json body = json::parse(req.body);
        if (!body.is_object() || !body.contains("bio") || !body["bio"].is_array())
          throw std::invalid_argument("body must be an object with a \"bio\" array");
        std::vector<Tag> bio;
        for (const auto& t : body["bio"]) {
          if (!t.is_string()) throw ScopeRejected("tags must be strings");
          try {
            bio.push_back(parse_tag(t.get<std::string>()));
          } catch (const std::invalid_argument& e) {
            throw ScopeRejected(e.what());
          }
        }
        const auto expected = if_match(req);
        const auto rec = store.save_scope(id, k, bio, expected);
        res.set_header("ETag", "\"" + std::to_string(rec.version) + "\"");
        send_json(res, 200, record_json(rec));
      });
    });
    http.Post("/api/docs/:id/targets/:k/pre-annotate", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const auto p = store.propose(req.path_params.at("id"), target_index(req));
        json opinions = json::array();
        for (const auto& o : p.opinions) opinions.push_back(span_json(o));
        send_json(res, 200,
                  {{"bio", tags_json(p.bio)},
                   {"scope", span_json(p.scope.span)},
                   {"opinion_spans", std::move(opinions)},
                   {"provenance", std::string(to_string(p.provenance))}});
      });
    });
    http.Get("/api/export", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        res.status = 200;
        res.set_content(serialize_dataset(store.export_corpus()), "application/json");
      });
    });
    http.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        const auto s = store.stats();
        send_json(res, 200,
                  {{"total", s.total},
                   {"auto", s.automatic},
                   {"auto_weak", s.weak},
                   {"human", s.human},
                   {"adjustment_ratio", s.adjustment_ratio()}});
      });
    });
    if (options.ui_dir && !http.set_mount_point("/", options.ui_dir->string()))
      throw std::invalid_argument("ui directory not found: " + options.ui_dir->string());
  }
};

AnnotateServer::AnnotateServer(AnnotationStore& store, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, std::move(options))) {}

AnnotateServer::~AnnotateServer() { stop(); }

int AnnotateServer::bind() {
  if (impl_->options.port == 0) {
    impl_->port = impl_->http.bind_to_any_port(impl_->options.host);
  } else {
    impl_->port = impl_->http.bind_to_port(impl_->options.host, impl_->options.port) ? impl_->options.port : -1;
  }
  if (impl_->port < 0)
    throw std::runtime_error("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  return impl_->port;
}

void AnnotateServer::run() { impl_->http.listen_after_bind(); }

int AnnotateServer::start() {
  const int port = bind();
  impl_->worker = std::thread([this] { run(); });
  impl_->http.wait_until_ready();
  return port;
}

void AnnotateServer::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace hgcn
