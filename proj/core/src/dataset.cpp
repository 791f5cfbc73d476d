#include <fstream>
#include <sstream>

#include "hgcn/corpus.hpp"
#include "json.hpp"

namespace hgcn {

using nlohmann::json;

namespace {

std::string decode_form(const std::string& w) {
  if (w == "-LRB-") return "(";
  if (w == "-RRB-") return ")";
  if (w == "-LSB-") return "[";
  if (w == "-RSB-") return "]";
  if (w == "-LCB-") return "{";
  if (w == "-RCB-") return "}";
  return w;
}

Span read_inclusive_span(const json& j, std::size_t record, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw DatasetError("expected [start, end] integer pair", record, field);
  }
  const long long a = j[0].get<long long>();
  const long long b = j[1].get<long long>();
  if (a < 0 || b < a) throw DatasetError("invalid span [" + std::to_string(a) + ", " + std::to_string(b) + "]", record, field);
  return Span{static_cast<std::size_t>(a), static_cast<std::size_t>(b) + 1};
}

json write_inclusive_span(const Span& s) { return json::array({s.start, s.end - 1}); }

AnnotatedSentence read_record(const json& j, std::size_t record) {
  if (!j.is_object()) throw DatasetError("record is not a JSON object", record, "");
  AnnotatedSentence s;
  if (j.contains("id")) {
    if (j["id"].is_string()) s.id = j["id"].get<std::string>();
    else if (j["id"].is_number_integer()) s.id = std::to_string(j["id"].get<long long>());
    else throw DatasetError("id must be a string or integer", record, "id");
  }
  if (!j.contains("tokens") || !j["tokens"].is_array()) throw DatasetError("missing token list", record, "tokens");
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) throw DatasetError("token is not a string", record, "tokens");
    s.tokens.push_back(t.get<std::string>());
  }
  if (!j.contains("ptb") || !j["ptb"].is_string()) throw DatasetError("missing bracketed tree", record, "ptb");
  if (!j.contains("conllu") || !j["conllu"].is_string()) throw DatasetError("missing dependency block", record, "conllu");
  s.ptb = j["ptb"].get<std::string>();
  s.conllu = j["conllu"].get<std::string>();
  try {
    s.tree = parse_ptb(s.ptb);
  } catch (const ParseError& e) {
    throw DatasetError(e.what(), record, "ptb");
  }
  std::vector<std::string> forms;
  try {
    s.dependencies = parse_conllu(s.conllu, &forms);
  } catch (const ConlluError& e) {
    throw DatasetError(e.what(), record, "conllu");
  }
  for (std::size_t i = 0; i < forms.size() && i < s.tokens.size(); ++i) {
    if (decode_form(forms[i]) != s.tokens[i]) {
      throw DatasetError("FORM '" + forms[i] + "' at token " + std::to_string(i) + " does not match token '" +
                             s.tokens[i] + "'",
                         record, "conllu");
    }
  }
  if (j.contains("targets")) {
    if (!j["targets"].is_array()) throw DatasetError("targets must be an array", record, "targets");
    std::size_t k = 0;
    for (const auto& tj : j["targets"]) {
      const std::string prefix = "targets[" + std::to_string(k) + "]";
      if (!tj.is_object()) throw DatasetError("target is not an object", record, prefix);
      TargetInstance t;
      if (!tj.contains("span")) throw DatasetError("missing span", record, prefix + ".span");
      t.span = read_inclusive_span(tj["span"], record, prefix + ".span");
      if (!tj.contains("polarity") || !tj["polarity"].is_string()) {
        throw DatasetError("missing polarity", record, prefix + ".polarity");
      }
      try {
        t.polarity = parse_polarity(tj["polarity"].get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw DatasetError(e.what(), record, prefix + ".polarity");
      }
      if (tj.contains("scope_bio") && !tj["scope_bio"].is_null()) {
        if (!tj["scope_bio"].is_array()) throw DatasetError("scope_bio must be an array", record, prefix + ".scope_bio");
        std::vector<Tag> tags;
        for (const auto& x : tj["scope_bio"]) {
          if (!x.is_string()) throw DatasetError("tag is not a string", record, prefix + ".scope_bio");
          try {
            tags.push_back(parse_tag(x.get<std::string>()));
          } catch (const std::invalid_argument& e) {
            throw DatasetError(e.what(), record, prefix + ".scope_bio");
          }
        }
        t.scope_bio = std::move(tags);
      }
      if (tj.contains("opinion_spans")) {
        if (!tj["opinion_spans"].is_array()) {
          throw DatasetError("opinion_spans must be an array", record, prefix + ".opinion_spans");
        }
        for (const auto& o : tj["opinion_spans"]) {
          t.opinion_spans.push_back(read_inclusive_span(o, record, prefix + ".opinion_spans"));
        }
      }
      if (tj.contains("provenance") && tj["provenance"].is_string()) t.provenance = tj["provenance"].get<std::string>();
      s.targets.push_back(std::move(t));
      ++k;
    }
  }
  validate_sentence(s, record);
  return s;
}

json write_record(const AnnotatedSentence& s) {
  json j;
  if (!s.id.empty()) j["id"] = s.id;
  j["tokens"] = s.tokens;
  j["ptb"] = s.ptb.empty() ? to_ptb(s.tree) : s.ptb;
  j["conllu"] = s.conllu.empty() ? to_conllu(s.dependencies, s.tokens) : s.conllu;
  json targets = json::array();
  for (const auto& t : s.targets) {
    json tj;
    tj["span"] = write_inclusive_span(t.span);
    tj["polarity"] = std::string(to_string(t.polarity));
    if (t.scope_bio) {
      json tags = json::array();
      for (Tag g : *t.scope_bio) tags.push_back(std::string(to_string(g)));
      tj["scope_bio"] = std::move(tags);
    }
    if (!t.opinion_spans.empty()) {
      json spans = json::array();
      for (const auto& o : t.opinion_spans) spans.push_back(write_inclusive_span(o));
      tj["opinion_spans"] = std::move(spans);
    }
    if (t.provenance) tj["provenance"] = *t.provenance;
    targets.push_back(std::move(tj));
  }
  j["targets"] = std::move(targets);
  return j;
}

}  // namespace

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::kPositive: return "positive";
    case Polarity::kNeutral: return "neutral";
    case Polarity::kNegative: return "negative";
  }
  return "neutral";
}

Polarity parse_polarity(std::string_view s) {
  if (s == "positive") return Polarity::kPositive;
  if (s == "neutral") return Polarity::kNeutral;
  if (s == "negative") return Polarity::kNegative;
  throw std::invalid_argument("unknown polarity '" + std::string(s) + "'");
}

std::string_view to_string(Tag t) {
  switch (t) {
    case Tag::kB: return "B";
    case Tag::kI: return "I";
    case Tag::kO: return "O";
  }
  return "O";
}

Tag parse_tag(std::string_view s) {
  if (s == "B") return Tag::kB;
  if (s == "I") return Tag::kI;
  if (s == "O") return Tag::kO;
  throw std::invalid_argument("unknown BIO tag '" + std::string(s) + "'");
}

DatasetError::DatasetError(const std::string& what, std::size_t record, std::string field)
    : std::runtime_error("record " + std::to_string(record) + (field.empty() ? "" : ", field '" + field + "'") + ": " +
                         what),
      record_(record),
      field_(std::move(field)) {}

std::string bio_violation(const std::vector<Tag>& tags) {
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] != Tag::kI) continue;
    if (i == 0 || tags[i - 1] == Tag::kO) return "I without preceding B at position " + std::to_string(i);
  }
  return {};
}

void validate_sentence(const AnnotatedSentence& s, std::size_t record) {
  const std::size_t n = s.tokens.size();
  if (n == 0) throw DatasetError("sentence has no tokens", record, "tokens");
  if (s.tree.words() != s.tokens) {
    throw DatasetError("tree leaves do not match tokens (" + std::to_string(s.tree.word_count()) + " leaves, " +
                           std::to_string(n) + " tokens)",
                       record, "ptb");
  }
  if (s.dependencies.size() != n) {
    throw DatasetError("dependency graph has " + std::to_string(s.dependencies.size()) + " tokens, expected " +
                           std::to_string(n),
                       record, "conllu");
  }
  for (std::size_t k = 0; k < s.targets.size(); ++k) {
    const auto& t = s.targets[k];
    const std::string prefix = "targets[" + std::to_string(k) + "]";
    if (t.span.empty() || t.span.end > n) {
      throw DatasetError("target span out of bounds for " + std::to_string(n) + " tokens", record, prefix + ".span");
    }
    for (const auto& o : t.opinion_spans) {
      if (o.empty() || o.end > n) throw DatasetError("opinion span out of bounds", record, prefix + ".opinion_spans");
    }
    if (t.scope_bio) {
      const auto& bio = *t.scope_bio;
      if (bio.size() != n) {
        throw DatasetError("BIO length " + std::to_string(bio.size()) + " != token count " + std::to_string(n), record,
                           prefix + ".scope_bio");
      }
      if (auto v = bio_violation(bio); !v.empty()) throw DatasetError(v, record, prefix + ".scope_bio");
      for (std::size_t i = t.span.start; i < t.span.end; ++i) {
        if (bio[i] == Tag::kO) {
          throw DatasetError("target token " + std::to_string(i) + " tagged O", record, prefix + ".scope_bio");
        }
      }
    }
  }
}

Corpus parse_dataset(std::string_view text) {
  Corpus corpus;
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return corpus;
  if (text[first] == '[') {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw DatasetError(std::string("invalid JSON: ") + e.what(), 0, "");
    }
    for (std::size_t i = 0; i < doc.size(); ++i) corpus.push_back(read_record(doc[i], i));
    return corpus;
  }
  std::size_t record = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DatasetError(std::string("invalid JSON: ") + e.what(), record, "");
    }
    corpus.push_back(read_record(j, record));
    ++record;
  }
  return corpus;
}

Corpus load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str());
}

std::string serialize_dataset(const Corpus& corpus) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out += write_record(corpus[i]).dump();
    if (i + 1 < corpus.size()) out += ',';
    out += '\n';
  }
  out += "]\n";
  return out;
}

void save_dataset(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file '" + path + "'");
  out << serialize_dataset(corpus);
  if (!out) throw std::runtime_error("failed writing dataset file '" + path + "'");
}

std::string sentence_to_json(const AnnotatedSentence& sentence) { return write_record(sentence).dump(); }

AnnotatedSentence sentence_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DatasetError(e.what(), 0, "");
  }
  return read_record(j, 0);
}

AnnotatedSentence make_sentence(std::string ptb, std::string conllu, std::vector<TargetInstance> targets, std::string id) {
  AnnotatedSentence s;
  s.id = std::move(id);
  s.tree = parse_ptb(ptb);
  s.dependencies = parse_conllu(conllu);
  s.tokens = s.tree.words();
  s.ptb = std::move(ptb);
  s.conllu = std::move(conllu);
  s.targets = std::move(targets);
  validate_sentence(s, 0);
  return s;
}

}  // namespace hgcn
