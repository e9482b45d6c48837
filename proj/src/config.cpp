#include <cstdlib>
#include <fstream>
#include <sstream>

#include <rapidjson/document.h>
#include <rapidjson/error/en.h>
#include <rapidjson/reader.h>
#include <rapidjson/schema.h>
#include <rapidjson/stringbuffer.h>

#include "advdn/errors.hpp"
#include "advdn/experiment.hpp"
#include "advdn/geometry.hpp"
#include "advdn/rng.hpp"
#include "experiment_schema.inc"

namespace advdn {

std::string_view experiment_schema() { return kExperimentSchema; }

std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ResolutionError("cannot read " + p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::filesystem::path ExperimentConfig::resolve(const std::string& p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

const ModelEntry* ExperimentConfig::find_model(const std::string& id) const {
  for (const auto& m : models)
    if (m.id == id) return &m;
  return nullptr;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a64(nlohmann::json(*this).dump()); }

namespace {

nlohmann::json attack_json(const AttackConfig& c) {
  nlohmann::json j = c;
  j.erase("seed");
  j.erase("alpha");
  return j;
}

void overlay_attack(AttackConfig& c, const nlohmann::json& j) {
  nlohmann::json full = c;
  for (auto it = j.begin(); it != j.end(); ++it) full[it.key()] = it.value();
  AttackConfig parsed = full.get<AttackConfig>();
  parsed.seed = 0;
  c = parsed;
}

AttackConfig attack_defaults(const std::string& mode) {
  if (mode == "l2pgd") return AttackConfig::l2();
  if (mode == "clean") return AttackConfig::clean();
  return AttackConfig::pgd();
}

nlohmann::json train_json(const TrainConfig& t) {
  nlohmann::json j = t;
  j.erase("seed");
  return j;
}

nlohmann::json corpus_json(const CorpusSpec& c) {
  return {{"count", c.count},       {"height", c.height},         {"width", c.width},
          {"channels", c.channels}, {"patch_size", c.patch_size}, {"stride", c.stride}};
}

CorpusSpec corpus_from(const nlohmann::json& j, const std::string& split) {
  CorpusSpec c;
  c.split = split;
  c.prefix = split;
  if (split == "test") {
    c.count = 12;
    c.height = c.width = 128;
  }
  c.count = j.value("count", c.count);
  c.height = j.value("height", c.height);
  c.width = j.value("width", c.width);
  c.channels = j.value("channels", c.channels);
  c.patch_size = j.value("patch_size", c.patch_size);
  c.stride = j.value("stride", c.stride);
  return c;
}

}  // namespace

void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json::object();
  j["seed"] = c.seed;
  if (!c.run_id.empty()) j["run_id"] = c.run_id;
  if (!c.output.empty()) j["output"] = c.output;
  j["dataset"] = {{"train", c.train_manifest}, {"test", c.test_manifest}, {"test_sigma", c.test_sigma}};
  if (c.corpus_train || c.corpus_test) {
    j["corpus"] = nlohmann::json::object();
    if (c.corpus_train) j["corpus"]["train"] = corpus_json(*c.corpus_train);
    if (c.corpus_test) j["corpus"]["test"] = corpus_json(*c.corpus_test);
  }
  if (!c.models.empty()) {
    j["models"] = nlohmann::json::array();
    for (const auto& m : c.models) {
      nlohmann::json e = m.spec;
      e.erase("kernel");
      e["id"] = m.id;
      if (m.spec.kind == DenoiserKind::ResidualCnn) e["train"] = train_json(m.train);
      else e.erase("blind");
      j["models"].push_back(e);
    }
  }
  if (c.attack) {
    j["attack"] = {{"model", c.attack->model}};
    for (const auto& [mode, cfg] : c.attack->modes) j["attack"][mode] = attack_json(cfg);
  }
  if (c.sweep)
    j["sweep"] = {{"model", c.sweep->model},
                  {"attack", c.sweep->attack},
                  {"count", c.sweep->count},
                  {"threshold", c.sweep->threshold},
                  {"perturbation", c.sweep->perturbation}};
  if (c.combine)
    j["combine"] = {{"model", c.combine->model}, {"lambdas", c.combine->lambdas}, {"threshold", c.combine->threshold}};
  if (c.transfer)
    j["transfer"] = {{"models", c.transfer->models},
                     {"attack", attack_json(c.transfer->attack)},
                     {"threshold", c.transfer->threshold}};
  if (c.advtrain) {
    nlohmann::json a = c.advtrain->cfg;
    a["attack"] = attack_json(c.advtrain->cfg.attack);
    a["retrain"] = train_json(c.advtrain->cfg.retrain);
    a["base"] = c.advtrain->base;
    a["id"] = c.advtrain->id;
    if (!c.advtrain->cross_source.empty()) a["cross_source"] = c.advtrain->cross_source;
    j["advtrain"] = a;
  }
  if (c.resist)
    j["resist"] = {{"source", c.resist->source},
                   {"classical", c.resist->classical},
                   {"attack", attack_json(c.resist->attack)}};
  if (c.report_title) j["report"] = {{"title", *c.report_title}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c = ExperimentConfig{};
  c.seed = j.at("seed").get<std::uint64_t>();
  c.run_id = j.value("run_id", std::string{});
  c.output = j.value("output", std::string{});
  const auto& ds = j.at("dataset");
  c.train_manifest = ds.at("train").get<std::string>();
  c.test_manifest = ds.at("test").get<std::string>();
  c.test_sigma = ds.value("test_sigma", 25.0);
  if (j.contains("corpus")) {
    const auto& cj = j.at("corpus");
    if (cj.contains("train")) c.corpus_train = corpus_from(cj.at("train"), "train");
    if (cj.contains("test")) c.corpus_test = corpus_from(cj.at("test"), "test");
  }
  if (j.contains("models")) {
    for (const auto& e : j.at("models")) {
      ModelEntry m;
      m.id = e.at("id").get<std::string>();
      const DenoiserKind kind = denoiser_kind_from_string(e.at("kind").get<std::string>());
      const int channels = e.value("channels", 1);
      if (kind == DenoiserKind::ResidualCnn) {
        m.spec = DenoiserSpec::residual(e.value("depth", 7), e.value("width", 32), e.value("blind", false), channels);
        if (e.contains("train")) m.train = e.at("train").get<TrainConfig>();
        if (m.spec.blind && !m.train.sigma_range) m.train.sigma_range = std::make_pair(0.0, 55.0);
        if (!m.spec.blind && !m.train.sigma) m.train.sigma = 25.0;
        if (m.spec.blind) m.train.sigma.reset();
        else m.train.sigma_range.reset();
      } else {
        m.spec = DenoiserSpec::tv(e.value("tv_lambda", 0.2), e.value("tv_iterations", 100), channels);
      }
      m.spec.validate();
      if (c.find_model(m.id)) throw ConfigError("duplicate model id '" + m.id + "'");
      c.models.push_back(std::move(m));
    }
  }
  if (j.contains("attack")) {
    AttackBlock a;
    a.model = j.at("attack").at("model").get<std::string>();
    for (const char* mode : {"pgd", "l2pgd", "clean"}) {
      if (!j.at("attack").contains(mode)) continue;
      AttackConfig cfg = attack_defaults(mode);
      overlay_attack(cfg, j.at("attack").at(mode));
      a.modes[mode] = cfg;
    }
    c.attack = a;
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    SweepBlock b;
    b.model = s.at("model").get<std::string>();
    b.attack = s.value("attack", b.attack);
    b.count = s.value("count", b.count);
    b.threshold = s.value("threshold", b.threshold);
    b.perturbation = s.value("perturbation", b.perturbation);
    c.sweep = b;
  }
  if (j.contains("combine")) {
    const auto& s = j.at("combine");
    CombineBlock b;
    b.model = s.at("model").get<std::string>();
    b.lambdas = s.contains("lambdas") ? s.at("lambdas").get<std::vector<double>>() : interior_lambdas();
    b.threshold = s.value("threshold", b.threshold);
    c.combine = b;
  }
  if (j.contains("transfer")) {
    const auto& s = j.at("transfer");
    TransferBlock b;
    b.models = s.at("models").get<std::vector<std::string>>();
    if (s.contains("attack")) overlay_attack(b.attack, s.at("attack"));
    b.threshold = s.value("threshold", b.threshold);
    c.transfer = b;
  }
  if (j.contains("advtrain")) {
    const auto& s = j.at("advtrain");
    AdvTrainBlock b;
    b.base = s.at("base").get<std::string>();
    b.id = s.at("id").get<std::string>();
    nlohmann::json rest = s;
    rest.erase("attack");
    rest.erase("retrain");
    b.cfg = rest.get<AdvTrainConfig>();
    if (s.contains("attack")) overlay_attack(b.cfg.attack, s.at("attack"));
    if (s.contains("retrain")) b.cfg.retrain = s.at("retrain").get<TrainConfig>();
    b.cfg.retrain.seed = 0;
    b.cross_source = s.value("cross_source", std::string{});
    c.advtrain = b;
  }
  if (j.contains("resist")) {
    const auto& s = j.at("resist");
    ResistBlock b;
    b.source = s.at("source").get<std::string>();
    b.classical = s.at("classical").get<std::string>();
    if (s.contains("attack")) overlay_attack(b.attack, s.at("attack"));
    c.resist = b;
  }
  if (j.contains("report")) c.report_title = j.at("report").value("title", std::string{});
}

namespace {

// Input stream that counts lines as rapidjson consumes characters.
struct LineStream {
  using Ch = char;
  explicit LineStream(std::string_view s) : cur(s.data()), begin(s.data()), end(s.data() + s.size()) {}
  Ch Peek() const { return cur < end ? *cur : '\0'; }
  Ch Take() {
    if (cur >= end) return '\0';
    const Ch c = *cur++;
    if (c == '\n') ++line;
    return c;
  }
  std::size_t Tell() const { return static_cast<std::size_t>(cur - begin); }
  Ch* PutBegin() { return nullptr; }
  void Put(Ch) {}
  void Flush() {}
  std::size_t PutEnd(Ch*) { return 0; }

  const char* cur;
  const char* begin;
  const char* end;
  int line = 1;
};

std::string escape_pointer_token(const std::string& t) {
  std::string out;
  for (char ch : t) {
    if (ch == '~') out += "~0";
    else if (ch == '/') out += "~1";
    else out += ch;
  }
  return out;
}

// Records the source line of every value, keyed by JSON pointer.
struct LineMapper : rapidjson::BaseReaderHandler<rapidjson::UTF8<>, LineMapper> {
  struct Frame {
    bool array = false;
    int index = -1;
    std::string key;
  };
  explicit LineMapper(LineStream& s) : stream(s) {}

  std::string pointer() const {
    std::string p;
    for (const auto& f : frames) p += "/" + (f.array ? std::to_string(f.index) : escape_pointer_token(f.key));
    return p;
  }
  void value_start() {
    if (!frames.empty() && frames.back().array) ++frames.back().index;
    const std::string p = pointer();
    if (!lines.count(p)) lines[p] = stream.line;
  }
  bool Default() {
    value_start();
    return true;
  }
  bool String(const char*, rapidjson::SizeType, bool) { return Default(); }
  bool RawNumber(const char*, rapidjson::SizeType, bool) { return Default(); }
  bool StartObject() {
    value_start();
    frames.push_back({false, -1, {}});
    return true;
  }
  bool Key(const char* str, rapidjson::SizeType len, bool) {
    frames.back().key.assign(str, len);
    lines[pointer()] = stream.line;
    return true;
  }
  bool EndObject(rapidjson::SizeType) {
    frames.pop_back();
    return true;
  }
  bool StartArray() {
    value_start();
    frames.push_back({true, -1, {}});
    return true;
  }
  bool EndArray(rapidjson::SizeType) {
    frames.pop_back();
    return true;
  }

  LineStream& stream;
  std::vector<Frame> frames;
  std::map<std::string, int> lines;
};

int line_for(const std::map<std::string, int>& lines, std::string pointer) {
  while (true) {
    auto it = lines.find(pointer);
    if (it != lines.end()) return it->second;
    if (pointer.empty()) return 1;
    pointer.erase(pointer.rfind('/'));
  }
}

std::string describe(const nlohmann::json& schema_node, const nlohmann::json& doc_node, const std::string& keyword) {
  std::ostringstream os;
  if (keyword == "required") {
    os << "missing required field";
    std::string sep = " ";
    for (const auto& r : schema_node.value("required", nlohmann::json::array()))
      if (!doc_node.is_object() || !doc_node.contains(r.get<std::string>())) {
        os << sep << "'" << r.get<std::string>() << "'";
        sep = ", ";
      }
  } else if (keyword == "additionalProperties") {
    os << "unknown field";
    std::string sep = " ";
    const auto props = schema_node.value("properties", nlohmann::json::object());
    if (doc_node.is_object())
      for (auto it = doc_node.begin(); it != doc_node.end(); ++it)
        if (!props.contains(it.key())) {
          os << sep << "'" << it.key() << "'";
          sep = ", ";
        }
  } else if (keyword == "type") {
    os << "expected " << schema_node.value("type", nlohmann::json("?")).dump() << ", got " << doc_node.type_name();
  } else if (keyword == "enum") {
    os << "value " << doc_node.dump() << " not one of " << schema_node.value("enum", nlohmann::json::array()).dump();
  } else if (keyword == "minimum" || keyword == "maximum") {
    os << "value " << doc_node.dump() << " violates " << keyword << " " << schema_node.value(keyword, 0.0)
       << (schema_node.value("exclusive" + std::string(keyword == "minimum" ? "Minimum" : "Maximum"), false)
               ? " (exclusive)"
               : "");
  } else {
    os << "violates schema keyword '" << keyword << "'";
  }
  return os.str();
}

}  // namespace

std::vector<ValidationIssue> validate_config_text(std::string_view text) {
  std::vector<ValidationIssue> issues;
  LineStream stream(text);
  LineMapper mapper(stream);
  rapidjson::Reader reader;
  const rapidjson::ParseResult ok = reader.Parse<rapidjson::kParseCommentsFlag>(stream, mapper);
  if (!ok) {
    issues.push_back({stream.line, "", std::string("parse error: ") + rapidjson::GetParseError_En(ok.Code())});
    return issues;
  }
  rapidjson::Document doc;
  doc.Parse<rapidjson::kParseCommentsFlag>(text.data(), text.size());
  rapidjson::Document sd;
  sd.Parse(experiment_schema().data(), experiment_schema().size());
  const rapidjson::SchemaDocument schema(sd);
  rapidjson::SchemaValidator validator(schema);
  if (!doc.Accept(validator)) {
    rapidjson::StringBuffer doc_ptr, schema_ptr;
    validator.GetInvalidDocumentPointer().Stringify(doc_ptr);
    validator.GetInvalidSchemaPointer().Stringify(schema_ptr);
    const std::string pointer = doc_ptr.GetString();
    const std::string keyword = validator.GetInvalidSchemaKeyword();
    const auto schema_json = nlohmann::json::parse(experiment_schema());
    const auto doc_json = nlohmann::json::parse(text, nullptr, true, true);
    nlohmann::json schema_node, doc_node;
    try {
      schema_node = schema_json.at(nlohmann::json::json_pointer(schema_ptr.GetString()));
      doc_node = doc_json.at(nlohmann::json::json_pointer(pointer));
    } catch (const nlohmann::json::exception&) {
    }
    issues.push_back({line_for(mapper.lines, pointer), pointer.empty() ? "/" : pointer,
                      describe(schema_node, doc_node, keyword)});
  }
  return issues;
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("empty path segment in override: " + assignment);
    const bool last = dot == std::string::npos;
    if (node->is_array()) {
      const std::size_t idx = std::stoul(part);
      if (idx >= node->size()) throw ConfigError("override index out of range: " + assignment);
      node = &(*node)[idx];
    } else {
      if (!node->is_object()) throw ConfigError("override path crosses a scalar: " + assignment);
      node = &(*node)[part];
    }
    if (last) break;
    start = dot + 1;
  }
  if (!value.is_primitive()) throw ConfigError("overrides may only set scalar fields: " + assignment);
  *node = value;
}

ExperimentConfig parse_config(std::string_view text, const std::string& source_name,
                              const std::filesystem::path& base_dir) {
  const auto issues = validate_config_text(text);
  if (!issues.empty()) {
    std::string msg;
    for (const auto& i : issues)
      msg += source_name + ":" + std::to_string(i.line) + ": " + (i.pointer.empty() ? "" : i.pointer + ": ") +
             i.message + "\n";
    msg.pop_back();
    throw ConfigError(msg);
  }
  ExperimentConfig cfg;
  try {
    cfg = nlohmann::json::parse(text, nullptr, true, true).get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(source_name + ": " + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  cfg.base_dir = base_dir;
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::string text = read_text_file(path);
  if (!overrides.empty()) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text, nullptr, true, true);
    } catch (const nlohmann::json::parse_error&) {
      return parse_config(text, path.string(), path.parent_path());  // reports the parse error with its line
    }
    for (const auto& o : overrides) apply_override(doc, o);
    text = doc.dump(2);
    return parse_config(text, path.string() + " (with overrides)", path.parent_path());
  }
  return parse_config(text, path.string(), path.parent_path());
}

}  // namespace advdn
