#include "reqforge/domain.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "reqforge/error.hpp"

namespace reqforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "E_IO";
    case ErrorCode::Parse: return "E_PARSE";
    case ErrorCode::Validation: return "E_VALIDATION";
    case ErrorCode::EmptyContext: return "E_EMPTY_CONTEXT";
    case ErrorCode::TooFewRequirements: return "E_TOO_FEW_REQUIREMENTS";
    case ErrorCode::MixedProjects: return "E_MIXED_PROJECTS";
    case ErrorCode::EmptyDataset: return "E_EMPTY_DATASET";
    case ErrorCode::EndpointUnreachable: return "E_ENDPOINT_UNREACHABLE";
    case ErrorCode::HttpStatus: return "E_HTTP_STATUS";
    case ErrorCode::Timeout: return "E_TIMEOUT";
    case ErrorCode::MalformedResponse: return "E_MALFORMED_RESPONSE";
    case ErrorCode::AllRequestsFailed: return "E_ALL_REQUESTS_FAILED";
    case ErrorCode::DimensionMismatch: return "E_DIMENSION_MISMATCH";
    case ErrorCode::EmptySide: return "E_EMPTY_SIDE";
    case ErrorCode::ScorerFailed: return "E_SCORER_FAILED";
    case ErrorCode::ScoreCountMismatch: return "E_SCORE_COUNT_MISMATCH";
    case ErrorCode::ShapeMismatch: return "E_SHAPE_MISMATCH";
    case ErrorCode::DegenerateTable: return "E_DEGENERATE_TABLE";
    case ErrorCode::ZeroExpected: return "E_ZERO_EXPECTED";
    case ErrorCode::EmptySample: return "E_EMPTY_SAMPLE";
    case ErrorCode::AllZeroDifferences: return "E_ALL_ZERO_DIFFERENCES";
    case ErrorCode::InvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::LengthMismatch: return "E_LENGTH_MISMATCH";
    case ErrorCode::DuplicateResponse: return "E_DUPLICATE_RESPONSE";
    case ErrorCode::DomainViolation: return "E_DOMAIN_VIOLATION";
    case ErrorCode::MissingResponses: return "E_MISSING_RESPONSES";
    case ErrorCode::MissingBlindKey: return "E_MISSING_BLIND_KEY";
    case ErrorCode::UnknownStudy: return "E_UNKNOWN_STUDY";
    case ErrorCode::Usage: return "E_USAGE";
  }
  return "E_UNKNOWN";
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

RequirementClass RequirementClass::parse(const std::string& label) {
  static const std::unordered_map<std::string, RequirementClassKind> known = {
      {"functional", RequirementClassKind::Functional}, {"f", RequirementClassKind::Functional},
      {"usability", RequirementClassKind::Usability},   {"us", RequirementClassKind::Usability},
      {"security", RequirementClassKind::Security},     {"se", RequirementClassKind::Security},
      {"performance", RequirementClassKind::Performance}, {"pe", RequirementClassKind::Performance},
  };
  auto it = known.find(lower(normalize_text(label)));
  if (it != known.end()) return {it->second, {}};
  return {RequirementClassKind::Other, label};
}

std::string RequirementClass::label() const {
  switch (kind) {
    case RequirementClassKind::Functional: return "Functional";
    case RequirementClassKind::Usability: return "Usability";
    case RequirementClassKind::Security: return "Security";
    case RequirementClassKind::Performance: return "Performance";
    case RequirementClassKind::Other: return other_label;
  }
  return other_label;
}

AuthorKind AuthorKind::parse(const std::string& s) {
  if (s.empty() || lower(s) == "human") return Human();
  constexpr std::string_view prefix = "model:";
  if (s.rfind(prefix, 0) == 0) return Model(s.substr(prefix.size()));
  return Model(s);
}

std::string AuthorKind::label() const { return human ? "human" : "model:" + model_id; }

std::string to_string(TaskCategory t) {
  switch (t) {
    case TaskCategory::HowTo: return "How-to? INST";
    case TaskCategory::ReTypes: return "RE-types INST";
    case TaskCategory::Missing: return "Missing INST";
  }
  return {};
}

std::string to_string(Template t) {
  return t == Template::ContextFirst ? "context_first" : "instruction_first";
}

std::string to_string(SplitTag t) {
  switch (t) {
    case SplitTag::Train: return "train";
    case SplitTag::Eval: return "eval";
    case SplitTag::Unassigned: return "unassigned";
  }
  return {};
}

TaskCategory parse_task(const std::string& s) {
  auto l = lower(s);
  if (l == "how-to? inst" || l == "howto" || l == "how-to" || l == "how_to") return TaskCategory::HowTo;
  if (l == "re-types inst" || l == "retypes" || l == "re-types" || l == "re_types") return TaskCategory::ReTypes;
  if (l == "missing inst" || l == "missing") return TaskCategory::Missing;
  throw Error(ErrorCode::Parse, "unknown task category '" + s + "'");
}

Template parse_template(const std::string& s) {
  auto l = lower(s);
  if (l == "context_first" || l == "template-1" || l == "1") return Template::ContextFirst;
  if (l == "instruction_first" || l == "template-2" || l == "2") return Template::InstructionFirst;
  throw Error(ErrorCode::Parse, "unknown template '" + s + "'");
}

SplitTag parse_split(const std::string& s) {
  auto l = lower(s);
  if (l == "train") return SplitTag::Train;
  if (l == "eval") return SplitTag::Eval;
  if (l.empty() || l == "unassigned") return SplitTag::Unassigned;
  throw Error(ErrorCode::Parse, "unknown split tag '" + s + "'");
}

std::string normalize_text(std::string_view text) {
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  std::size_t b = 0, e = text.size();
  while (b < e && is_ws(text[b])) ++b;
  while (e > b && is_ws(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

// Unknown class labels are advisory: they are kept as Other(label).
bool ValidationReport::valid() const {
  return std::none_of(issues.begin(), issues.end(),
                      [](const auto& i) { return i.kind != ValidationIssue::Kind::UnknownClass; });
}

std::size_t ValidationReport::count(ValidationIssue::Kind kind) const {
  return static_cast<std::size_t>(
      std::count_if(issues.begin(), issues.end(), [kind](const auto& i) { return i.kind == kind; }));
}

ValidationReport validate_corpus(const std::vector<Requirement>& corpus) {
  ValidationReport report;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& r = corpus[i];
    if (r.id.empty()) {
      report.issues.push_back({ValidationIssue::Kind::EmptyId, i, r.id, "empty id"});
    } else if (auto [it, inserted] = seen.emplace(r.id, i); !inserted) {
      report.issues.push_back({ValidationIssue::Kind::DuplicateId, i, r.id,
                               "duplicate of index " + std::to_string(it->second)});
    }
    if (normalize_text(r.text).empty())
      report.issues.push_back({ValidationIssue::Kind::EmptyText, i, r.id, "empty text"});
    if (r.cls.kind == RequirementClassKind::Other)
      report.issues.push_back({ValidationIssue::Kind::UnknownClass, i, r.id,
                               "unknown class label '" + r.cls.other_label + "'"});
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

template <typename T>
T field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw Error(ErrorCode::Parse, std::string("missing field '") + name + "'");
  try {
    return it->template get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad field '") + name + "': " + e.what());
  }
}

template <typename T>
T field_or(const json& j, const char* name, T fallback) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return fallback;
  return field<T>(j, name);
}

}  // namespace

json to_json(const Requirement& r) {
  json j;
  j["id"] = r.id;
  j["text"] = r.text;
  j["class"] = r.cls.label();
  j["source_project"] = r.source_project ? json(*r.source_project) : json(nullptr);
  j["author_kind"] = r.author_kind.label();
  return j;
}

Requirement requirement_from_json(const json& j) {
  Requirement r;
  r.id = field<std::string>(j, "id");
  r.text = normalize_text(field<std::string>(j, "text"));
  r.cls = RequirementClass::parse(field_or<std::string>(j, "class", "Functional"));
  if (auto it = j.find("source_project"); it != j.end() && !it->is_null())
    r.source_project = it->get<std::string>();
  r.author_kind = AuthorKind::parse(field_or<std::string>(j, "author_kind", "human"));
  return r;
}

json to_json(const InstructRecord& r) {
  json j;
  j["record_id"] = r.record_id;
  j["REQID_ex"] = r.req_ids;
  j["completion"] = r.completion;
  j["instructions"] = r.instruction;
  j["class"] = r.class_label;
  j["task"] = to_string(r.task);
  j["text"] = r.rendered_text;
  j["template"] = to_string(r.tmpl);
  j["split"] = to_string(r.split);
  return j;
}

InstructRecord instruct_record_from_json(const json& j) {
  InstructRecord r;
  r.record_id = field<std::string>(j, "record_id");
  r.req_ids = field<std::vector<std::string>>(j, "REQID_ex");
  r.completion = field<std::string>(j, "completion");
  r.instruction = field<std::string>(j, "instructions");
  r.class_label = field_or<std::string>(j, "class", "");
  r.task = parse_task(field<std::string>(j, "task"));
  r.rendered_text = field_or<std::string>(j, "text", "");
  r.tmpl = parse_template(field_or<std::string>(j, "template", "context_first"));
  r.split = parse_split(field_or<std::string>(j, "split", "unassigned"));
  return r;
}

json to_json(const GenerationPair& p) {
  return json{{"record_id", p.record_id},
              {"reference", p.reference},
              {"candidate", p.candidate},
              {"model_id", p.model_id}};
}

GenerationPair generation_pair_from_json(const json& j) {
  GenerationPair p{field<std::string>(j, "record_id"), field<std::string>(j, "reference"),
                   field<std::string>(j, "candidate"), field_or<std::string>(j, "model_id", "")};
  if (normalize_text(p.reference).empty() || normalize_text(p.candidate).empty())
    throw Error(ErrorCode::Validation, "pair '" + p.record_id + "' has an empty reference or candidate");
  return p;
}

std::vector<json> parse_jsonl(std::string_view text) {
  std::vector<json> rows;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    if (!normalize_text(line).empty()) {
      try {
        rows.push_back(json::parse(line));
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return rows;
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_jsonl(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::string dump_jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void write_jsonl(const std::string& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write: " + path);
  out << dump_jsonl(rows);
}

std::vector<Requirement> read_corpus(const std::string& path) {
  std::vector<Requirement> corpus;
  for (const auto& j : read_jsonl(path)) corpus.push_back(requirement_from_json(j));
  return corpus;
}

void write_corpus(const std::string& path, const std::vector<Requirement>& corpus) {
  std::vector<json> rows;
  for (const auto& r : corpus) rows.push_back(to_json(r));
  write_jsonl(path, rows);
}

InstructDataset read_dataset(const std::string& path) {
  InstructDataset ds;
  for (const auto& j : read_jsonl(path)) ds.records.push_back(instruct_record_from_json(j));
  return ds;
}

void write_dataset(const std::string& path, const InstructDataset& ds) {
  std::vector<json> rows;
  for (const auto& r : ds.records) rows.push_back(to_json(r));
  write_jsonl(path, rows);
}

std::vector<GenerationPair> read_pairs(const std::string& path) {
  std::vector<GenerationPair> pairs;
  for (const auto& j : read_jsonl(path)) pairs.push_back(generation_pair_from_json(j));
  return pairs;
}

void write_pairs(const std::string& path, const std::vector<GenerationPair>& pairs) {
  std::vector<json> rows;
  for (const auto& p : pairs) rows.push_back(to_json(p));
  write_jsonl(path, rows);
}

}  // namespace reqforge
