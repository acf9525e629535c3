#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace reqforge {

using json = nlohmann::json;

// Requirement classes follow the relabeled PROMISE names. Anything else is
// carried verbatim in `other_label`.
enum class RequirementClassKind { Functional, Usability, Security, Performance, Other };

struct RequirementClass {
  RequirementClassKind kind = RequirementClassKind::Functional;
  std::string other_label;

  static RequirementClass parse(const std::string& label);
  std::string label() const;
  bool operator==(const RequirementClass&) const = default;
};

struct AuthorKind {
  bool human = true;
  std::string model_id;  // set iff !human

  static AuthorKind Human() { return {}; }
  static AuthorKind Model(std::string id) { return {false, std::move(id)}; }
  static AuthorKind parse(const std::string& s);
  std::string label() const;
  bool operator==(const AuthorKind&) const = default;
};

struct Requirement {
  std::string id;
  std::string text;
  RequirementClass cls;
  std::optional<std::string> source_project;
  AuthorKind author_kind;

  bool operator==(const Requirement&) const = default;
};

enum class TaskCategory { HowTo, ReTypes, Missing };
enum class Template { ContextFirst, InstructionFirst };
enum class SplitTag { Unassigned, Train, Eval };

std::string to_string(TaskCategory t);
std::string to_string(Template t);
std::string to_string(SplitTag t);
TaskCategory parse_task(const std::string& s);
Template parse_template(const std::string& s);
SplitTag parse_split(const std::string& s);

struct InstructRecord {
  std::string record_id;
  std::string instruction;  // x_i
  std::string completion;   // y_i
  std::vector<std::string> req_ids;
  TaskCategory task = TaskCategory::HowTo;
  Template tmpl = Template::ContextFirst;
  std::string rendered_text;
  // Informational; the class of record lives on the Requirement.
  std::string class_label;
  SplitTag split = SplitTag::Unassigned;

  bool operator==(const InstructRecord&) const = default;
};

struct InstructDataset {
  std::vector<InstructRecord> records;
};

struct GenerationPair {
  std::string record_id;
  std::string reference;
  std::string candidate;
  std::string model_id;

  bool operator==(const GenerationPair&) const = default;
};

/// Trims leading and trailing ASCII whitespace. Interior
/// whitespace and case are preserved.
std::string normalize_text(std::string_view text);

struct ValidationIssue {
  enum class Kind { DuplicateId, EmptyId, EmptyText, UnknownClass };
  Kind kind;
  std::size_t index;
  std::string id;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool valid() const;
  std::size_t count(ValidationIssue::Kind kind) const;
};

ValidationReport validate_corpus(const std::vector<Requirement>& corpus);

// JSON mapping. Field names are the on-disk corpus/dataset columns.
json to_json(const Requirement& r);
Requirement requirement_from_json(const json& j);
json to_json(const InstructRecord& r);
InstructRecord instruct_record_from_json(const json& j);
json to_json(const GenerationPair& p);
GenerationPair generation_pair_from_json(const json& j);

// JSONL helpers. Blank lines are skipped; a malformed line raises
// Error(Parse) naming the line number.
std::vector<json> read_jsonl(const std::string& path);
std::vector<json> parse_jsonl(std::string_view text);
void write_jsonl(const std::string& path, const std::vector<json>& rows);
std::string dump_jsonl(const std::vector<json>& rows);

std::vector<Requirement> read_corpus(const std::string& path);
void write_corpus(const std::string& path, const std::vector<Requirement>& corpus);
InstructDataset read_dataset(const std::string& path);
void write_dataset(const std::string& path, const InstructDataset& ds);
std::vector<GenerationPair> read_pairs(const std::string& path);
void write_pairs(const std::string& path, const std::vector<GenerationPair>& pairs);

}  // namespace reqforge
