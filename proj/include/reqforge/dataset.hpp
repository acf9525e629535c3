#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reqforge/domain.hpp"

namespace reqforge::dataset {

/// Fixed instruction wording. Defaults follow the training-pair examples;
/// `load` lets a team replace any of them from a JSON file.
struct Stems {
  std::string how_to =
      "Write a requirement in compliance with ISO 29148 recommendations for a well-formed requirement.";
  // {class} and {abbr} are substituted, e.g. "usability" and "US".
  std::string re_types = "Can you give me a {class} ({abbr}) requirement?";
  std::string missing_context = "I want to build software for {project}.";
  std::string missing_intro = "The requirements we have come up with are listed here:";
  std::string missing_question = "Can you help me complete the missing software requirements?";
  std::string missing_header = "Here are some more software requirements your software might need:";

  static Stems load(const std::string& path);
};

/// Instruction stem for a task. Missing has no per-requirement stem.
std::string instruction_stem(const Stems& stems, TaskCategory task, const RequirementClass& cls);

/// Builds a HowTo or ReTypes record for one requirement.
/// Throws Error(EmptyContext) when `context` is blank.
InstructRecord make_instruction(const Requirement& req, std::string_view context, Template tmpl,
                                TaskCategory task, const Stems& stems = {});

struct MissingPartition {
  std::vector<Requirement> prompt;
  std::vector<Requirement> completion;
};

/// Seeded split of one project's requirements into a prompt group and a
/// held-out group. Both groups keep input order.
MissingPartition partition_missing(const std::vector<Requirement>& project_reqs, double prompt_fraction,
                                   std::uint64_t seed);

InstructRecord build_missing_task(const std::vector<Requirement>& project_reqs, double prompt_fraction,
                                  std::uint64_t seed, std::optional<std::string> context = std::nullopt,
                                  const Stems& stems = {});

/// Tags every record Train or Eval, stratified by task.
InstructDataset stratified_split(const InstructDataset& ds, double train_ratio, std::uint64_t seed);

/// Train count for a stratum: round-half-up, leaving at least one eval record
/// when the stratum has two or more.
std::size_t stratum_train_count(std::size_t stratum_size, double train_ratio);

std::string render_training_text(std::string_view instruction, std::string_view completion);
std::string render_training_text(const InstructRecord& rec);
/// Inverse of render_training_text. Throws Error(Parse) on a malformed text.
std::pair<std::string, std::string> parse_training_text(std::string_view text);

/// One entry of a build plan (JSONL). Single-requirement tasks name a
/// `req_id`; Missing tasks name a `project`.
struct PlanEntry {
  TaskCategory task = TaskCategory::HowTo;
  Template tmpl = Template::ContextFirst;
  std::string req_id;
  std::string project;
  std::string context;
  double fraction = 0.5;
};

PlanEntry plan_entry_from_json(const json& j);

/// Executes a plan against a corpus. Record ids are unique by construction.
InstructDataset build_dataset(const std::vector<Requirement>& corpus, const std::vector<PlanEntry>& plan,
                              std::uint64_t seed, const Stems& stems = {});

}  // namespace reqforge::dataset
