#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "reqforge/domain.hpp"
#include "reqforge/error.hpp"

namespace reqforge::study {

enum class StudyTask { BenchmarkA, BlindCompareB, BlindPairC, InContextD };

std::string to_string(StudyTask t);
StudyTask parse_study_task(const std::string& s);

enum class Variable { PA, WSC, SKC, CRS, IMR, EOC };

std::string to_string(Variable v);
Variable parse_variable(const std::string& s);
/// Variables rated in each task, in hypothesis order.
std::vector<Variable> task_variables(StudyTask t);

struct Item {
  std::string item_id;
  std::vector<std::string> display_texts;
  std::optional<std::string> context;
  std::optional<std::string> group;  // pair block or project; never authorship

  bool operator==(const Item&) const = default;
};

/// Sealed mapping from a presented item to its true source.
struct KeyEntry {
  std::string item_id;
  std::string author;     // group label, e.g. "ReqBrain", "Baseline", "Human"
  std::string source_id;  // record id of the originating text
  std::string pair_id;    // BlindPairC: shared by both items of a pair
  bool sealed = true;

  bool operator==(const KeyEntry&) const = default;
};

struct BlindKey {
  std::string study_id;
  // First label is the x sample of two-group analyses.
  std::vector<std::string> group_order;
  std::vector<KeyEntry> entries;

  const KeyEntry* find(const std::string& item_id) const;
};

struct StudyPacket {
  std::string study_id;
  StudyTask task = StudyTask::BlindCompareB;
  std::vector<Item> items;  // sealed shuffle order
  std::vector<std::string> raters;  // allow-list; empty admits anyone

  bool rater_allowed(const std::string& rater) const;
  const Item* find(const std::string& item_id) const;
};

struct BuiltStudy {
  StudyPacket packet;
  BlindKey key;
};

/// Text with its originating record id.
struct SourceText {
  std::string id;
  std::string text;
};

/// Task B: two model outputs mixed and shuffled. Labels name the groups in
/// the key only.
BuiltStudy build_blind_compare(const std::string& study_id, const std::vector<SourceText>& a_outputs,
                               const std::vector<SourceText>& b_outputs, std::uint64_t seed,
                               const std::string& label_a = "ReqBrain", const std::string& label_b = "Baseline");

/// Task C: generated/reference pairs presented as adjacent two-item blocks,
/// block order and within-block order both shuffled. Throws
/// Error(LengthMismatch) when the lists are not aligned by id.
BuiltStudy build_blind_pair(const std::string& study_id, const std::vector<SourceText>& generated,
                            const std::vector<SourceText>& references, std::uint64_t seed,
                            const std::string& generated_label = "ReqBrain",
                            const std::string& reference_label = "Human");

struct ProjectPacket {
  std::string project;
  std::string instructions;
  std::vector<std::string> generated;
};

/// Task D: generated requirements shown with their project context. Nothing
/// is concealed.
BuiltStudy build_in_context(const std::string& study_id, const std::vector<ProjectPacket>& projects,
                            const std::string& label = "ReqBrain");

/// Task A: reference and candidate side by side, for optional manual review.
BuiltStudy build_benchmark(const std::string& study_id, const std::vector<GenerationPair>& pairs);

// ---------------------------------------------------------------------------
// Responses
// ---------------------------------------------------------------------------

struct ResponseRecord {
  std::string study_id;
  std::string item_id;
  std::string rater_id;
  Variable variable = Variable::PA;
  std::variant<std::string, int> value;  // "Human"/"AI" for PA, 1..5 otherwise
  std::string timestamp;

  /// Throws Error(DomainViolation) if the value is outside the variable's domain.
  void check_domain() const;
};

json to_json(const ResponseRecord& r);
ResponseRecord response_from_json(const json& j);

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

struct AnalysisOptions {
  std::uint64_t seed = 0;
  std::size_t resamples = 10000;
  double median = 3.0;  // Likert midpoint for task D
};

/// Runs the task's hypothesis tests and adjusts each task's family with Holm.
/// Blind tasks require `key`; task D may pass nullptr.
json analyze(const StudyPacket& packet, const BlindKey* key, const std::vector<ResponseRecord>& responses,
             const AnalysisOptions& opts = {});

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

json to_json(const Item& i);
json to_json(const KeyEntry& e);

void write_packet(const std::filesystem::path& file, const StudyPacket& packet);
StudyPacket read_packet(const std::filesystem::path& file);
void write_key(const std::filesystem::path& file, const BlindKey& key);
BlindKey read_key(const std::filesystem::path& file);

/// One directory per study: packet.jsonl, blind_key.jsonl (mode 0600),
/// responses.jsonl (append-only) and analysis.json.
class StudyStore {
 public:
  explicit StudyStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  void create(const BuiltStudy& study);
  bool exists(const std::string& study_id) const;
  StudyPacket packet(const std::string& study_id) const;
  /// Throws Error(MissingBlindKey) if the key file is absent.
  BlindKey key(const std::string& study_id) const;

  /// Validates and appends. Throws DomainViolation, DuplicateResponse or
  /// UnknownStudy.
  void record_response(ResponseRecord r);
  /// Snapshot of the study's log.
  std::shared_ptr<const std::vector<ResponseRecord>> responses(const std::string& study_id) const;

  /// Analyzes and writes analysis.json.
  json analyze(const std::string& study_id, const AnalysisOptions& opts = {}) const;

 private:
  struct Log {
    std::mutex write_mu;
    mutable std::mutex snapshot_mu;
    std::shared_ptr<const std::vector<ResponseRecord>> records = std::make_shared<std::vector<ResponseRecord>>();
    std::set<std::string> keys;
    StudyPacket packet;
  };

  Log& log_for(const std::string& study_id) const;
  std::filesystem::path dir(const std::string& study_id) const;

  std::filesystem::path root_;
  mutable std::mutex logs_mu_;
  mutable std::map<std::string, std::unique_ptr<Log>> logs_;
};

}  // namespace reqforge::study
