#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reqforge/domain.hpp"

namespace reqforge::lint {

/// Zero-based, end-exclusive character (code point) span.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const Span&) const = default;
};

enum class Keyword { Shall, Should, May, Will };

std::string to_string(Keyword k);

struct KeywordMatch {
  Keyword keyword;
  Span span;
  bool operator==(const KeywordMatch&) const = default;
};

enum class Verdict { CompliantSyntax1, CompliantSyntax2, NonCompliant };

std::string to_string(Verdict v);

struct ComplianceReport {
  std::string req_id;
  std::optional<KeywordMatch> keyword;
  std::optional<Span> condition;
  std::optional<Span> subject;
  std::optional<Span> action;
  std::optional<Span> constraint;
  Verdict verdict = Verdict::NonCompliant;
  std::vector<std::string> reasons;     // non-empty iff NonCompliant
  std::vector<std::string> advisories;  // informational

  bool compliant() const { return verdict != Verdict::NonCompliant; }
  bool operator==(const ComplianceReport&) const = default;
};

/// Trigger vocabularies for segmentation. All entries are matched
/// case-insensitively on word boundaries.
struct Lexicon {
  std::vector<std::string> keywords;  // subset of shall/should/may/will
  std::vector<std::string> condition_openers;
  std::vector<std::string> constraint_markers;
  std::vector<std::string> units;  // suffixes for the number+unit constraint pattern

  static const Lexicon& builtin();
  /// Keys present in `j` replace the builtin lists; absent keys keep them.
  static Lexicon from_json(const json& j);
  static Lexicon load(const std::string& path);
};

class Linter {
 public:
  Linter() : Linter(Lexicon::builtin()) {}
  explicit Linter(Lexicon lexicon);

  ComplianceReport lint(const Requirement& req) const;
  ComplianceReport lint_text(std::string_view text) const;

 private:
  Lexicon lexicon_;
};

struct BatchSummary {
  std::size_t total = 0;
  std::size_t compliant = 0;
  std::size_t syntax1 = 0;
  std::size_t syntax2 = 0;
  std::map<std::string, std::size_t> keyword_histogram;  // keyword -> count
};

struct BatchResult {
  std::vector<ComplianceReport> reports;
  BatchSummary summary;
};

BatchResult lint_batch(const Linter& linter, const std::vector<Requirement>& corpus);

/// Extracts the characters covered by `span` from UTF-8 `text`.
std::string slice(std::string_view text, Span span);

json to_json(const ComplianceReport& r);
json to_json(const BatchSummary& s);

}  // namespace reqforge::lint
