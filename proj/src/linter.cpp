#include "reqforge/linter.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "reqforge/error.hpp"

namespace reqforge::lint {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Byte-offset span; converted to characters when the report is assembled.
struct ByteSpan {
  std::size_t begin;
  std::size_t end;
};

// Finds `phrase` in the lowered text at or after `from`, respecting word
// boundaries on both sides. Phrases may contain single spaces, which match
// any run of whitespace.
std::optional<ByteSpan> find_phrase(const std::string& lowered, std::string_view phrase,
                                    std::size_t from, std::size_t limit,
                                    std::size_t last_start = std::string::npos) {
  limit = std::min(limit, lowered.size());
  last_start = std::min(last_start, limit);
  for (std::size_t start = from; start < last_start; ++start) {
    if (start > 0 && is_word_byte(lowered[start - 1])) continue;
    std::size_t i = start, k = 0;
    while (k < phrase.size() && i < limit) {
      if (phrase[k] == ' ') {
        if (!is_space(lowered[i])) break;
        while (i < limit && is_space(lowered[i])) ++i;
        ++k;
      } else if (lowered[i] == phrase[k]) {
        ++i;
        ++k;
      } else {
        break;
      }
    }
    if (k != phrase.size()) continue;
    // Phrases ending in punctuation (e.g. "%") need no trailing boundary.
    bool tail_is_word = is_word_byte(static_cast<unsigned char>(phrase.back()));
    if (tail_is_word && i < lowered.size() && is_word_byte(lowered[i])) continue;
    return ByteSpan{start, i};
  }
  return std::nullopt;
}

// Earliest digit-run followed by a unit from the lexicon.
std::optional<std::size_t> find_number_unit(const std::string& lowered,
                                            const std::vector<std::string>& units,
                                            std::size_t from, std::size_t limit) {
  for (std::size_t i = from; i < limit; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(lowered[i]))) continue;
    if (i > 0 && is_word_byte(lowered[i - 1]) && !std::isdigit(static_cast<unsigned char>(lowered[i - 1])))
      continue;
    std::size_t j = i;
    while (j < limit && (std::isdigit(static_cast<unsigned char>(lowered[j])) || lowered[j] == '.' ||
                         lowered[j] == ','))
      ++j;
    std::size_t k = j;
    while (k < limit && lowered[k] == ' ') ++k;
    for (const auto& u : units) {
      if (lowered.compare(k, u.size(), u) != 0) continue;
      std::size_t after = k + u.size();
      bool tail_is_word = is_word_byte(static_cast<unsigned char>(u.back()));
      if (tail_is_word && after < lowered.size() && is_word_byte(lowered[after])) continue;
      if (k == j && tail_is_word && u.size() <= 1) continue;  // "3s" style is fine, "3x" is not a unit
      return i;
    }
    i = j;
  }
  return std::nullopt;
}

ByteSpan trim(std::string_view text, ByteSpan s) {
  while (s.begin < s.end && is_space(text[s.begin])) ++s.begin;
  while (s.end > s.begin && (is_space(text[s.end - 1]) || text[s.end - 1] == '.' ||
                             text[s.end - 1] == ';' || text[s.end - 1] == '!'))
    --s.end;
  return s;
}

Keyword keyword_from(std::string_view word) {
  if (word == "shall") return Keyword::Shall;
  if (word == "should") return Keyword::Should;
  if (word == "may") return Keyword::May;
  return Keyword::Will;
}

std::vector<std::string> string_list(const json& j, const char* key, const std::vector<std::string>& fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_array()) throw Error(ErrorCode::Parse, std::string("lexicon key '") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& v : *it) out.push_back(ascii_lower(v.get<std::string>()));
  return out;
}

}  // namespace

std::string to_string(Keyword k) {
  switch (k) {
    case Keyword::Shall: return "shall";
    case Keyword::Should: return "should";
    case Keyword::May: return "may";
    case Keyword::Will: return "will";
  }
  return {};
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::CompliantSyntax1: return "CompliantSyntax1";
    case Verdict::CompliantSyntax2: return "CompliantSyntax2";
    case Verdict::NonCompliant: return "NonCompliant";
  }
  return {};
}

const Lexicon& Lexicon::builtin() {
  // Mirrors data/lexicon.json.
  static const Lexicon lex{
      {"shall", "should", "may", "will"},
      {"when", "if", "while", "where", "once", "after", "before", "upon", "in case"},
      {"within", "in under", "at least", "at most", "no more than", "per", "via", "according to",
       "in compliance with", "using", "by"},
      {"ms", "milliseconds", "millisecond", "s", "sec", "seconds", "second", "min", "minutes", "minute",
       "h", "hours", "hour", "days", "day", "weeks", "week", "%", "percent", "mb", "gb", "kb", "tb",
       "users", "requests", "transactions", "times", "characters", "digits", "clicks"},
  };
  return lex;
}

Lexicon Lexicon::from_json(const json& j) {
  const auto& base = builtin();
  Lexicon lex{string_list(j, "keywords", base.keywords),
              string_list(j, "condition_openers", base.condition_openers),
              string_list(j, "constraint_markers", base.constraint_markers),
              string_list(j, "units", base.units)};
  for (const auto& k : lex.keywords) {
    if (k != "shall" && k != "should" && k != "may" && k != "will")
      throw Error(ErrorCode::Parse, "unsupported signaling keyword '" + k + "'");
  }
  return lex;
}

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + path);
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

Linter::Linter(Lexicon lexicon) : lexicon_(std::move(lexicon)) {
  // Longer phrases first so "in under" wins over a hypothetical "in".
  auto by_len = [](const std::string& a, const std::string& b) { return a.size() > b.size(); };
  std::stable_sort(lexicon_.condition_openers.begin(), lexicon_.condition_openers.end(), by_len);
  std::stable_sort(lexicon_.units.begin(), lexicon_.units.end(), by_len);
}

ComplianceReport Linter::lint(const Requirement& req) const {
  auto report = lint_text(req.text);
  report.req_id = req.id;
  return report;
}

ComplianceReport Linter::lint_text(std::string_view raw) const {
  // Byte offset -> character offset for span conversion.
  std::vector<std::size_t> char_index(raw.size() + 1, 0);
  std::size_t chars = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    char_index[i] = chars;
    if ((static_cast<unsigned char>(raw[i]) & 0xC0) != 0x80) char_index[i] = chars++;
  }
  char_index[raw.size()] = chars;
  auto to_span = [&](ByteSpan b) { return Span{char_index[b.begin], char_index[b.end]}; };

  ComplianceReport report;
  const std::string lowered = ascii_lower(raw);
  const ByteSpan whole = trim(raw, {0, raw.size()});

  // Optional leading condition, closed by the first comma.
  std::size_t body_start = whole.begin;
  std::optional<ByteSpan> condition;
  for (const auto& opener : lexicon_.condition_openers) {
    auto m = find_phrase(lowered, opener, whole.begin, whole.end, whole.begin + 1);
    if (!m) continue;
    auto comma = raw.find(',', m->end);
    if (comma == std::string_view::npos || comma >= whole.end) {
      report.advisories.push_back("condition opener '" + opener + "' has no closing comma");
      break;
    }
    condition = trim(raw, {whole.begin, comma});
    body_start = comma + 1;
    break;
  }

  // First signaling keyword after the condition.
  std::optional<ByteSpan> kw;
  std::string kw_word;
  std::vector<std::string> extra;
  for (const auto& k : lexicon_.keywords) {
    std::size_t from = body_start;
    while (auto m = find_phrase(lowered, k, from, whole.end)) {
      if (!kw || m->begin < kw->begin) {
        if (kw) extra.push_back(kw_word);
        kw = m;
        kw_word = k;
      } else {
        extra.push_back(k);
      }
      from = m->end;
    }
  }

  if (!kw) {
    report.verdict = Verdict::NonCompliant;
    report.reasons.push_back("no signaling keyword");
    if (condition) report.condition = to_span(*condition);
    return report;
  }
  report.keyword = KeywordMatch{keyword_from(kw_word), to_span(*kw)};
  if (condition) report.condition = to_span(*condition);
  if (!extra.empty()) {
    std::sort(extra.begin(), extra.end());
    extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
    std::string list;
    for (const auto& e : extra) list += (list.empty() ? "" : ", ") + e;
    report.advisories.push_back("additional signaling keywords: " + list);
  }

  ByteSpan subject = trim(raw, {body_start, kw->begin});

  // Constraint: earliest marker after the first action token.
  std::size_t action_begin = kw->end;
  while (action_begin < whole.end && is_space(raw[action_begin])) ++action_begin;
  std::size_t first_token_end = action_begin;
  while (first_token_end < whole.end && !is_space(raw[first_token_end])) ++first_token_end;

  std::optional<std::size_t> constraint_begin;
  for (const auto& marker : lexicon_.constraint_markers) {
    if (auto m = find_phrase(lowered, marker, first_token_end, whole.end)) {
      if (!constraint_begin || m->begin < *constraint_begin) constraint_begin = m->begin;
    }
  }
  if (auto n = find_number_unit(lowered, lexicon_.units, first_token_end, whole.end)) {
    if (!constraint_begin || *n < *constraint_begin) constraint_begin = *n;
  }

  ByteSpan action = trim(raw, {action_begin, constraint_begin.value_or(whole.end)});
  std::optional<ByteSpan> constraint;
  if (constraint_begin) constraint = trim(raw, {*constraint_begin, whole.end});

  if (subject.begin < subject.end) report.subject = to_span(subject);
  if (action.begin < action.end) report.action = to_span(action);
  if (constraint && constraint->begin < constraint->end) report.constraint = to_span(*constraint);

  if (whole.end > whole.begin && raw[whole.end - 1] == '?')
    report.reasons.push_back("interrogative sentence: not a requirement statement");
  if (!report.subject) report.reasons.push_back("missing subject before signaling keyword");
  if (!report.action) report.reasons.push_back("missing action after signaling keyword");

  if (!report.reasons.empty()) {
    report.verdict = Verdict::NonCompliant;
    return report;
  }
  report.verdict = report.condition ? Verdict::CompliantSyntax2 : Verdict::CompliantSyntax1;
  if (!report.constraint) report.advisories.push_back("no explicit constraint");
  return report;
}

BatchResult lint_batch(const Linter& linter, const std::vector<Requirement>& corpus) {
  BatchResult out;
  out.reports.reserve(corpus.size());
  for (const auto& r : corpus) out.reports.push_back(linter.lint(r));
  out.summary.total = out.reports.size();
  for (const auto& r : out.reports) {
    if (r.keyword) ++out.summary.keyword_histogram[to_string(r.keyword->keyword)];
    if (r.verdict == Verdict::CompliantSyntax1) ++out.summary.syntax1;
    if (r.verdict == Verdict::CompliantSyntax2) ++out.summary.syntax2;
  }
  out.summary.compliant = out.summary.syntax1 + out.summary.syntax2;
  return out;
}

std::string slice(std::string_view text, Span span) {
  std::string out;
  std::size_t ch = 0;
  bool started = false;
  for (char c : text) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) {
      if (started) ++ch;
      started = true;
    }
    if (ch >= span.begin && ch < span.end) out += c;
  }
  return out;
}

namespace {

json span_json(const std::optional<Span>& s) {
  if (!s) return nullptr;
  return json::array({s->begin, s->end});
}

}  // namespace

json to_json(const ComplianceReport& r) {
  json j;
  j["id"] = r.req_id;
  if (r.keyword) {
    j["keyword"] = {{"value", to_string(r.keyword->keyword)},
                    {"span", json::array({r.keyword->span.begin, r.keyword->span.end})}};
  } else {
    j["keyword"] = nullptr;
  }
  j["condition_span"] = span_json(r.condition);
  j["subject_span"] = span_json(r.subject);
  j["action_span"] = span_json(r.action);
  j["constraint_span"] = span_json(r.constraint);
  j["verdict"] = to_string(r.verdict);
  j["reasons"] = r.reasons;
  j["advisories"] = r.advisories;
  return j;
}

json to_json(const BatchSummary& s) {
  return json{{"total", s.total},
              {"compliant", s.compliant},
              {"syntax1", s.syntax1},
              {"syntax2", s.syntax2},
              {"keywords", s.keyword_histogram}};
}

}  // namespace reqforge::lint
