#include "reqforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "reqforge/error.hpp"
#include "reqforge/random.hpp"

namespace reqforge::dataset {

namespace {

constexpr std::string_view kInstructionMarker = "### Instruction:\n";
constexpr std::string_view kResponseMarker = "\n### Response:\n";

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string record_id_for(TaskCategory task, Template tmpl, std::string_view instruction,
                          std::string_view completion) {
  std::uint64_t h = fnv1a(to_string(task));
  h = fnv1a("\x1f", h);
  h = fnv1a(to_string(tmpl), h);
  h = fnv1a("\x1f", h);
  h = fnv1a(instruction, h);
  h = fnv1a("\x1f", h);
  h = fnv1a(completion, h);
  const char* prefix = task == TaskCategory::HowTo ? "howto" : task == TaskCategory::ReTypes ? "retypes" : "missing";
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(prefix) + "-" + buf;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
}

std::pair<std::string, std::string> class_words(const RequirementClass& cls) {
  switch (cls.kind) {
    case RequirementClassKind::Functional: return {"functional", "F"};
    case RequirementClassKind::Usability: return {"usability", "US"};
    case RequirementClassKind::Security: return {"security", "SE"};
    case RequirementClassKind::Performance: return {"performance", "PE"};
    case RequirementClassKind::Other: break;
  }
  std::string lowered = cls.other_label;
  for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::string abbr;
  for (char c : cls.other_label)
    if (std::isupper(static_cast<unsigned char>(c))) abbr += c;
  if (abbr.empty()) abbr = cls.other_label.substr(0, 2);
  return {lowered, abbr};
}

std::string join_parts(std::string_view first, std::string_view second) {
  std::string out(first);
  out += ' ';
  out += second;
  return out;
}

}  // namespace

Stems Stems::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
  Stems s;
  auto set = [&](const char* key, std::string& dst) {
    if (auto it = j.find(key); it != j.end()) dst = it->get<std::string>();
  };
  set("how_to", s.how_to);
  set("re_types", s.re_types);
  set("missing_context", s.missing_context);
  set("missing_intro", s.missing_intro);
  set("missing_question", s.missing_question);
  set("missing_header", s.missing_header);
  return s;
}

std::string instruction_stem(const Stems& stems, TaskCategory task, const RequirementClass& cls) {
  switch (task) {
    case TaskCategory::HowTo: return stems.how_to;
    case TaskCategory::ReTypes: {
      auto [word, abbr] = class_words(cls);
      std::string out = stems.re_types;
      replace_all(out, "{class}", word);
      replace_all(out, "{abbr}", abbr);
      return out;
    }
    case TaskCategory::Missing: break;
  }
  throw Error(ErrorCode::InvalidArgument, "Missing records are built with build_missing_task");
}

InstructRecord make_instruction(const Requirement& req, std::string_view context, Template tmpl,
                                TaskCategory task, const Stems& stems) {
  const std::string ctx = normalize_text(context);
  if (ctx.empty()) throw Error(ErrorCode::EmptyContext, "context for requirement '" + req.id + "' is empty");
  if (normalize_text(req.text).empty())
    throw Error(ErrorCode::Validation, "requirement '" + req.id + "' has empty text");
  const std::string stem = instruction_stem(stems, task, req.cls);

  InstructRecord rec;
  rec.task = task;
  rec.tmpl = tmpl;
  rec.instruction = tmpl == Template::ContextFirst ? join_parts(ctx, stem) : join_parts(stem, ctx);
  rec.completion = normalize_text(req.text);
  rec.req_ids = {req.id};
  rec.class_label = req.cls.label();
  rec.record_id = record_id_for(task, tmpl, rec.instruction, rec.completion);
  rec.rendered_text = render_training_text(rec.instruction, rec.completion);
  return rec;
}

MissingPartition partition_missing(const std::vector<Requirement>& project_reqs, double prompt_fraction,
                                   std::uint64_t seed) {
  if (project_reqs.size() < 2)
    throw Error(ErrorCode::TooFewRequirements, "Missing task needs at least 2 requirements, got " +
                                                   std::to_string(project_reqs.size()));
  if (!(prompt_fraction > 0.0 && prompt_fraction < 1.0))
    throw Error(ErrorCode::InvalidArgument, "prompt fraction must lie in (0, 1)");
  const auto& project = project_reqs.front().source_project;
  for (const auto& r : project_reqs) {
    if (r.source_project != project)
      throw Error(ErrorCode::MixedProjects, "requirement '" + r.id + "' belongs to a different project");
  }

  const std::size_t n = project_reqs.size();
  auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * prompt_fraction + 0.5));
  k = std::clamp<std::size_t>(k, 1, n - 1);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<bool> in_prompt(n, false);
  for (std::size_t i = 0; i < k; ++i) in_prompt[order[i]] = true;

  MissingPartition part;
  for (std::size_t i = 0; i < n; ++i)
    (in_prompt[i] ? part.prompt : part.completion).push_back(project_reqs[i]);
  return part;
}

InstructRecord build_missing_task(const std::vector<Requirement>& project_reqs, double prompt_fraction,
                                  std::uint64_t seed, std::optional<std::string> context,
                                  const Stems& stems) {
  auto part = partition_missing(project_reqs, prompt_fraction, seed);

  std::string ctx;
  if (context && !normalize_text(*context).empty()) {
    ctx = normalize_text(*context);
  } else {
    ctx = stems.missing_context;
    replace_all(ctx, "{project}", project_reqs.front().source_project.value_or("this project"));
  }

  InstructRecord rec;
  rec.task = TaskCategory::Missing;
  rec.tmpl = Template::ContextFirst;
  rec.instruction = ctx + "\n" + stems.missing_intro + "\n";
  for (const auto& r : part.prompt) rec.instruction += " - " + normalize_text(r.text) + "\n";
  rec.instruction += stems.missing_question;

  rec.completion = stems.missing_header;
  std::size_t i = 1;
  for (const auto& r : part.completion) {
    rec.completion += "\n" + std::to_string(i++) + " - " + normalize_text(r.text);
    rec.req_ids.push_back(r.id);
  }
  rec.class_label = "";
  rec.record_id = record_id_for(rec.task, rec.tmpl, rec.instruction, rec.completion);
  rec.rendered_text = render_training_text(rec.instruction, rec.completion);
  return rec;
}

std::size_t stratum_train_count(std::size_t stratum_size, double train_ratio) {
  // The epsilon keeps exact products such as 5 * 0.8 from rounding down.
  auto train = static_cast<std::size_t>(std::floor(static_cast<double>(stratum_size) * train_ratio + 0.5 + 1e-9));
  train = std::min(train, stratum_size);
  if (stratum_size >= 2) train = std::min(train, stratum_size - 1);
  return train;
}

InstructDataset stratified_split(const InstructDataset& ds, double train_ratio, std::uint64_t seed) {
  if (ds.records.empty()) throw Error(ErrorCode::EmptyDataset, "cannot split an empty dataset");
  if (!(train_ratio > 0.0 && train_ratio < 1.0))
    throw Error(ErrorCode::InvalidArgument, "train ratio must lie in (0, 1)");

  InstructDataset out = ds;
  std::map<TaskCategory, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < out.records.size(); ++i) strata[out.records[i].task].push_back(i);

  Rng rng(seed);
  for (auto& [task, indices] : strata) {
    rng.shuffle(std::span<std::size_t>(indices));
    const std::size_t train = stratum_train_count(indices.size(), train_ratio);
    for (std::size_t k = 0; k < indices.size(); ++k)
      out.records[indices[k]].split = k < train ? SplitTag::Train : SplitTag::Eval;
  }
  return out;
}

std::string render_training_text(std::string_view instruction, std::string_view completion) {
  if (instruction.find(kResponseMarker) != std::string_view::npos)
    throw Error(ErrorCode::Validation, "instruction contains the response marker");
  std::string out(kInstructionMarker);
  out += instruction;
  out += kResponseMarker;
  out += completion;
  out += '\n';
  return out;
}

std::string render_training_text(const InstructRecord& rec) {
  return render_training_text(rec.instruction, rec.completion);
}

std::pair<std::string, std::string> parse_training_text(std::string_view text) {
  if (text.substr(0, kInstructionMarker.size()) != kInstructionMarker || text.empty() || text.back() != '\n')
    throw Error(ErrorCode::Parse, "training text does not start with the instruction marker");
  text.remove_prefix(kInstructionMarker.size());
  text.remove_suffix(1);
  // Instructions never contain the marker (render rejects them), so the
  // first occurrence is the separator.
  auto pos = text.find(kResponseMarker);
  if (pos == std::string_view::npos) throw Error(ErrorCode::Parse, "training text has no response marker");
  return {std::string(text.substr(0, pos)), std::string(text.substr(pos + kResponseMarker.size()))};
}

PlanEntry plan_entry_from_json(const json& j) {
  PlanEntry e;
  e.task = parse_task(j.at("task").get<std::string>());
  if (auto it = j.find("template"); it != j.end()) e.tmpl = parse_template(it->get<std::string>());
  if (auto it = j.find("req_id"); it != j.end()) e.req_id = it->get<std::string>();
  if (auto it = j.find("project"); it != j.end()) e.project = it->get<std::string>();
  if (auto it = j.find("context"); it != j.end()) e.context = it->get<std::string>();
  if (auto it = j.find("fraction"); it != j.end()) e.fraction = it->get<double>();
  return e;
}

InstructDataset build_dataset(const std::vector<Requirement>& corpus, const std::vector<PlanEntry>& plan,
                              std::uint64_t seed, const Stems& stems) {
  std::unordered_map<std::string, const Requirement*> by_id;
  for (const auto& r : corpus) by_id.emplace(r.id, &r);

  InstructDataset ds;
  std::set<std::string> used_ids;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& e = plan[i];
    InstructRecord rec;
    if (e.task == TaskCategory::Missing) {
      std::vector<Requirement> group;
      for (const auto& r : corpus)
        if (r.source_project && *r.source_project == e.project) group.push_back(r);
      // Per-entry seed so reordering the plan does not change other records.
      rec = build_missing_task(group, e.fraction, seed ^ fnv1a(e.project),
                               e.context.empty() ? std::nullopt : std::optional<std::string>(e.context), stems);
    } else {
      auto it = by_id.find(e.req_id);
      if (it == by_id.end())
        throw Error(ErrorCode::Validation, "plan entry " + std::to_string(i + 1) + " names unknown requirement '" +
                                               e.req_id + "'");
      rec = make_instruction(*it->second, e.context, e.tmpl, e.task, stems);
    }
    std::string base = rec.record_id;
    for (int suffix = 2; !used_ids.insert(rec.record_id).second; ++suffix)
      rec.record_id = base + "-" + std::to_string(suffix);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace reqforge::dataset
