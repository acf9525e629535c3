#include "reqforge/study.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "reqforge/random.hpp"
#include "reqforge/stats.hpp"

namespace reqforge::study {

namespace fs = std::filesystem;

std::string to_string(StudyTask t) {
  switch (t) {
    case StudyTask::BenchmarkA: return "A";
    case StudyTask::BlindCompareB: return "B";
    case StudyTask::BlindPairC: return "C";
    case StudyTask::InContextD: return "D";
  }
  return {};
}

StudyTask parse_study_task(const std::string& s) {
  if (s == "A" || s == "benchmark") return StudyTask::BenchmarkA;
  if (s == "B" || s == "blind_compare") return StudyTask::BlindCompareB;
  if (s == "C" || s == "blind_pair") return StudyTask::BlindPairC;
  if (s == "D" || s == "in_context") return StudyTask::InContextD;
  throw Error(ErrorCode::Parse, "unknown study task '" + s + "'");
}

std::string to_string(Variable v) {
  switch (v) {
    case Variable::PA: return "PA";
    case Variable::WSC: return "WSC";
    case Variable::SKC: return "SKC";
    case Variable::CRS: return "CRS";
    case Variable::IMR: return "IMR";
    case Variable::EOC: return "EOC";
  }
  return {};
}

Variable parse_variable(const std::string& s) {
  for (auto v : {Variable::PA, Variable::WSC, Variable::SKC, Variable::CRS, Variable::IMR, Variable::EOC})
    if (to_string(v) == s) return v;
  throw Error(ErrorCode::DomainViolation, "unknown variable '" + s + "'");
}

std::vector<Variable> task_variables(StudyTask t) {
  switch (t) {
    case StudyTask::BenchmarkA: return {};
    case StudyTask::BlindCompareB:
    case StudyTask::BlindPairC: return {Variable::PA, Variable::WSC, Variable::SKC};
    case StudyTask::InContextD: return {Variable::CRS, Variable::IMR, Variable::EOC};
  }
  return {};
}

const KeyEntry* BlindKey::find(const std::string& item_id) const {
  for (const auto& e : entries)
    if (e.item_id == item_id) return &e;
  return nullptr;
}

bool StudyPacket::rater_allowed(const std::string& rater) const {
  return raters.empty() || std::find(raters.begin(), raters.end(), rater) != raters.end();
}

const Item* StudyPacket::find(const std::string& item_id) const {
  for (const auto& i : items)
    if (i.item_id == item_id) return &i;
  return nullptr;
}

namespace {

void check_study_id(const std::string& id) {
  if (id.empty() || id.size() > 128) throw Error(ErrorCode::InvalidArgument, "study id must be 1..128 characters");
  for (unsigned char c : id)
    if (!std::isalnum(c) && c != '-' && c != '_')
      throw Error(ErrorCode::InvalidArgument, "study id may only contain letters, digits, '-' and '_'");
}

std::string item_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "item-%04zu", i + 1);
  return buf;
}

}  // namespace

BuiltStudy build_blind_compare(const std::string& study_id, const std::vector<SourceText>& a_outputs,
                               const std::vector<SourceText>& b_outputs, std::uint64_t seed,
                               const std::string& label_a, const std::string& label_b) {
  check_study_id(study_id);
  if (a_outputs.empty() || b_outputs.empty())
    throw Error(ErrorCode::InvalidArgument, "both output lists must be non-empty");
  struct Entry {
    const SourceText* src;
    const std::string* label;
  };
  std::vector<Entry> all;
  for (const auto& s : a_outputs) all.push_back({&s, &label_a});
  for (const auto& s : b_outputs) all.push_back({&s, &label_b});
  Rng rng(seed);
  rng.shuffle(std::span<Entry>(all));

  BuiltStudy out;
  out.packet.study_id = study_id;
  out.packet.task = StudyTask::BlindCompareB;
  out.key.study_id = study_id;
  out.key.group_order = {label_a, label_b};
  for (std::size_t i = 0; i < all.size(); ++i) {
    out.packet.items.push_back({item_id(i), {all[i].src->text}, std::nullopt, std::nullopt});
    out.key.entries.push_back({item_id(i), *all[i].label, all[i].src->id, "", true});
  }
  return out;
}

BuiltStudy build_blind_pair(const std::string& study_id, const std::vector<SourceText>& generated,
                            const std::vector<SourceText>& references, std::uint64_t seed,
                            const std::string& generated_label, const std::string& reference_label) {
  check_study_id(study_id);
  if (generated.size() != references.size())
    throw Error(ErrorCode::LengthMismatch, std::to_string(generated.size()) + " generated vs " +
                                               std::to_string(references.size()) + " references");
  if (generated.empty()) throw Error(ErrorCode::InvalidArgument, "no pairs to present");
  for (std::size_t i = 0; i < generated.size(); ++i)
    if (generated[i].id != references[i].id)
      throw Error(ErrorCode::LengthMismatch, "pair " + std::to_string(i + 1) + " is not aligned: '" + generated[i].id +
                                                 "' vs '" + references[i].id + "'");

  std::vector<std::size_t> blocks(generated.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(blocks));

  BuiltStudy out;
  out.packet.study_id = study_id;
  out.packet.task = StudyTask::BlindPairC;
  out.key.study_id = study_id;
  out.key.group_order = {reference_label, generated_label};
  std::size_t next = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::size_t k = blocks[b];
    const bool generated_first = rng.below(2) == 0;
    const std::string block = "pair-" + std::to_string(b + 1);
    const SourceText* first = generated_first ? &generated[k] : &references[k];
    const SourceText* second = generated_first ? &references[k] : &generated[k];
    const std::string& first_label = generated_first ? generated_label : reference_label;
    const std::string& second_label = generated_first ? reference_label : generated_label;
    for (auto [src, label] : {std::pair{first, &first_label}, std::pair{second, &second_label}}) {
      out.packet.items.push_back({item_id(next), {src->text}, std::nullopt, block});
      out.key.entries.push_back({item_id(next), *label, src->id, block, true});
      ++next;
    }
  }
  return out;
}

BuiltStudy build_in_context(const std::string& study_id, const std::vector<ProjectPacket>& projects,
                            const std::string& label) {
  check_study_id(study_id);
  if (projects.empty()) throw Error(ErrorCode::InvalidArgument, "no projects given");
  BuiltStudy out;
  out.packet.study_id = study_id;
  out.packet.task = StudyTask::InContextD;
  out.key.study_id = study_id;
  out.key.group_order = {label};
  std::size_t next = 0;
  for (const auto& p : projects) {
    if (normalize_text(p.instructions).empty())
      throw Error(ErrorCode::InvalidArgument, "project '" + p.project + "' has no instructions");
    if (p.generated.empty())
      throw Error(ErrorCode::InvalidArgument, "project '" + p.project + "' has no generated requirements");
    for (std::size_t g = 0; g < p.generated.size(); ++g) {
      out.packet.items.push_back({item_id(next), {p.generated[g]}, p.instructions, p.project});
      out.key.entries.push_back({item_id(next), label, p.project + "#" + std::to_string(g + 1), "", false});
      ++next;
    }
  }
  return out;
}

BuiltStudy build_benchmark(const std::string& study_id, const std::vector<GenerationPair>& pairs) {
  check_study_id(study_id);
  if (pairs.empty()) throw Error(ErrorCode::InvalidArgument, "no generation pairs");
  BuiltStudy out;
  out.packet.study_id = study_id;
  out.packet.task = StudyTask::BenchmarkA;
  out.key.study_id = study_id;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.packet.items.push_back({item_id(i), {pairs[i].reference, pairs[i].candidate}, std::nullopt, pairs[i].record_id});
    out.key.entries.push_back({item_id(i), pairs[i].model_id, pairs[i].record_id, "", false});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Responses
// ---------------------------------------------------------------------------

void ResponseRecord::check_domain() const {
  if (variable == Variable::PA) {
    const auto* s = std::get_if<std::string>(&value);
    if (!s || (*s != "Human" && *s != "AI"))
      throw Error(ErrorCode::DomainViolation, "PA takes \"Human\" or \"AI\"");
    return;
  }
  const auto* v = std::get_if<int>(&value);
  if (!v || *v < 1 || *v > 5)
    throw Error(ErrorCode::DomainViolation, to_string(variable) + " takes an integer rating 1..5");
}

json to_json(const ResponseRecord& r) {
  json j{{"study_id", r.study_id}, {"item_id", r.item_id}, {"rater_id", r.rater_id},
         {"variable", to_string(r.variable)}, {"timestamp", r.timestamp}};
  std::visit([&](const auto& v) { j["value"] = v; }, r.value);
  return j;
}

ResponseRecord response_from_json(const json& j) {
  ResponseRecord r;
  try {
    r.study_id = j.value("study_id", "");
    r.item_id = j.at("item_id").get<std::string>();
    r.rater_id = j.at("rater_id").get<std::string>();
    r.variable = parse_variable(j.at("variable").get<std::string>());
    const auto& v = j.at("value");
    if (v.is_string()) r.value = v.get<std::string>();
    else if (v.is_number_integer()) r.value = v.get<int>();
    else throw Error(ErrorCode::DomainViolation, "value must be a string or an integer");
    r.timestamp = j.value("timestamp", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("bad response record: ") + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Analysis
// ---------------------------------------------------------------------------

namespace {

std::string hypothesis(StudyTask task, Variable v) {
  if (task == StudyTask::BlindCompareB) return v == Variable::PA ? "H1" : v == Variable::WSC ? "H3" : "H4";
  if (task == StudyTask::BlindPairC) return v == Variable::PA ? "H2" : v == Variable::WSC ? "H5" : "H6";
  return v == Variable::CRS ? "H7" : v == Variable::IMR ? "H8" : "H9";
}

json describe_json(const std::vector<double>& values) {
  if (values.empty()) return nullptr;
  return stats::to_json(stats::describe(values));
}

struct GroupedResponses {
  // group label -> values
  std::map<std::string, std::vector<double>> likert;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> pa;  // (Human, AI) counts
  std::size_t count = 0;
};

}  // namespace

json analyze(const StudyPacket& packet, const BlindKey* key, const std::vector<ResponseRecord>& responses,
             const AnalysisOptions& opts) {
  const auto task = packet.task;
  if (task == StudyTask::BenchmarkA)
    throw Error(ErrorCode::InvalidArgument, "task A is scored automatically; there is no rating analysis");
  const bool blind = task == StudyTask::BlindCompareB || task == StudyTask::BlindPairC;
  if (blind && !key) throw Error(ErrorCode::MissingBlindKey, "blind study '" + packet.study_id + "' needs its key");

  auto group_of = [&](const std::string& item) -> std::string {
    if (!key) return "ReqBrain";
    const auto* e = key->find(item);
    if (!e) throw Error(ErrorCode::Validation, "item '" + item + "' is not in the blind key");
    return e->author;
  };

  std::map<Variable, GroupedResponses> by_var;
  for (const auto& r : responses) {
    if (r.study_id != packet.study_id || !packet.find(r.item_id)) continue;
    auto& g = by_var[r.variable];
    ++g.count;
    const auto group = group_of(r.item_id);
    if (r.variable == Variable::PA) {
      auto& c = g.pa[group];
      (std::get<std::string>(r.value) == "Human" ? c.first : c.second) += 1;
    } else {
      g.likert[group].push_back(static_cast<double>(std::get<int>(r.value)));
    }
  }

  const auto vars = task_variables(task);
  for (auto v : vars)
    if (by_var[v].count == 0)
      throw Error(ErrorCode::MissingResponses, "no responses for variable " + to_string(v));

  json report;
  report["study_id"] = packet.study_id;
  report["task"] = to_string(task);
  report["family"] = "Holm-Bonferroni over " + to_string(task) + "-task hypotheses";
  report["seed"] = opts.seed;
  json tests = json::array();
  std::vector<double> family_p;
  std::vector<std::size_t> family_index;

  const std::string x_label = key && !key->group_order.empty() ? key->group_order[0] : "ReqBrain";
  const std::string y_label = key && key->group_order.size() > 1 ? key->group_order[1] : "";

  for (auto v : vars) {
    auto& g = by_var[v];
    json entry{{"variable", to_string(v)}, {"hypothesis", hypothesis(task, v)}};
    try {
      if (v == Variable::PA) {
        auto [xh, xa] = g.pa[x_label];
        auto [yh, ya] = g.pa[y_label];
        const stats::ContingencyTable table{xh, xa, yh, ya};
        entry["groups"] = {x_label, y_label};
        entry["counts"] = {{xh, xa}, {yh, ya}};
        entry["odds_ratio"] = stats::to_json(stats::odds_ratio_ci(table));
        if (task == StudyTask::BlindCompareB) {
          entry["test"] = stats::to_json(stats::fisher_exact_right(table));
        } else {
          auto chi = stats::chi2_yates(table);
          entry["test"] = stats::to_json(chi.result);
          entry["expected"] = {{chi.expected[0], chi.expected[1]}, {chi.expected[2], chi.expected[3]}};
          // Correct identifications: x judged Human (x is the human group) plus y judged AI.
          entry["identification_precision"] = stats::to_json(stats::proportion_ci(xh + ya, table.total()));
        }
      } else if (task == StudyTask::InContextD) {
        std::vector<double> values;
        for (const auto& [label, vs] : g.likert) values.insert(values.end(), vs.begin(), vs.end());
        entry["describe"] = describe_json(values);
        stats::WilcoxonOptions wo;
        wo.seed = opts.seed;
        wo.resamples = opts.resamples;
        entry["test"] = stats::to_json(stats::wilcoxon_one_sample(values, opts.median, stats::Tail::Right, wo));
      } else {
        const auto& xs = g.likert[x_label];
        const auto& ys = g.likert[y_label];
        entry["groups"] = {x_label, y_label};
        entry["describe"] = {{x_label, describe_json(xs)}, {y_label, describe_json(ys)}};
        const auto tail = task == StudyTask::BlindCompareB ? stats::Tail::Right : stats::Tail::Two;
        auto mw = stats::mann_whitney(xs, ys, tail);
        auto effect = stats::a12_ci(xs, ys, std::max<std::size_t>(opts.resamples, 1000), opts.seed);
        mw.ci95 = effect.ci95;
        entry["test"] = stats::to_json(mw);
      }
      family_p.push_back(entry["test"]["p"].get<double>());
      family_index.push_back(tests.size());
    } catch (const Error& e) {
      entry["error"] = {{"code", std::string(reqforge::to_string(e.code()))}, {"message", e.what()}};
    }
    tests.push_back(std::move(entry));
  }

  const auto adjusted = stats::holm_adjust(family_p);
  for (std::size_t k = 0; k < family_index.size(); ++k) tests[family_index[k]]["adjusted_p"] = adjusted[k];
  report["tests"] = std::move(tests);
  return report;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

json to_json(const Item& i) {
  json j{{"item_id", i.item_id}, {"display_texts", i.display_texts}};
  j["context"] = i.context ? json(*i.context) : json(nullptr);
  j["group"] = i.group ? json(*i.group) : json(nullptr);
  return j;
}

json to_json(const KeyEntry& e) {
  return json{{"item_id", e.item_id}, {"author", e.author}, {"source_id", e.source_id},
              {"pair_id", e.pair_id}, {"sealed", e.sealed}};
}

namespace {

Item item_from_json(const json& j) {
  Item i;
  i.item_id = j.at("item_id").get<std::string>();
  i.display_texts = j.at("display_texts").get<std::vector<std::string>>();
  if (auto it = j.find("context"); it != j.end() && !it->is_null()) i.context = it->get<std::string>();
  if (auto it = j.find("group"); it != j.end() && !it->is_null()) i.group = it->get<std::string>();
  return i;
}

}  // namespace

void write_packet(const fs::path& file, const StudyPacket& packet) {
  std::vector<json> rows;
  rows.push_back({{"study_id", packet.study_id}, {"task", to_string(packet.task)}, {"raters", packet.raters},
                  {"items", packet.items.size()}});
  for (const auto& i : packet.items) rows.push_back(to_json(i));
  write_jsonl(file.string(), rows);
}

StudyPacket read_packet(const fs::path& file) {
  auto rows = read_jsonl(file.string());
  if (rows.empty()) throw Error(ErrorCode::Parse, file.string() + ": empty packet file");
  StudyPacket p;
  try {
    p.study_id = rows[0].at("study_id").get<std::string>();
    p.task = parse_study_task(rows[0].at("task").get<std::string>());
    p.raters = rows[0].value("raters", std::vector<std::string>{});
    for (std::size_t i = 1; i < rows.size(); ++i) p.items.push_back(item_from_json(rows[i]));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, file.string() + ": " + e.what());
  }
  return p;
}

void write_key(const fs::path& file, const BlindKey& key) {
  std::vector<json> rows;
  rows.push_back({{"study_id", key.study_id}, {"group_order", key.group_order}});
  for (const auto& e : key.entries) rows.push_back(to_json(e));
  write_jsonl(file.string(), rows);
  fs::permissions(file, fs::perms::owner_read | fs::perms::owner_write, fs::perm_options::replace);
}

BlindKey read_key(const fs::path& file) {
  if (!fs::exists(file)) throw Error(ErrorCode::MissingBlindKey, "blind key not found: " + file.string());
  auto rows = read_jsonl(file.string());
  if (rows.empty()) throw Error(ErrorCode::Parse, file.string() + ": empty key file");
  BlindKey k;
  try {
    k.study_id = rows[0].at("study_id").get<std::string>();
    k.group_order = rows[0].value("group_order", std::vector<std::string>{});
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& j = rows[i];
      k.entries.push_back({j.at("item_id").get<std::string>(), j.at("author").get<std::string>(),
                           j.value("source_id", ""), j.value("pair_id", ""), j.value("sealed", true)});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, file.string() + ": " + e.what());
  }
  return k;
}

namespace {

std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string response_key(const ResponseRecord& r) {
  return r.study_id + '\x1f' + r.item_id + '\x1f' + r.rater_id + '\x1f' + to_string(r.variable);
}

}  // namespace

StudyStore::StudyStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path StudyStore::dir(const std::string& study_id) const {
  check_study_id(study_id);
  return root_ / study_id;
}

void StudyStore::create(const BuiltStudy& study) {
  const auto d = dir(study.packet.study_id);
  if (fs::exists(d / "packet.jsonl"))
    throw Error(ErrorCode::InvalidArgument, "study '" + study.packet.study_id + "' already exists");
  fs::create_directories(d);
  write_packet(d / "packet.jsonl", study.packet);
  write_key(d / "blind_key.jsonl", study.key);
  std::ofstream(d / "responses.jsonl", std::ios::app);
}

bool StudyStore::exists(const std::string& study_id) const {
  try {
    return fs::exists(dir(study_id) / "packet.jsonl");
  } catch (const Error&) {
    return false;
  }
}

StudyPacket StudyStore::packet(const std::string& study_id) const { return log_for(study_id).packet; }

BlindKey StudyStore::key(const std::string& study_id) const { return read_key(dir(study_id) / "blind_key.jsonl"); }

StudyStore::Log& StudyStore::log_for(const std::string& study_id) const {
  std::lock_guard lock(logs_mu_);
  auto it = logs_.find(study_id);
  if (it != logs_.end()) return *it->second;
  if (!exists(study_id)) throw Error(ErrorCode::UnknownStudy, "no study '" + study_id + "'");
  auto log = std::make_unique<Log>();
  log->packet = read_packet(dir(study_id) / "packet.jsonl");
  // Replay the append-only log.
  auto records = std::make_shared<std::vector<ResponseRecord>>();
  const auto path = dir(study_id) / "responses.jsonl";
  if (fs::exists(path)) {
    for (const auto& j : read_jsonl(path.string())) {
      records->push_back(response_from_json(j));
      log->keys.insert(response_key(records->back()));
    }
  }
  log->records = std::move(records);
  return *logs_.emplace(study_id, std::move(log)).first->second;
}

void StudyStore::record_response(ResponseRecord r) {
  auto& log = log_for(r.study_id);
  r.check_domain();
  if (!log.packet.find(r.item_id))
    throw Error(ErrorCode::DomainViolation, "item '" + r.item_id + "' is not part of study '" + r.study_id + "'");
  if (!log.packet.rater_allowed(r.rater_id))
    throw Error(ErrorCode::DomainViolation, "rater '" + r.rater_id + "' is not allocated to study '" + r.study_id + "'");
  const auto vars = task_variables(log.packet.task);
  if (std::find(vars.begin(), vars.end(), r.variable) == vars.end())
    throw Error(ErrorCode::DomainViolation, "variable " + to_string(r.variable) + " is not rated in task " +
                                                to_string(log.packet.task));
  if (r.timestamp.empty()) r.timestamp = utc_now();

  std::lock_guard write_lock(log.write_mu);
  const auto k = response_key(r);
  if (log.keys.count(k))
    throw Error(ErrorCode::DuplicateResponse, "rater '" + r.rater_id + "' already answered " + to_string(r.variable) +
                                                  " for item '" + r.item_id + "'");
  {
    std::ofstream out(dir(r.study_id) / "responses.jsonl", std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot append to response log of '" + r.study_id + "'");
    out << to_json(r).dump() << '\n';
  }
  log.keys.insert(k);
  std::shared_ptr<const std::vector<ResponseRecord>> current;
  {
    std::lock_guard snap(log.snapshot_mu);
    current = log.records;
  }
  auto next = std::make_shared<std::vector<ResponseRecord>>(*current);
  next->push_back(std::move(r));
  std::lock_guard snap(log.snapshot_mu);
  log.records = std::move(next);
}

std::shared_ptr<const std::vector<ResponseRecord>> StudyStore::responses(const std::string& study_id) const {
  auto& log = log_for(study_id);
  std::lock_guard snap(log.snapshot_mu);
  return log.records;
}

json StudyStore::analyze(const std::string& study_id, const AnalysisOptions& opts) const {
  const auto pk = packet(study_id);
  std::optional<BlindKey> key;
  const bool blind = pk.task == StudyTask::BlindCompareB || pk.task == StudyTask::BlindPairC;
  if (blind) key = this->key(study_id);
  auto report = study::analyze(pk, key ? &*key : nullptr, *responses(study_id), opts);
  std::ofstream out(dir(study_id) / "analysis.json", std::ios::trunc | std::ios::binary);
  out << report.dump(2) << '\n';
  return report;
}

}  // namespace reqforge::study
