#include "reqforge/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "reqforge/dataset.hpp"
#include "reqforge/error.hpp"
#include "reqforge/inference.hpp"
#include "reqforge/linter.hpp"
#include "reqforge/lora.hpp"
#include "reqforge/service.hpp"
#include "reqforge/similarity.hpp"
#include "reqforge/stats.hpp"
#include "reqforge/study.hpp"

extern char** environ;

namespace reqforge::cli {

Environment current_environment() {
  Environment env;
  for (char** e = environ; e && *e; ++e) {
    std::string kv(*e);
    auto eq = kv.find('=');
    if (eq != std::string::npos) env[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return env;
}

namespace {

// Parses "a,b,c" or whitespace-separated numbers.
std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::string s = text;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Parse, what + ": not a number: '" + tok + "'");
    }
  }
  return out;
}

bool looks_inline(const std::string& arg) {
  return arg.find_first_not_of("0123456789.,-+eE \t") == std::string::npos && !arg.empty();
}

// A sample argument is an inline list ("1,2,3"), a column file, or a JSONL
// file whose lines are numbers or {"value": x} objects.
std::vector<double> load_sample(const std::string& arg) {
  if (looks_inline(arg)) return parse_numbers(arg, "sample");
  std::ifstream in(arg);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + arg);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    std::vector<double> out;
    for (const auto& j : parse_jsonl(text)) out.push_back(j.at("value").get<double>());
    return out;
  }
  return parse_numbers(text, arg);
}

stats::ContingencyTable parse_table(const std::string& arg) {
  auto v = parse_numbers(arg, "--table");
  if (v.size() != 4) throw Error(ErrorCode::Usage, "--table takes four counts a,b,c,d");
  for (double x : v)
    if (x < 0 || x != std::floor(x)) throw Error(ErrorCode::Usage, "table counts must be non-negative integers");
  return {static_cast<std::uint64_t>(v[0]), static_cast<std::uint64_t>(v[1]), static_cast<std::uint64_t>(v[2]),
          static_cast<std::uint64_t>(v[3])};
}

std::string fmt(double v, int digits = 8) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

void print_result(std::ostream& out, const stats::TestResult& r, const std::string& stat_label = "statistic") {
  out << r.method << "\n";
  out << stat_label << " = " << fmt(r.statistic) << "\n";
  if (!std::isnan(r.p)) out << "p = " << fmt(r.p, 5) << "\n";
  if (r.effect) out << "effect = " << fmt(*r.effect, 6) << "\n";
  if (r.ci95) out << "95% CI = [" << fmt(r.ci95->lo, 4) << ", " << fmt(r.ci95->hi, 4) << "]\n";
  for (const auto& n : r.notes) out << "note: " << n << "\n";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot write: " + path);
  return f;
}

// Writes JSONL rows to `path`, or stdout when empty.
void emit_rows(std::ostream& out, const std::string& path, const std::vector<json>& rows) {
  if (path.empty()) out << dump_jsonl(rows);
  else write_jsonl(path, rows);
}

struct Globals {
  bool json_output = false;
  std::uint64_t seed = 0;
  std::string config_path;
};

}  // namespace

int run(const std::vector<std::string>& argv, const Environment& env, std::ostream& out, std::ostream& err) {
  CLI::App app{"Requirements workbench: lint, build datasets, generate, score and analyze studies", "reqforge"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_flag("--json", g.json_output, "machine-readable output");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--config", g.config_path, "config file (key = value)");

  // Work queued by the selected subcommand; run after parsing so that
  // globals given after the subcommand are visible.
  std::function<void(const Config&)> action;

  // --- lint -----------------------------------------------------------------
  std::string lint_in, lint_out, lint_lexicon;
  auto* lint_cmd = app.add_subcommand("lint", "check requirements against the recommended syntaxes");
  lint_cmd->add_option("--in", lint_in, "corpus JSONL")->required();
  lint_cmd->add_option("--out", lint_out, "report JSONL (default stdout)");
  lint_cmd->add_option("--lexicon", lint_lexicon, "trigger lexicon JSON");
  lint_cmd->callback([&] {
    action = [&](const Config& cfg) {
      auto corpus = read_corpus(lint_in);
      std::string lex_path = lint_lexicon.empty() ? cfg.get_or("lint.lexicon", "") : lint_lexicon;
      lint::Linter linter(lex_path.empty() ? lint::Lexicon::builtin() : lint::Lexicon::load(lex_path));
      auto batch = lint::lint_batch(linter, corpus);
      std::vector<json> rows;
      for (const auto& r : batch.reports) rows.push_back(lint::to_json(r));
      emit_rows(out, lint_out, rows);
      if (!lint_out.empty()) {
        if (g.json_output) out << lint::to_json(batch.summary).dump() << "\n";
        else out << batch.summary.compliant << " of " << batch.summary.total << " compliant ("
                 << batch.summary.syntax1 << " Syntax-1, " << batch.summary.syntax2 << " Syntax-2)\n";
      }
    };
  });

  // --- dataset --------------------------------------------------------------
  auto* ds_cmd = app.add_subcommand("dataset", "build, split and render instruct datasets");
  ds_cmd->require_subcommand(1);
  std::string ds_corpus, ds_plan, ds_out, ds_in, ds_stems;
  double ds_ratio = 0.8;
  auto* ds_build = ds_cmd->add_subcommand("build", "build records from a corpus and a plan");
  ds_build->add_option("--corpus", ds_corpus)->required();
  ds_build->add_option("--plan", ds_plan, "plan JSONL")->required();
  ds_build->add_option("--out", ds_out);
  ds_build->add_option("--stems", ds_stems, "instruction stems JSON");
  ds_build->callback([&] {
    action = [&](const Config&) {
      auto corpus = read_corpus(ds_corpus);
      auto report = validate_corpus(corpus);
      if (!report.valid())
        throw Error(ErrorCode::Validation, "corpus has " + std::to_string(report.issues.size()) + " issue(s); run dataset validate");
      std::vector<dataset::PlanEntry> plan;
      for (const auto& j : read_jsonl(ds_plan)) plan.push_back(dataset::plan_entry_from_json(j));
      auto stems = ds_stems.empty() ? dataset::Stems{} : dataset::Stems::load(ds_stems);
      auto ds = dataset::build_dataset(corpus, plan, g.seed, stems);
      std::vector<json> rows;
      for (const auto& r : ds.records) rows.push_back(to_json(r));
      emit_rows(out, ds_out, rows);
    };
  });
  auto* ds_split = ds_cmd->add_subcommand("split", "stratified train/eval split");
  ds_split->add_option("--in", ds_in)->required();
  ds_split->add_option("--out", ds_out);
  ds_split->add_option("--ratio", ds_ratio, "train ratio")->check(CLI::Range(0.0, 1.0));
  ds_split->callback([&] {
    action = [&](const Config&) {
      auto ds = dataset::stratified_split(read_dataset(ds_in), ds_ratio, g.seed);
      std::vector<json> rows;
      for (const auto& r : ds.records) rows.push_back(to_json(r));
      emit_rows(out, ds_out, rows);
    };
  });
  auto* ds_render = ds_cmd->add_subcommand("render", "emit the training text of every record");
  ds_render->add_option("--in", ds_in)->required();
  ds_render->add_option("--out", ds_out);
  ds_render->callback([&] {
    action = [&](const Config&) {
      auto ds = read_dataset(ds_in);
      std::vector<json> rows;
      for (auto& r : ds.records) {
        r.rendered_text = dataset::render_training_text(r);
        rows.push_back(g.json_output ? to_json(r) : json{{"record_id", r.record_id}, {"text", r.rendered_text}});
      }
      emit_rows(out, ds_out, rows);
    };
  });
  auto* ds_validate = ds_cmd->add_subcommand("validate", "report duplicate ids, empty texts and unknown classes");
  ds_validate->add_option("--corpus", ds_corpus)->required();
  ds_validate->callback([&] {
    action = [&](const Config&) {
      auto report = validate_corpus(read_corpus(ds_corpus));
      json issues = json::array();
      for (const auto& i : report.issues) issues.push_back({{"index", i.index}, {"id", i.id}, {"detail", i.detail}});
      if (g.json_output) {
        out << json{{"valid", report.valid()}, {"issues", issues}}.dump() << "\n";
      } else {
        for (const auto& i : report.issues) out << "line " << i.index + 1 << " [" << i.id << "]: " << i.detail << "\n";
        out << (report.valid() ? "valid" : "invalid") << ", " << report.issues.size() << " issue(s)\n";
      }
      if (!report.valid()) throw Error(ErrorCode::Validation, "corpus is invalid");
    };
  });

  // --- endpoint options shared by generate and chat --------------------------
  std::string endpoint, model, replay, trace;
  double temperature = -1.0;
  int max_tokens = 0;
  auto endpoint_options = [&](CLI::App* c) {
    c->add_option("--endpoint", endpoint, "base URL of an OpenAI-compatible server");
    c->add_option("--model", model, "model id");
    c->add_option("--temperature", temperature);
    c->add_option("--max-tokens", max_tokens);
    c->add_option("--replay", replay, "answer from a trace file instead of the network");
    c->add_option("--trace", trace, "append request/response pairs to this JSONL file");
  };
  auto make_client = [&](const Config& cfg) {
    inference::EndpointConfig ec;
    ec.base_url = endpoint.empty() ? cfg.get_or("endpoint.base_url", ec.base_url) : endpoint;
    ec.concurrency = cfg.get_int("endpoint.concurrency", ec.concurrency);
    ec.retries = cfg.get_int("endpoint.retries", ec.retries);
    ec.backoff_base = std::chrono::milliseconds(cfg.get_int("endpoint.backoff_ms", 500));
    if (auto it = env.find("REQFORGE_API_KEY"); it != env.end()) ec.api_key = it->second;
    std::shared_ptr<inference::Transport> transport =
        replay.empty() ? inference::make_http_transport(ec) : inference::make_replay_transport(replay);
    auto client = std::make_shared<inference::Client>(ec, transport);
    if (!trace.empty()) client->set_trace(std::make_shared<inference::TraceWriter>(trace));
    return client;
  };
  auto make_params = [&](const Config& cfg) {
    inference::GenerationParams p;
    p.model_id = model.empty() ? cfg.get_or("endpoint.model", "reqbrain") : model;
    p.temperature = temperature >= 0.0 ? temperature : cfg.get_double("generation.temperature", 0.2);
    p.max_tokens = max_tokens > 0 ? max_tokens : cfg.get_int("generation.max_tokens", 512);
    p.seed = static_cast<std::int64_t>(g.seed);
    return p;
  };

  // --- generate -------------------------------------------------------------
  std::string gen_dataset, gen_out, gen_failures;
  bool gen_all = false;
  auto* gen_cmd = app.add_subcommand("generate", "run the eval split through the endpoint");
  gen_cmd->add_option("--dataset", gen_dataset)->required();
  gen_cmd->add_option("--out", gen_out, "generation pairs JSONL (default stdout)");
  gen_cmd->add_option("--failures", gen_failures, "per-record failures JSONL");
  gen_cmd->add_flag("--all", gen_all, "use every record, not only the eval split");
  endpoint_options(gen_cmd);
  gen_cmd->callback([&] {
    action = [&](const Config& cfg) {
      auto ds = read_dataset(gen_dataset);
      std::vector<InstructRecord> eval;
      for (const auto& r : ds.records)
        if (gen_all || r.split == SplitTag::Eval) eval.push_back(r);
      auto client = make_client(cfg);
      auto result = inference::generate_benchmark(*client, eval, make_params(cfg));
      std::vector<json> rows;
      for (const auto& p : result.pairs) rows.push_back(to_json(p));
      emit_rows(out, gen_out, rows);
      std::vector<json> failures;
      for (const auto& f : result.failures) {
        failures.push_back(inference::to_json(f));
        err << "warning[" << to_string(f.code) << "]: record " << f.record_id << ": " << f.message << "\n";
      }
      if (!gen_failures.empty()) write_jsonl(gen_failures, failures);
    };
  });

  // --- chat -----------------------------------------------------------------
  std::string chat_message, chat_system, chat_transcript;
  auto* chat_cmd = app.add_subcommand("chat", "one elicitation turn, streamed to stdout");
  chat_cmd->add_option("--message,-m", chat_message)->required();
  chat_cmd->add_option("--system", chat_system);
  chat_cmd->add_option("--transcript", chat_transcript, "JSONL transcript to continue and update");
  endpoint_options(chat_cmd);
  chat_cmd->callback([&] {
    action = [&](const Config& cfg) {
      std::vector<inference::ChatMessage> transcript;
      if (!chat_transcript.empty() && std::ifstream(chat_transcript)) {
        for (const auto& j : read_jsonl(chat_transcript))
          transcript.push_back({inference::parse_role(j.at("role").get<std::string>()), j.at("content").get<std::string>()});
      }
      if (transcript.empty() && !chat_system.empty()) transcript.push_back({inference::Role::System, chat_system});
      transcript.push_back({inference::Role::User, chat_message});
      auto client = make_client(cfg);
      auto reply = client->chat_stream(transcript, make_params(cfg), [&](std::string_view piece) {
        if (!g.json_output) out << piece << std::flush;
      });
      if (g.json_output) out << json{{"role", "assistant"}, {"content", reply.content}}.dump() << "\n";
      else out << "\n";
      transcript.push_back(reply);
      if (!chat_transcript.empty()) {
        std::vector<json> rows;
        for (const auto& m : transcript) rows.push_back({{"role", inference::to_string(m.role)}, {"content", m.content}});
        write_jsonl(chat_transcript, rows);
      }
    };
  });

  // --- score ----------------------------------------------------------------
  std::string score_pairs, score_emb, score_out, score_external;
  auto* score_cmd = app.add_subcommand("score", "greedy embedding-matching precision/recall/F1");
  score_cmd->add_option("--pairs", score_pairs)->required();
  score_cmd->add_option("--embeddings", score_emb);
  score_cmd->add_option("--out", score_out, "per-pair scores JSONL");
  score_cmd->add_option("--external", score_external, "external scorer command (pairs JSONL on stdin)");
  score_cmd->callback([&] {
    action = [&](const Config&) {
      if (score_emb.empty() && score_external.empty())
        throw Error(ErrorCode::Usage, "score needs --embeddings and/or --external");
      auto pairs = read_pairs(score_pairs);
      std::vector<json> rows(pairs.size());
      json summary{{"pairs", pairs.size()}};
      for (std::size_t i = 0; i < pairs.size(); ++i) rows[i]["pair_id"] = pairs[i].record_id;
      if (!score_emb.empty()) {
        auto emb = similarity::read_embedding_file(score_emb);
        auto scores = similarity::score_pairs(pairs, emb);
        for (std::size_t i = 0; i < pairs.size(); ++i) rows[i].update(similarity::to_json(scores.pairs[i].score));
        summary["corpus"] = similarity::to_json(scores.corpus);
      }
      if (!score_external.empty()) {
        auto ext = similarity::external_score(pairs, score_external);
        double mean = 0.0;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          rows[i]["external"] = ext[i];
          mean += ext[i];
        }
        summary["external_mean"] = pairs.empty() ? 0.0 : mean / static_cast<double>(pairs.size());
      }
      if (!score_out.empty()) write_jsonl(score_out, rows);
      else if (g.json_output) out << dump_jsonl(rows);
      if (g.json_output || score_out.empty()) {
        out << summary.dump() << "\n";
      } else {
        if (summary.contains("corpus"))
          out << "precision " << fmt(summary["corpus"]["precision"].get<double>(), 6) << "  recall "
              << fmt(summary["corpus"]["recall"].get<double>(), 6) << "  f1 " << fmt(summary["corpus"]["f1"].get<double>(), 6)
              << "\n";
        if (summary.contains("external_mean"))
          out << "external mean " << fmt(summary["external_mean"].get<double>(), 6) << "\n";
      }
    };
  });

  // --- lora -----------------------------------------------------------------
  auto* lora_cmd = app.add_subcommand("lora", "low-rank adapter arithmetic");
  lora_cmd->require_subcommand(1);
  std::string lora_base, lora_down, lora_up, lora_out;
  auto lora_sub = [&](const char* name, const char* desc, bool merged) {
    auto* c = lora_cmd->add_subcommand(name, desc);
    c->add_option("--base", lora_base)->required();
    c->add_option("--down", lora_down)->required();
    c->add_option("--up", lora_up)->required();
    c->add_option("--out", lora_out);
    c->callback([&, merged] {
      action = [&, merged](const Config&) {
        lora::LoraFactors f{lora::read_matrix_file(lora_base), lora::read_matrix_file(lora_down),
                            lora::read_matrix_file(lora_up)};
        auto m = merged ? lora::merge(f) : lora::delta(f);
        if (lora_out.empty()) {
          lora::write_matrix(out, m);
        } else {
          auto f_out = open_out(lora_out);
          lora::write_matrix(f_out, m);
        }
      };
    });
  };
  lora_sub("merge", "base + down * up", true);
  lora_sub("delta", "down * up", false);

  // --- stats ----------------------------------------------------------------
  auto* stats_cmd = app.add_subcommand("stats", "non-parametric tests and effect sizes");
  stats_cmd->require_subcommand(1);
  std::string table_arg, x_arg, y_arg, p_arg, tail_arg = "right";
  bool no_yates = false, exact = false, pratt = false;
  double median = 3.0;
  std::size_t resamples = 10000;
  std::uint64_t successes = 0, trials = 0;

  auto emit = [&](const stats::TestResult& r, json extra = json::object(), const std::string& label = "statistic") {
    if (g.json_output) {
      auto j = stats::to_json(r);
      j.update(extra);
      out << j.dump() << "\n";
    } else {
      print_result(out, r, label);
      for (auto& [k, v] : extra.items()) out << k << " = " << v.dump() << "\n";
    }
  };

  auto* fisher = stats_cmd->add_subcommand("fisher", "right-tailed Fisher exact test with odds ratio");
  fisher->add_option("--table", table_arg, "a,b,c,d")->required();
  fisher->callback([&] {
    action = [&](const Config&) {
      auto t = parse_table(table_arg);
      auto orr = stats::odds_ratio_ci(t);
      emit(stats::fisher_exact_right(t),
           {{"odds_ratio", orr.statistic}, {"odds_ratio_ci95", {orr.ci95->lo, orr.ci95->hi}}});
    };
  });

  auto* chi2 = stats_cmd->add_subcommand("chi2", "2x2 chi-square test (Yates by default)");
  chi2->add_option("--table", table_arg, "a,b,c,d")->required();
  chi2->add_flag("--no-yates", no_yates, "uncorrected statistic");
  chi2->callback([&] {
    action = [&](const Config&) {
      auto t = parse_table(table_arg);
      auto r = stats::chi2_test(t, !no_yates);
      auto orr = stats::odds_ratio_ci(t);
      const auto& e = r.expected;
      emit(r.result,
           {{"expected", {{e[0], e[1]}, {e[2], e[3]}}},
            {"odds_ratio", orr.statistic},
            {"odds_ratio_ci95", {orr.ci95->lo, orr.ci95->hi}}},
           "χ²");
    };
  });

  auto* mwu = stats_cmd->add_subcommand("mwu", "Mann-Whitney U with A12");
  mwu->add_option("--x", x_arg, "sample file or inline list")->required();
  mwu->add_option("--y", y_arg, "sample file or inline list")->required();
  mwu->add_option("--tail", tail_arg, "right|left|two");
  mwu->add_flag("--exact", exact, "force the exact permutation law");
  mwu->add_option("--resamples", resamples, "bootstrap resamples for the A12 interval");
  mwu->callback([&] {
    action = [&](const Config&) {
      auto x = load_sample(x_arg), y = load_sample(y_arg);
      auto r = stats::mann_whitney(x, y, stats::parse_tail(tail_arg), exact ? stats::PMethod::Exact : stats::PMethod::Auto);
      r.ci95 = stats::a12_ci(x, y, resamples, g.seed).ci95;
      emit(r, json::object(), "U");
    };
  });

  auto* a12 = stats_cmd->add_subcommand("a12", "Vargha-Delaney A12 with bootstrap interval");
  a12->add_option("--x", x_arg)->required();
  a12->add_option("--y", y_arg)->required();
  a12->add_option("--resamples", resamples);
  a12->callback([&] {
    action = [&](const Config&) { emit(stats::a12_ci(load_sample(x_arg), load_sample(y_arg), resamples, g.seed)); };
  });

  auto* wil = stats_cmd->add_subcommand("wilcoxon", "one-sample Wilcoxon signed-rank with rank biserial");
  wil->add_option("--x", x_arg)->required();
  wil->add_option("--median", median, "hypothesized median");
  wil->add_option("--tail", tail_arg, "right|left|two");
  wil->add_flag("--pratt", pratt, "rank zero differences (Pratt)");
  wil->add_flag("--exact", exact);
  wil->add_option("--resamples", resamples);
  wil->callback([&] {
    action = [&](const Config&) {
      stats::WilcoxonOptions o;
      o.zero_method = pratt ? stats::ZeroMethod::Pratt : stats::ZeroMethod::Wilcox;
      o.method = exact ? stats::PMethod::Exact : stats::PMethod::Auto;
      o.resamples = resamples;
      o.seed = g.seed;
      emit(stats::wilcoxon_one_sample(load_sample(x_arg), median, stats::parse_tail(tail_arg), o), json::object(), "W");
    };
  });

  auto* holm = stats_cmd->add_subcommand("holm", "Holm-Bonferroni adjusted p-values");
  holm->add_option("--p", p_arg, "comma-separated p-values or a file")->required();
  holm->callback([&] {
    action = [&](const Config&) {
      auto adj = stats::holm_adjust(load_sample(p_arg));
      if (g.json_output) {
        out << json{{"adjusted", adj}}.dump() << "\n";
      } else {
        for (double a : adj) out << std::fixed << std::setprecision(5) << a << std::defaultfloat << "\n";
      }
    };
  });

  auto* prop = stats_cmd->add_subcommand("proportion", "proportion with Wilson interval");
  prop->add_option("--successes", successes)->required();
  prop->add_option("--n", trials)->required();
  prop->callback([&] { action = [&](const Config&) { emit(stats::proportion_ci(successes, trials), json::object(), "proportion"); }; });

  auto* desc = stats_cmd->add_subcommand("describe", "n, mean, sd, median");
  desc->add_option("--x", x_arg)->required();
  desc->callback([&] {
    action = [&](const Config&) {
      auto d = stats::describe(load_sample(x_arg));
      if (g.json_output) out << stats::to_json(d).dump() << "\n";
      else out << "n = " << d.n << "\nmean = " << fmt(d.mean, 6) << "\nsd = " << fmt(d.sd, 6) << "\nmedian = " << fmt(d.median, 6) << "\n";
    };
  });

  // power lives under stats and at the top level.
  std::string power_test = "two-sample", power_tails = "two";
  stats::PowerSpec power_spec;
  auto power_options = [&](CLI::App* c) {
    c->add_option("--test", power_test, "two-sample|one-sample|chi2");
    c->add_option("--tails", power_tails, "one|two");
    c->add_option("--alpha", power_spec.alpha);
    c->add_option("--power", power_spec.power);
    c->add_option("--effect", power_spec.effect, "Cohen's d, or w for chi2");
    c->callback([&] {
      action = [&](const Config&) {
        if (power_test == "two-sample") power_spec.test = stats::PowerTest::TwoSampleT;
        else if (power_test == "one-sample") power_spec.test = stats::PowerTest::OneSampleT;
        else if (power_test == "chi2") power_spec.test = stats::PowerTest::ChiSquare1df;
        else throw Error(ErrorCode::Usage, "unknown power test '" + power_test + "'");
        if (power_tails == "one") power_spec.tails = stats::Tail::Right;
        else if (power_tails == "two") power_spec.tails = stats::Tail::Two;
        else throw Error(ErrorCode::Usage, "--tails takes one or two");
        const auto n = stats::required_sample_size(power_spec);
        const double achieved = stats::achieved_power(power_spec, n);
        if (g.json_output) out << json{{"n", n}, {"achieved_power", achieved}}.dump() << "\n";
        else out << "n = " << n << " (achieved power " << fmt(achieved, 4) << ")\n";
      };
    });
  };
  power_options(stats_cmd->add_subcommand("power", "a-priori sample size"));
  power_options(app.add_subcommand("power", "a-priori sample size"));

  // --- study ----------------------------------------------------------------
  auto* study_cmd = app.add_subcommand("study", "evaluation studies");
  study_cmd->require_subcommand(1);
  std::string study_root = "studies", study_request, study_id, study_in, study_host = "127.0.0.1", app_dir;
  int study_port = 8080;
  auto* sbuild = study_cmd->add_subcommand("build", "build a packet and sealed key from a request JSON");
  sbuild->add_option("--root", study_root);
  sbuild->add_option("--request", study_request)->required();
  sbuild->callback([&] {
    action = [&](const Config&) {
      std::ifstream in(study_request);
      if (!in) throw Error(ErrorCode::Io, "file not found: " + study_request);
      json body;
      try {
        body = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, study_request + ": " + e.what());
      }
      if (!body.contains("seed")) body["seed"] = g.seed;
      auto built = service::build_study_from_json(body);
      study::StudyStore store(study_root);
      store.create(built);
      if (g.json_output) out << json{{"study_id", built.packet.study_id}, {"items", built.packet.items.size()}}.dump() << "\n";
      else out << "study " << built.packet.study_id << ": " << built.packet.items.size() << " items\n";
    };
  });
  auto* srecord = study_cmd->add_subcommand("record", "append responses from a JSONL file");
  srecord->add_option("--root", study_root);
  srecord->add_option("--id", study_id)->required();
  srecord->add_option("--in", study_in)->required();
  srecord->callback([&] {
    action = [&](const Config&) {
      study::StudyStore store(study_root);
      std::size_t n = 0;
      for (auto j : read_jsonl(study_in)) {
        j["study_id"] = study_id;
        store.record_response(study::response_from_json(j));
        ++n;
      }
      out << n << " responses recorded\n";
    };
  });
  auto* sanalyze = study_cmd->add_subcommand("analyze", "run the hypothesis tests of a study");
  sanalyze->add_option("--root", study_root);
  sanalyze->add_option("--id", study_id)->required();
  sanalyze->add_option("--resamples", resamples);
  sanalyze->callback([&] {
    action = [&](const Config&) {
      study::StudyStore store(study_root);
      study::AnalysisOptions o;
      o.seed = g.seed;
      o.resamples = resamples;
      out << store.analyze(study_id, o).dump(2) << "\n";
    };
  });
  auto* sserve = study_cmd->add_subcommand("serve", "run the REST service");
  sserve->add_option("--root", study_root);
  sserve->add_option("--host", study_host);
  sserve->add_option("--port", study_port);
  sserve->add_option("--app-dir", app_dir, "static UI bundle served under /app");
  endpoint_options(sserve);
  sserve->callback([&] {
    action = [&](const Config& cfg) {
      auto store = std::make_shared<study::StudyStore>(study_root);
      service::ServiceOptions so;
      so.app_dir = app_dir.empty() ? cfg.get_or("service.app_dir", "") : app_dir;
      so.analysis.seed = g.seed;
      so.analysis.resamples = resamples;
      so.chat_params = make_params(cfg);
      service::Service svc(store, make_client(cfg), so);
      const int port = svc.bind(study_host, study_port);
      err << "listening on " << study_host << ":" << port << "\n";
      svc.listen();
    };
  });

  // --- parse and dispatch ---------------------------------------------------
  if (argv.size() <= 1) {
    err << app.help();
    return 2;
  }
  std::vector<const char*> cargv;
  for (const auto& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error[E_USAGE]: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return 2;
  }

  try {
    Config cfg = g.config_path.empty() ? Config({}, env) : Config::load(g.config_path, env);
    if (action) action(cfg);
    return 0;
  } catch (const Error& e) {
    err << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::Usage ? 2 : 1;
  } catch (const json::exception& e) {
    err << "error[E_PARSE]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace reqforge::cli
