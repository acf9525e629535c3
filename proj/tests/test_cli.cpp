#include <cstdio>
#include <sys/wait.h>

#include "doctest.h"
#include "reqforge/cli.hpp"
#include "reqforge/domain.hpp"
#include "reqforge/lora.hpp"
#include "support.hpp"

using namespace reqforge;

namespace {

struct Outcome {
  int rc = 0;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args, Environment env = {}) {
  args.insert(args.begin(), "reqforge");
  std::ostringstream out, err;
  Outcome o;
  o.rc = cli::run(args, env, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

Outcome spawn(const std::string& args) {
  Outcome o;
  const std::string cmd = std::string(REQFORGE_CLI) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p);
  char buf[4096];
  while (auto n = fread(buf, 1, sizeof buf, p)) o.out.append(buf, n);
  const int status = pclose(p);
  o.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

const char* kCorpus =
    R"({"id":"R1","text":"The system shall export invoices as PDF.","class":"F","source_project":"shop"}
{"id":"R2","text":"Customers should be able to browse titles in under 3 minutes.","class":"US","source_project":"shop"}
{"id":"R3","text":"The system shall lock accounts after five failed logins.","class":"SE","source_project":"bank"}
{"id":"R4","text":"The system shall answer queries within 2 seconds.","class":"PE","source_project":"bank"}
{"id":"R5","text":"Admins shall be able to reset passwords.","class":"F","source_project":"bank"}
)";

}  // namespace

TEST_CASE("usage errors") {
  auto o = run({});
  CHECK(o.rc == 2);
  CHECK(o.err.find("Usage") != std::string::npos);
  CHECK(run({"frobnicate"}).rc == 2);
  CHECK(run({"stats", "chi2"}).rc == 2);
  CHECK(run({"--help"}).rc == 0);
  auto bad = run({"stats", "chi2", "--table", "1,2,3"});
  CHECK(bad.rc == 2);
  CHECK(bad.err.find("error[E_USAGE]") != std::string::npos);
}

TEST_CASE("exit codes of the binary") {
  auto none = spawn("");
  CHECK(none.rc == 2);
  auto missing = spawn("lint --in /nonexistent/corpus.jsonl");
  CHECK(missing.rc == 1);
  CHECK(missing.out.find("file not found") != std::string::npos);
  auto ok = spawn("stats chi2 --table 65,71,63,73");
  CHECK(ok.rc == 0);
  CHECK(ok.out.find("χ² = 0.01475694") != std::string::npos);
}

TEST_CASE("stats commands") {
  auto chi = run({"stats", "chi2", "--table", "65,71,63,73"});
  CHECK(chi.rc == 0);
  CHECK(chi.out.find("χ² = 0.01475694") != std::string::npos);
  CHECK(chi.out.find("p = 0.9033") != std::string::npos);

  auto j = json::parse(run({"--json", "stats", "fisher", "--table", "65,71,12,124"}).out);
  CHECK(std::fabs(j["odds_ratio"].get<double>() - 9.46) < 0.005);
  CHECK(j["p"].get<double>() < 1e-3);

  auto holm = run({"stats", "holm", "--p", "0.05,0.01,0.04"});
  CHECK(holm.rc == 0);
  CHECK(holm.out == "0.08000\n0.03000\n0.08000\n");

  auto prop = json::parse(run({"--json", "stats", "proportion", "--successes", "138", "--n", "272"}).out);
  CHECK(std::fabs(prop["statistic"].get<double>() - 138.0 / 272.0) < 1e-12);

  auto d = json::parse(run({"--json", "stats", "describe", "--x", "1,2,3,4"}).out);
  CHECK(d["median"] == 2.5);

  auto w = json::parse(run({"--json", "stats", "wilcoxon", "--x", "4,4,4,4,4", "--median", "3"}).out);
  CHECK(std::fabs(w["p"].get<double>() - 1.0 / 32.0) < 1e-12);

  auto m = json::parse(run({"--json", "stats", "mwu", "--x", "4,5,6", "--y", "1,2,3", "--resamples", "1000"}).out);
  CHECK(std::fabs(m["p"].get<double>() - 0.05) < 1e-12);

  auto p = run({"power", "--test", "two-sample", "--effect", "0.5"});
  CHECK(p.out.rfind("n = 64 ", 0) == 0);
  CHECK(run({"stats", "power", "--test", "chi2", "--effect", "0.5", "--alpha", "0.05", "--power", "0.8"}).out.rfind("n = 32 ", 0) == 0);
  CHECK(run({"power", "--test", "bogus"}).rc == 2);

  auto empty = run({"stats", "describe", "--x", ""});
  CHECK(empty.rc != 0);
}

TEST_CASE("seeded commands are reproducible") {
  std::vector<std::string> args{"--json", "--seed", "17", "stats", "a12", "--x", "1.2,3.1,5.5,7.3,2.2,4.8,6.1,0.4,3.9,5.2", "--y", "2.5,2.1,4.4,1.7,1.1,0.3,3.3,2.8,1.9,0.8", "--resamples", "2000"};
  auto a = run(args), b = run(args);
  CHECK(a.rc == 0);
  CHECK(a.out == b.out);
  args[2] = "18";
  CHECK(run(args).out != a.out);
}

TEST_CASE("lint and dataset commands") {
  testing::TempDir tmp;
  testing::write_file(tmp.file("corpus.jsonl"), kCorpus);

  auto lint = run({"lint", "--in", tmp.file("corpus.jsonl"), "--out", tmp.file("lint.jsonl")});
  CHECK(lint.rc == 0);
  auto rows = read_jsonl(tmp.file("lint.jsonl"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0]["id"] == "R1");

  CHECK(run({"dataset", "validate", "--corpus", tmp.file("corpus.jsonl")}).rc == 0);
  testing::write_file(tmp.file("dupes.jsonl"), std::string(kCorpus) + R"({"id":"R1","text":"Again."})" + "\n");
  auto dup = run({"dataset", "validate", "--corpus", tmp.file("dupes.jsonl")});
  CHECK(dup.rc == 1);
  CHECK(dup.out.find("line 6 [R1]") != std::string::npos);

  testing::write_file(tmp.file("plan.jsonl"),
                      R"({"task":"howto","req_id":"R1","context":"An online bookshop."}
{"task":"howto","req_id":"R3","context":"Retail banking."}
{"task":"retypes","req_id":"R2","context":"An online bookshop.","template":"instruction_first"}
{"task":"retypes","req_id":"R4","context":"Retail banking."}
{"task":"missing","project":"bank","context":"Retail banking."}
)");
  auto build = run({"--seed", "3", "dataset", "build", "--corpus", tmp.file("corpus.jsonl"), "--plan",
                    tmp.file("plan.jsonl"), "--out", tmp.file("ds.jsonl")});
  CHECK(build.rc == 0);
  CHECK(read_jsonl(tmp.file("ds.jsonl")).size() == 5);

  CHECK(run({"--seed", "3", "dataset", "split", "--in", tmp.file("ds.jsonl"), "--out", tmp.file("split.jsonl")}).rc == 0);
  std::size_t train = 0, eval = 0;
  for (const auto& r : read_jsonl(tmp.file("split.jsonl"))) (r["split"] == "train" ? train : eval)++;
  CHECK(train + eval == 5);
  CHECK(eval >= 1);

  auto render = run({"dataset", "render", "--in", tmp.file("split.jsonl")});
  CHECK(render.rc == 0);
  CHECK(render.out.find("The system shall export invoices as PDF.") != std::string::npos);

  auto again = run({"--seed", "3", "dataset", "build", "--corpus", tmp.file("corpus.jsonl"), "--plan",
                    tmp.file("plan.jsonl")});
  auto twice = run({"--seed", "3", "dataset", "build", "--corpus", tmp.file("corpus.jsonl"), "--plan",
                    tmp.file("plan.jsonl")});
  CHECK(again.out == twice.out);
  CHECK(again.out == testing::read_file(tmp.file("ds.jsonl")));
}

TEST_CASE("score and lora commands") {
  testing::TempDir tmp;
  testing::write_file(tmp.file("pairs.jsonl"),
                      R"({"record_id":"p1","reference":"a b","candidate":"a","model_id":"m"}
)");
  testing::write_file(tmp.file("emb.jsonl"),
                      R"({"dim":2}
{"pair_id":"p1","side":"reference","tokens":["a","b"],"vectors":[[1,0],[0,1]]}
{"pair_id":"p1","side":"candidate","tokens":["a"],"vectors":[[1,0]]}
)");
  auto s = run({"score", "--pairs", tmp.file("pairs.jsonl"), "--embeddings", tmp.file("emb.jsonl")});
  CHECK(s.rc == 0);
  auto summary = json::parse(s.out);
  CHECK(summary["corpus"]["precision"] == 1.0);
  CHECK(summary["corpus"]["recall"] == 0.5);
  CHECK(std::fabs(summary["corpus"]["f1"].get<double>() - 2.0 / 3.0) < 1e-12);
  CHECK(run({"score", "--pairs", tmp.file("pairs.jsonl")}).rc == 2);

  testing::write_file(tmp.file("W.txt"), "1 0\n0 1\n");
  testing::write_file(tmp.file("A.txt"), "1\n0\n");
  testing::write_file(tmp.file("B.txt"), "2, 3\n");
  auto merged = run({"lora", "merge", "--base", tmp.file("W.txt"), "--down", tmp.file("A.txt"), "--up", tmp.file("B.txt")});
  CHECK(merged.rc == 0);
  std::istringstream in(merged.out);
  CHECK(lora::read_matrix(in) == lora::Matrix::from_rows({{3, 3}, {0, 1}}));
  auto delta = run({"lora", "delta", "--base", tmp.file("W.txt"), "--down", tmp.file("A.txt"), "--up", tmp.file("B.txt"),
                    "--out", tmp.file("D.txt")});
  CHECK(delta.rc == 0);
  CHECK(lora::read_matrix_file(tmp.file("D.txt")) == lora::Matrix::from_rows({{2, 3}, {0, 0}}));
  auto shape = run({"lora", "merge", "--base", tmp.file("W.txt"), "--down", tmp.file("B.txt"), "--up", tmp.file("A.txt")});
  CHECK(shape.rc == 1);
  CHECK(shape.err.find("error[E_SHAPE") != std::string::npos);
}

TEST_CASE("study commands") {
  testing::TempDir tmp;
  const auto root = tmp.file("studies");
  testing::write_file(tmp.file("req.json"),
                      R"({"task":"D","study_id":"ctx","projects":[{"project":"p","instructions":"A parking app.","generated":["Drivers shall pay by phone.","The app shall show free spots.","Drivers shall extend sessions.","The app shall send receipts.","Wardens shall scan plates."]}]})");
  auto b = run({"study", "build", "--root", root, "--request", tmp.file("req.json")});
  CHECK(b.rc == 0);
  CHECK(b.out == "study ctx: 5 items\n");

  std::string responses;
  for (int i = 1; i <= 5; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "item-%04d", i);
    for (auto [var, v] : {std::pair{"CRS", 4}, std::pair{"IMR", 5}, std::pair{"EOC", i % 2 ? 4 : 2}})
      responses += json{{"item_id", id}, {"rater_id", "r1"}, {"variable", var}, {"value", v}}.dump() + "\n";
  }
  testing::write_file(tmp.file("resp.jsonl"), responses);
  auto r = run({"study", "record", "--root", root, "--id", "ctx", "--in", tmp.file("resp.jsonl")});
  CHECK(r.rc == 0);
  CHECK(r.out == "15 responses recorded\n");
  CHECK(run({"study", "record", "--root", root, "--id", "ctx", "--in", tmp.file("resp.jsonl")}).rc == 1);

  auto a = run({"study", "analyze", "--root", root, "--id", "ctx", "--resamples", "1000"});
  CHECK(a.rc == 0);
  auto report = json::parse(a.out);
  CHECK(report["tests"].size() == 3);
  CHECK(std::fabs(report["tests"][0]["test"]["p"].get<double>() - 1.0 / 32.0) < 1e-12);
  CHECK(run({"study", "analyze", "--root", root, "--id", "nope"}).rc == 1);
}

TEST_CASE("config and environment reach the endpoint settings") {
  testing::EchoStub stub;
  testing::TempDir tmp;
  testing::write_file(tmp.file("rf.conf"), "endpoint.base_url = http://127.0.0.1:1\nendpoint.retries = 0\n");
  auto via_env = run({"--config", tmp.file("rf.conf"), "chat", "-m", "hello there"},
                     {{"REQFORGE_ENDPOINT_BASE_URL", stub.base_url()}, {"REQFORGE_API_KEY", "sk-test"}});
  CHECK(via_env.rc == 0);
  CHECK(via_env.out.find("hello there") != std::string::npos);
  CHECK(stub.last_authorization == "Bearer sk-test");

  auto via_flag = run({"--config", tmp.file("rf.conf"), "chat", "-m", "hi", "--endpoint", stub.base_url()});
  CHECK(via_flag.rc == 0);

  auto from_file = run({"--config", tmp.file("rf.conf"), "chat", "-m", "hi"});
  CHECK(from_file.rc == 1);
  CHECK(from_file.err.find("E_ENDPOINT_UNREACHABLE") != std::string::npos);
}
