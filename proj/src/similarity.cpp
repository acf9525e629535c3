#include "reqforge/similarity.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "reqforge/error.hpp"

namespace reqforge::similarity {

std::string to_string(Side s) { return s == Side::Reference ? "reference" : "candidate"; }

void TokenEmbeddings::validate() const {
  if (tokens.empty()) throw Error(ErrorCode::EmptySide, "pair '" + pair_id + "' " + to_string(side) + " has no tokens");
  if (dim == 0) throw Error(ErrorCode::Validation, "pair '" + pair_id + "' has zero embedding dimension");
  if (vectors.size() != tokens.size() * dim)
    throw Error(ErrorCode::Validation, "pair '" + pair_id + "' " + to_string(side) + ": row count does not match tokens");
  for (double v : vectors) {
    if (!std::isfinite(v)) throw Error(ErrorCode::Validation, "pair '" + pair_id + "' has a non-finite entry");
  }
}

double harmonic_f1(double precision, double recall) {
  const double s = precision + recall;
  return s == 0.0 ? 0.0 : 2.0 * precision * recall / s;
}

namespace {

std::vector<double> normalized_rows(const TokenEmbeddings& e) {
  std::vector<double> out(e.vectors);
  for (std::size_t i = 0; i < e.rows(); ++i) {
    double* r = out.data() + i * e.dim;
    double norm = 0.0;
    for (std::size_t k = 0; k < e.dim; ++k) norm += r[k] * r[k];
    norm = std::sqrt(norm);
    // A zero row has no direction; it matches nothing.
    if (norm > 0.0)
      for (std::size_t k = 0; k < e.dim; ++k) r[k] /= norm;
  }
  return out;
}

}  // namespace

ScoreTriple greedy_scores(const TokenEmbeddings& reference, const TokenEmbeddings& candidate) {
  reference.validate();
  candidate.validate();
  if (reference.dim != candidate.dim)
    throw Error(ErrorCode::DimensionMismatch, "reference dim " + std::to_string(reference.dim) +
                                                  " != candidate dim " + std::to_string(candidate.dim));
  const std::size_t d = reference.dim;
  const auto ref = normalized_rows(reference);
  const auto cand = normalized_rows(candidate);
  const std::size_t nr = reference.rows(), nc = candidate.rows();

  // sim(i, j) = max(0, <ref_i, cand_j>)
  std::vector<double> sim(nr * nc);
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nc; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < d; ++k) dot += ref[i * d + k] * cand[j * d + k];
      sim[i * nc + j] = std::clamp(dot, 0.0, 1.0);
    }
  }

  double recall = 0.0;
  for (std::size_t i = 0; i < nr; ++i)
    recall += *std::max_element(sim.begin() + static_cast<std::ptrdiff_t>(i * nc),
                                sim.begin() + static_cast<std::ptrdiff_t>((i + 1) * nc));
  recall /= static_cast<double>(nr);

  double precision = 0.0;
  for (std::size_t j = 0; j < nc; ++j) {
    double best = 0.0;
    for (std::size_t i = 0; i < nr; ++i) best = std::max(best, sim[i * nc + j]);
    precision += best;
  }
  precision /= static_cast<double>(nc);

  return {precision, recall, harmonic_f1(precision, recall)};
}

CorpusScores corpus_scores(const std::vector<std::pair<TokenEmbeddings, TokenEmbeddings>>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptySide, "corpus scoring needs at least one pair");
  CorpusScores out;
  for (const auto& [ref, cand] : pairs) {
    try {
      out.pairs.push_back({ref.pair_id, greedy_scores(ref, cand)});
    } catch (const Error& e) {
      throw Error(e.code(), "pair '" + ref.pair_id + "': " + e.what());
    }
  }
  const double n = static_cast<double>(out.pairs.size());
  for (const auto& p : out.pairs) {
    out.corpus.precision += p.score.precision;
    out.corpus.recall += p.score.recall;
    out.corpus.f1 += p.score.f1;
  }
  out.corpus.precision /= n;
  out.corpus.recall /= n;
  out.corpus.f1 /= n;
  return out;
}

json to_json(const TokenEmbeddings& e) {
  json vectors = json::array();
  for (std::size_t i = 0; i < e.rows(); ++i)
    vectors.push_back(std::vector<double>(e.row(i), e.row(i) + e.dim));
  return json{{"pair_id", e.pair_id}, {"side", to_string(e.side)}, {"tokens", e.tokens}, {"vectors", vectors}};
}

TokenEmbeddings token_embeddings_from_json(const json& j, std::size_t dim) {
  TokenEmbeddings e;
  try {
    e.pair_id = j.at("pair_id").get<std::string>();
    auto side = j.at("side").get<std::string>();
    if (side == "reference") e.side = Side::Reference;
    else if (side == "candidate") e.side = Side::Candidate;
    else throw Error(ErrorCode::Parse, "unknown side '" + side + "'");
    e.tokens = j.at("tokens").get<std::vector<std::string>>();
    e.dim = dim;
    const auto& rows = j.at("vectors");
    if (rows.size() != e.tokens.size())
      throw Error(ErrorCode::Validation, "pair '" + e.pair_id + "': " + std::to_string(rows.size()) +
                                             " vectors for " + std::to_string(e.tokens.size()) + " tokens");
    for (const auto& row : rows) {
      if (row.size() != dim)
        throw Error(ErrorCode::DimensionMismatch, "pair '" + e.pair_id + "': row of dimension " +
                                                      std::to_string(row.size()) + ", header says " + std::to_string(dim));
      for (const auto& v : row) e.vectors.push_back(v.get<double>());
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::Parse, std::string("bad embedding record: ") + ex.what());
  }
  return e;
}

json to_json(const ScoreTriple& s) {
  return json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

EmbeddingFile parse_embedding_file(std::string_view text) {
  auto rows = parse_jsonl(text);
  if (rows.empty() || !rows.front().contains("dim"))
    throw Error(ErrorCode::Parse, "embedding file must start with a {\"dim\": d} header line");
  EmbeddingFile file;
  file.dim = rows.front().at("dim").get<std::size_t>();
  if (file.dim == 0) throw Error(ErrorCode::Validation, "embedding dimension must be positive");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto e = token_embeddings_from_json(rows[i], file.dim);
    e.validate();
    auto& slot = file.by_pair[e.pair_id];
    auto& target = e.side == Side::Reference ? slot.first : slot.second;
    if (target) throw Error(ErrorCode::Validation, "pair '" + e.pair_id + "' has two " + to_string(e.side) + " lines");
    target = std::move(e);
  }
  return file;
}

EmbeddingFile read_embedding_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "file not found: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_embedding_file(ss.str());
}

void validate_embedding_file(const EmbeddingFile& file) {
  for (const auto& [id, sides] : file.by_pair) {
    if (!sides.first) throw Error(ErrorCode::Validation, "pair '" + id + "' has no reference embeddings");
    if (!sides.second) throw Error(ErrorCode::Validation, "pair '" + id + "' has no candidate embeddings");
  }
}

CorpusScores score_pairs(const std::vector<GenerationPair>& pairs, const EmbeddingFile& embeddings) {
  std::vector<std::pair<TokenEmbeddings, TokenEmbeddings>> inputs;
  for (const auto& p : pairs) {
    auto it = embeddings.by_pair.find(p.record_id);
    if (it == embeddings.by_pair.end() || !it->second.first || !it->second.second)
      throw Error(ErrorCode::Validation, "no embeddings for pair '" + p.record_id + "'");
    inputs.emplace_back(*it->second.first, *it->second.second);
  }
  return corpus_scores(inputs);
}

std::vector<double> external_score(const std::vector<GenerationPair>& pairs, const std::string& scorer_command) {
  char tmpl[] = "/tmp/reqforge-pairs-XXXXXX";
  int fd = mkstemp(tmpl);
  if (fd < 0) throw Error(ErrorCode::Io, "cannot create temporary pairs file");
  close(fd);
  const std::string input_path = tmpl;
  struct Cleanup {
    std::string path;
    ~Cleanup() { std::remove(path.c_str()); }
  } cleanup{input_path};

  {
    std::vector<json> rows;
    for (const auto& p : pairs) rows.push_back(to_json(p));
    write_jsonl(input_path, rows);
  }

  const std::string cmd = "(" + scorer_command + ") < '" + input_path + "'";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw Error(ErrorCode::ScorerFailed, "cannot start scorer: " + scorer_command);
  std::string output;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) output.append(buf, n);
  int status = pclose(pipe);
  int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (exit_code != 0) throw Error(ErrorCode::ScorerFailed, "scorer exited with code " + std::to_string(exit_code));

  std::vector<double> scores;
  std::istringstream lines(output);
  std::string line;
  while (std::getline(lines, line)) {
    auto t = normalize_text(line);
    if (t.empty()) continue;
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno != 0 || !std::isfinite(v))
      throw Error(ErrorCode::ScorerFailed, "scorer printed a non-numeric line: '" + t + "'");
    scores.push_back(v);
  }
  if (scores.size() != pairs.size())
    throw Error(ErrorCode::ScoreCountMismatch, "scorer returned " + std::to_string(scores.size()) + " scores for " +
                                                   std::to_string(pairs.size()) + " pairs");
  return scores;
}

}  // namespace reqforge::similarity
