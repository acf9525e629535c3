#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reqforge/domain.hpp"

namespace reqforge::similarity {

enum class Side { Reference, Candidate };

std::string to_string(Side s);

/// Token vectors for one side of one pair. `vectors` is row-major,
/// tokens.size() rows of `dim` columns.
struct TokenEmbeddings {
  std::string pair_id;
  Side side = Side::Reference;
  std::vector<std::string> tokens;
  std::size_t dim = 0;
  std::vector<double> vectors;

  std::size_t rows() const { return tokens.size(); }
  const double* row(std::size_t i) const { return vectors.data() + i * dim; }
  /// Throws Error(EmptySide) or Error(Validation) when the invariants fail.
  void validate() const;
};

struct ScoreTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Harmonic mean with f1 = 0 when p + r = 0.
double harmonic_f1(double precision, double recall);

/// Greedy max-cosine matching. Recall averages each reference token's best
/// candidate match; precision averages each candidate token's best reference
/// match. Negative cosines count as 0. No idf weighting, no rescaling.
ScoreTriple greedy_scores(const TokenEmbeddings& reference, const TokenEmbeddings& candidate);

struct PairScore {
  std::string pair_id;
  ScoreTriple score;
};

struct CorpusScores {
  ScoreTriple corpus;  // arithmetic mean of the per-pair triples
  std::vector<PairScore> pairs;
};

/// Errors are rethrown with the offending pair id prefixed.
CorpusScores corpus_scores(const std::vector<std::pair<TokenEmbeddings, TokenEmbeddings>>& pairs);

/// Parsed embedding file: header line {"dim": d} then one TokenEmbeddings per
/// line. Keyed by pair id.
struct EmbeddingFile {
  std::size_t dim = 0;
  std::map<std::string, std::pair<std::optional<TokenEmbeddings>, std::optional<TokenEmbeddings>>> by_pair;
};

EmbeddingFile parse_embedding_file(std::string_view text);
EmbeddingFile read_embedding_file(const std::string& path);
/// Checks the header, dimensions and that both sides are present for every pair.
void validate_embedding_file(const EmbeddingFile& file);

json to_json(const TokenEmbeddings& e);
TokenEmbeddings token_embeddings_from_json(const json& j, std::size_t dim);
json to_json(const ScoreTriple& s);

/// Scores every generation pair against its embeddings. Missing embeddings
/// raise Error(Validation) naming the pair.
CorpusScores score_pairs(const std::vector<GenerationPair>& pairs, const EmbeddingFile& embeddings);

/// Runs an external scorer. The command reads the pairs as JSONL on stdin
/// and writes one real per line on stdout.
std::vector<double> external_score(const std::vector<GenerationPair>& pairs, const std::string& scorer_command);

}  // namespace reqforge::similarity
