#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vgcl/common.hpp"
#include "vgcl/rank_ensemble.hpp"

namespace vgcl {

struct HistoryEntry {
  std::string title;
  int year = 0;
  std::vector<std::string> genres;
  double rating = 0.0;
};

struct CandidateEntry {
  std::string title;
  int year = 0;
  std::vector<std::string> genres;
};

/// Reference block drawn from the most similar user: their full history and
/// their most recent rated items, presented as the example's graded answer.
struct FewShotExample {
  std::vector<HistoryEntry> history;
  std::vector<HistoryEntry> rated_items;
};

enum class PromptMode { kZeroShot, kFewShot };

struct RerankRequest {
  // pipeline metadata (lets a simulator backend act without text)
  Index user = -1;
  std::vector<Index> candidate_items;  // item-local, retrieval order

  std::vector<HistoryEntry> history;  // chronological, oldest first
  std::vector<CandidateEntry> candidates;
  std::optional<FewShotExample> fewshot;
  PromptMode mode = PromptMode::kFewShot;
  bool include_reasoning = true;
};

/// Candidate slot letters are 'A' + slot, in retrieval order.
char slot_letter(int slot);

/// "1. Heat (1995) [Action|Crime] - Rating: 4.5"
std::string format_history_line(int position, const HistoryEntry& entry);

/// Deterministic rendering of the reranking prompt. Requires a non-empty
/// history and 2..26 candidates; few-shot mode requires an example.
std::string build_prompt(const RerankRequest& request);

enum class ParseError {
  kNone,
  kNoOutputTag,
  kInvalidLetter,
  kDuplicateLetter,
  kWrongLength,
};

const char* parse_error_name(ParseError error);

struct ParseResult {
  std::optional<Permutation> perm;
  ParseError error = ParseError::kNone;
  std::string detail;

  bool ok() const { return perm.has_value(); }
};

/// Extracts the first <output>...</output> span and reads it as a
/// hyphen-separated letter list; the list position is the 0-indexed rank.
/// Total over arbitrary input: returns a value or a typed error.
ParseResult parse_permutation(std::string_view text, int k) noexcept;

/// Canonical "<output>B-A-C</output>" rendering; parse_permutation of it
/// returns the same permutation.
std::string render_output(const Permutation& perm);

}  // namespace vgcl
