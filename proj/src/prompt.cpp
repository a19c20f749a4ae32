#include "vgcl/prompt.hpp"

#include <cstdio>
#include <sstream>

namespace vgcl {
namespace {

std::string join_genres(const std::vector<std::string>& genres) {
  std::string out;
  for (std::size_t i = 0; i < genres.size(); ++i) {
    if (i) out += '|';
    out += genres[i];
  }
  return out;
}

std::string letter_example(int k) {
  std::string out;
  for (int s = 0; s < k; ++s) {
    if (s) out += '-';
    out += slot_letter(s);
  }
  return out;
}

}  // namespace

char slot_letter(int slot) { return static_cast<char>('A' + slot); }

std::string format_history_line(int position, const HistoryEntry& entry) {
  char rating[16];
  std::snprintf(rating, sizeof(rating), "%.1f", entry.rating);
  std::ostringstream line;
  line << position << ". " << entry.title << " (" << entry.year << ") ["
       << join_genres(entry.genres) << "] - Rating: " << rating;
  return line.str();
}

std::string build_prompt(const RerankRequest& request) {
  const int k = static_cast<int>(request.candidates.size());
  if (request.history.empty()) throw Error("build_prompt: empty history");
  if (k < 2) throw Error("build_prompt: need at least 2 candidates");
  if (k > 26) throw Error("build_prompt: candidate letters exhausted (K > 26)");
  const bool few_shot = request.mode == PromptMode::kFewShot;
  if (few_shot && !request.fewshot.has_value())
    throw Error("build_prompt: few-shot mode requires an example");

  std::ostringstream p;
  p << "You are a movie recommendation system. Given the user history in "
       "chronological order, recommend an item from the candidate pool with "
       "its index letter.\n\n";

  p << "USER HISTORY:\n";
  for (std::size_t i = 0; i < request.history.size(); ++i)
    p << format_history_line(static_cast<int>(i) + 1, request.history[i])
      << '\n';
  p << "The user history shows the movies the user has watched in "
       "chronological order. The first movie is the oldest one the user "
       "watched, and the last movie is the most recent one. Each entry "
       "follows this format: [Position]. [Movie Title] ([Release Year]) "
       "[Genres] - Rating: [User Rating]\n"
       "The user rating ranges from 1.0 to 5.0, with 5.0 being the highest "
       "level of enjoyment.\n\n";

  p << "TOP " << k << " CANDIDATE MOVIE LIST:\n";
  for (int s = 0; s < k; ++s) {
    const CandidateEntry& c = request.candidates[s];
    p << slot_letter(s) << ". " << c.title << " (" << c.year << ") ["
      << join_genres(c.genres) << "]\n";
  }
  p << "Each candidate movie is listed with an index letter (A, B, etc.) "
       "followed by the movie title, release year, and genres.\n";

  if (few_shot) {
    const FewShotExample& ex = *request.fewshot;
    p << "\nREFERENCE EXAMPLE: A similar user had the following history:\n";
    for (std::size_t i = 0; i < ex.history.size(); ++i)
      p << format_history_line(static_cast<int>(i) + 1, ex.history[i]) << '\n';
    p << "This user rated the candidate product as:\n";
    for (std::size_t i = 0; i < ex.rated_items.size(); ++i)
      p << format_history_line(static_cast<int>(i) + 1, ex.rated_items[i])
        << '\n';
  }

  p << "\nYour task is to reorder these candidates based on the user's "
       "preferences, where the first movie should be the one the user would "
       "most likely enjoy, and subsequent movies represent decreasing levels "
       "of preference";
  if (few_shot) p << ", and based on the reference example, too";
  p << ". ";
  if (request.include_reasoning) {
    p << "Please analyze and summarize the user's preferences in paragraph "
         "form, and write it in <think></think> tags at the beginning of "
         "your response. Then, explain your reasoning for the ordering of "
         "the candidate movies and write it in <reasoning></reasoning> tags. "
         "Finally, provide your recommended ordering of ALL candidates "
         "movies as a hyphen-separated list of indices (e.g., "
      << letter_example(k) << ") and place it in <output></output> tags.\n\n";
  } else {
    p << "Provide your recommended ordering of ALL candidates movies as a "
         "hyphen-separated list of indices (e.g., "
      << letter_example(k)
      << ") and place it in <output></output> tags, with no other text.\n\n";
  }

  p << "Make sure to include ALL " << k
    << " movie indices in your response. The first index should represent "
       "the movie you believe the user would enjoy most, with subsequent "
       "indices representing decreasing levels of preference.\n";
  return p.str();
}

const char* parse_error_name(ParseError error) {
  switch (error) {
    case ParseError::kNone: return "none";
    case ParseError::kNoOutputTag: return "no_output_tag";
    case ParseError::kInvalidLetter: return "invalid_letter";
    case ParseError::kDuplicateLetter: return "duplicate_letter";
    case ParseError::kWrongLength: return "wrong_length";
  }
  return "unknown";
}

ParseResult parse_permutation(std::string_view text, int k) noexcept {
  const auto fail = [](ParseError e, std::string detail) {
    ParseResult r;
    r.error = e;
    r.detail = std::move(detail);
    return r;
  };
  if (k < 1 || k > 26) return fail(ParseError::kWrongLength, "K out of range");

  constexpr std::string_view open = "<output>";
  constexpr std::string_view close = "</output>";
  const std::size_t begin = text.find(open);
  if (begin == std::string_view::npos)
    return fail(ParseError::kNoOutputTag, "missing <output> tag");
  const std::size_t body_start = begin + open.size();
  const std::size_t end = text.find(close, body_start);
  if (end == std::string_view::npos)
    return fail(ParseError::kNoOutputTag, "missing </output> tag");
  const std::string_view body = text.substr(body_start, end - body_start);

  const auto trim = [](std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                          s.front() == '\n' || s.front() == '\r'))
      s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                          s.back() == '\n' || s.back() == '\r'))
      s.remove_suffix(1);
    return s;
  };

  Permutation perm;
  perm.ranks.assign(k, -1);
  int rank = 0;
  std::size_t pos = 0;
  while (true) {
    const std::size_t hyphen = body.find('-', pos);
    const std::string_view token =
        trim(hyphen == std::string_view::npos ? body.substr(pos)
                                              : body.substr(pos, hyphen - pos));
    if (token.size() != 1 || token[0] < 'A' || token[0] >= 'A' + k)
      return fail(ParseError::kInvalidLetter,
                  "invalid slot letter '" + std::string(token) + "'");
    const int slot = token[0] - 'A';
    if (rank >= k)
      return fail(ParseError::kWrongLength, "more than K letters");
    if (perm.ranks[slot] != -1)
      return fail(ParseError::kDuplicateLetter,
                  std::string("duplicate letter '") + token[0] + "'");
    perm.ranks[slot] = rank++;
    if (hyphen == std::string_view::npos) break;
    pos = hyphen + 1;
  }
  if (rank != k) return fail(ParseError::kWrongLength, "fewer than K letters");

  ParseResult r;
  r.perm = std::move(perm);
  return r;
}

std::string render_output(const Permutation& perm) {
  if (!perm.is_valid()) throw Error("render_output: invalid permutation");
  std::vector<int> by_rank(perm.size());
  for (int slot = 0; slot < perm.size(); ++slot)
    by_rank[perm.ranks[slot]] = slot;
  std::string out = "<output>";
  for (int r = 0; r < perm.size(); ++r) {
    if (r) out += '-';
    out += slot_letter(by_rank[r]);
  }
  out += "</output>";
  return out;
}

}  // namespace vgcl
