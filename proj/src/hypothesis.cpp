#include "contrarank/hypothesis.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace contrarank {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string> tokenize_simple(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::size_t b = i, e = j;
    while (b < e && is_punct(text[b])) ++b;
    while (e > b && is_punct(text[e - 1])) --e;
    if (b < e) {
      std::string tok(text.substr(b, e - b));
      std::transform(tok.begin(), tok.end(), tok.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      tokens.push_back(std::move(tok));
    }
    i = j;
  }
  return tokens;
}

OverlapResult token_overlap(std::string_view answer, std::string_view statement) {
  const auto answer_toks = tokenize_simple(answer);
  const auto statement_toks = tokenize_simple(statement);
  const std::set<std::string> distinct(answer_toks.begin(), answer_toks.end());
  const std::set<std::string> present(statement_toks.begin(), statement_toks.end());

  OverlapResult r;
  r.answer_tokens = distinct.size();
  for (const auto& t : distinct) r.matched_tokens += present.count(t);
  r.ratio = r.answer_tokens == 0
                ? 1.0
                : static_cast<double>(r.matched_tokens) / static_cast<double>(r.answer_tokens);
  return r;
}

std::string postprocess_hypothesis(std::string_view answer, std::string_view statement) {
  if (token_overlap(answer, statement).ratio < kMinAnswerOverlap) {
    std::string out(statement);
    out += ' ';
    out += answer;
    return out;
  }
  return std::string(statement);
}

}  // namespace contrarank
