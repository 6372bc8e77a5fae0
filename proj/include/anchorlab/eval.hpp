#pragma once

// Answer extraction, grading, accuracy split by answerability, and the
// Major / Random reference baselines.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "anchorlab/dataset.hpp"
#include "anchorlab/rng.hpp"

namespace anchorlab::eval {

inline std::string_view trim(std::string_view s) {
  auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && space(s.front())) s.remove_prefix(1);
  while (!s.empty() && space(s.back())) s.remove_suffix(1);
  return s;
}

// Trimmed content of the last <answer>...</answer> span whose body holds no
// other answer tag.
inline std::optional<std::string> extract_answer(std::string_view text) {
  constexpr std::string_view kOpen = "<answer>";
  constexpr std::string_view kClose = "</answer>";
  std::optional<std::string> last;
  for (std::size_t open = text.find(kOpen); open != std::string_view::npos; open = text.find(kOpen, open + 1)) {
    const std::size_t body = open + kOpen.size();
    const std::size_t close = text.find(kClose, body);
    if (close == std::string_view::npos) break;
    const std::size_t next_open = text.find(kOpen, body);
    if (next_open != std::string_view::npos && next_open < close) continue;
    last = std::string(trim(text.substr(body, close - body)));
  }
  return last;
}

inline bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

inline std::optional<std::int64_t> parse_integer(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

struct GradeOptions {
  bool strict_case = false;
};

inline bool grade(DatasetKind kind, std::string_view expected, const std::optional<std::string>& predicted,
                  GradeOptions opts = {}) {
  if (!predicted) return false;
  const std::string_view got = trim(*predicted);
  expected = trim(expected);
  auto same_word = [&](std::string_view a, std::string_view b) { return opts.strict_case ? a == b : iequals(a, b); };
  if (kind == DatasetKind::GraphLI) {
    if (!iequals(expected, "Yes") && !iequals(expected, "No")) return false;
    return same_word(expected, got);
  }
  if (iequals(expected, "Unknown")) return same_word(expected, got);
  const auto want = parse_integer(expected);
  const auto have = parse_integer(got);
  return want && have && *want == *have;
}

struct EvalRecord {
  std::string id;
  bool answerable = true;
  std::string expected;
  std::optional<std::string> predicted;
  bool correct = false;
  bool format_valid = false;
};

inline EvalRecord evaluate(const Record& r, std::string_view completion, GradeOptions opts = {}) {
  EvalRecord e{r.id, r.answerable, r.answer, extract_answer(completion), false, false};
  e.format_valid = e.predicted.has_value();
  e.correct = grade(r.dataset, r.answer, e.predicted, opts);
  return e;
}

struct Metrics {
  std::size_t n = 0;
  std::size_t n_ans = 0;
  std::size_t n_unans = 0;
  std::optional<double> acc_overall;
  std::optional<double> acc_ans;
  std::optional<double> acc_unans;
  double format_valid_rate = 0;
};

inline Metrics metrics(const std::vector<EvalRecord>& rs) {
  Metrics m;
  std::size_t ok = 0, ok_ans = 0, ok_unans = 0, valid = 0;
  for (const auto& r : rs) {
    ++m.n;
    ok += r.correct;
    valid += r.format_valid;
    if (r.answerable) {
      ++m.n_ans;
      ok_ans += r.correct;
    } else {
      ++m.n_unans;
      ok_unans += r.correct;
    }
  }
  auto ratio = [](std::size_t a, std::size_t b) -> std::optional<double> {
    if (b == 0) return std::nullopt;
    return static_cast<double>(a) / static_cast<double>(b);
  };
  m.acc_overall = ratio(ok, m.n);
  m.acc_ans = ratio(ok_ans, m.n_ans);
  m.acc_unans = ratio(ok_unans, m.n_unans);
  m.format_valid_rate = m.n ? static_cast<double>(valid) / static_cast<double>(m.n) : 0.0;
  return m;
}

inline nlohmann::ordered_json to_json(const Metrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr); };
  return {{"n", m.n},
          {"n_ans", m.n_ans},
          {"n_unans", m.n_unans},
          {"acc_overall", opt(m.acc_overall)},
          {"acc_ans", opt(m.acc_ans)},
          {"acc_unans", opt(m.acc_unans)},
          {"format_valid_rate", m.format_valid_rate}};
}

// Fixed three-decimal rendering; "n/a" marks an empty subset.
inline std::string format_accuracy(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

// Most frequent training answer; ties go to the lexicographically smallest.
inline std::string major_answer(const std::vector<Record>& train) {
  if (train.empty()) throw InputError("major_answer: empty training set");
  std::map<std::string, std::size_t> counts;
  for (const auto& r : train) ++counts[r.answer];
  return std::max_element(counts.begin(), counts.end(),
                          [](const auto& a, const auto& b) { return a.second < b.second; })
      ->first;
}

inline std::string completion_for(const std::string& answer) { return "<answer>" + answer + "</answer>"; }

// GraphLI guesses Yes/No uniformly; GraphLA guesses a uniform integer in a
// wide range, which is essentially never right.
inline std::string random_answer(DatasetKind kind, Rng& rng) {
  if (kind == DatasetKind::GraphLI) return rng.bernoulli(0.5) ? "Yes" : "No";
  return std::to_string(rng.uniform_int(1, 1'000'000));
}

}  // namespace anchorlab::eval
