#pragma once

// Tabular autoregressive policy: the next-token distribution is a softmax
// over a logit row selected by (prompt class, last c completion tokens).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "anchorlab/dataset.hpp"
#include "anchorlab/error.hpp"
#include "anchorlab/rng.hpp"

namespace anchorlab::policy {

using Token = std::uint32_t;
using Gradient = std::vector<double>;

class Vocab {
 public:
  Vocab() = default;
  // begin/end/abstain must be members of `tokens`.
  Vocab(std::vector<std::string> tokens, const std::string& begin, const std::string& end, const std::string& abstain)
      : tokens_(std::move(tokens)) {
    if (tokens_.empty() || tokens_.size() > 64) throw InputError("Vocab: need 1..64 tokens");
    for (Token i = 0; i < tokens_.size(); ++i) {
      if (tokens_[i].empty() || tokens_[i].find_first_of(" \t\n") != std::string::npos)
        throw InputError("Vocab: tokens must be non-empty without whitespace");
      if (!ids_.emplace(tokens_[i], i).second) throw InputError("Vocab: duplicate token '" + tokens_[i] + "'");
    }
    begin_ = id(begin);
    end_ = id(end);
    abstain_ = id(abstain);
  }

  std::size_t size() const { return tokens_.size(); }
  Token id(const std::string& s) const {
    auto it = ids_.find(s);
    if (it == ids_.end()) throw InputError("Vocab: unknown token '" + s + "'");
    return it->second;
  }
  const std::string& symbol(Token t) const {
    if (t >= tokens_.size()) throw InputError("Vocab: token id out of range");
    return tokens_[t];
  }
  const std::vector<std::string>& tokens() const { return tokens_; }
  Token begin() const { return begin_; }
  Token end() const { return end_; }
  Token abstain() const { return abstain_; }

  std::string decode(const std::vector<Token>& ts) const {
    std::string out;
    for (auto t : ts) out += symbol(t);
    return out;
  }

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.tokens_ == b.tokens_ && a.begin_ == b.begin_ && a.end_ == b.end_ && a.abstain_ == b.abstain_;
  }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, Token> ids_;
  Token begin_ = 0, end_ = 0, abstain_ = 0;
};

struct Prompt {
  std::uint32_t cls = 0;  // prompt-class feature
  std::vector<Token> tokens;
};

class PolicyParams {
 public:
  PolicyParams() = default;
  PolicyParams(Vocab vocab, int context_order, std::uint32_t classes)
      : vocab_(std::move(vocab)), order_(context_order), classes_(classes) {
    if (context_order < 0 || context_order > 4) throw InputError("PolicyParams: context order must be in [0,4]");
    if (classes == 0) throw InputError("PolicyParams: need at least one prompt class");
    contexts_ = 1;
    for (int i = 0; i < order_; ++i) contexts_ *= vocab_.size();
    logits_.assign(static_cast<std::size_t>(classes_) * contexts_ * vocab_.size(), 0.0);
  }

  const Vocab& vocab() const { return vocab_; }
  int context_order() const { return order_; }
  std::uint32_t classes() const { return classes_; }
  std::size_t contexts() const { return contexts_; }
  std::size_t rows() const { return static_cast<std::size_t>(classes_) * contexts_; }
  std::size_t size() const { return logits_.size(); }
  std::vector<double>& logits() { return logits_; }
  const std::vector<double>& logits() const { return logits_; }

  // Row for predicting position t of `completion` (only the prefix is read).
  std::size_t row(std::uint32_t cls, const std::vector<Token>& completion, std::size_t t) const {
    if (cls >= classes_) throw InputError("PolicyParams: prompt class out of range");
    std::size_t ctx = 0;
    for (int j = order_; j >= 1; --j) {
      const Token tok = t >= static_cast<std::size_t>(j) ? completion[t - static_cast<std::size_t>(j)] : vocab_.begin();
      ctx = ctx * vocab_.size() + tok;
    }
    return static_cast<std::size_t>(cls) * contexts_ + ctx;
  }

  const double* row_ptr(std::size_t r) const { return logits_.data() + r * vocab_.size(); }
  double* row_ptr(std::size_t r) { return logits_.data() + r * vocab_.size(); }

  bool finite() const {
    return std::all_of(logits_.begin(), logits_.end(), [](double x) { return std::isfinite(x); });
  }

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;

 private:
  Vocab vocab_;
  int order_ = 0;
  std::uint32_t classes_ = 0;
  std::size_t contexts_ = 1;
  std::vector<double> logits_;
};

inline void softmax_row(const double* logits, std::size_t n, std::vector<double>& out, double temperature = 1.0) {
  out.resize(n);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, logits[i] / temperature);
  double z = 0;
  for (std::size_t i = 0; i < n; ++i) z += out[i] = std::exp(logits[i] / temperature - mx);
  for (auto& p : out) p /= z;
}

inline double log_softmax_at(const double* logits, std::size_t n, Token target) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, logits[i]);
  double z = 0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(logits[i] - mx);
  return logits[target] - mx - std::log(z);
}

inline void check_tokens(const PolicyParams& p, const std::vector<Token>& ts) {
  for (auto t : ts) {
    if (t >= p.vocab().size()) throw InputError("policy: unknown token id " + std::to_string(t));
  }
}

// log pi(y_t | x, y_<t) for every position.
inline std::vector<double> logprob(const PolicyParams& p, const Prompt& prompt, const std::vector<Token>& completion) {
  check_tokens(p, completion);
  std::vector<double> out(completion.size());
  const std::size_t v = p.vocab().size();
  for (std::size_t t = 0; t < completion.size(); ++t)
    out[t] = log_softmax_at(p.row_ptr(p.row(prompt.cls, completion, t)), v, completion[t]);
  return out;
}

inline double sequence_logprob(const PolicyParams& p, const Prompt& prompt, const std::vector<Token>& completion) {
  const auto lp = logprob(p, prompt, completion);
  return std::accumulate(lp.begin(), lp.end(), 0.0);
}

// out += sum_t weights[t] * grad log pi(y_t | ...). Each row receives
// weight * (onehot(target) - softmax(row)).
inline void accumulate_grad_logprob(const PolicyParams& p, const Prompt& prompt, const std::vector<Token>& completion,
                                    const std::vector<double>& weights, Gradient& out) {
  check_tokens(p, completion);
  if (weights.size() != completion.size()) throw InvariantError("accumulate_grad_logprob: weight count mismatch");
  if (out.size() != p.size()) out.assign(p.size(), 0.0);
  const std::size_t v = p.vocab().size();
  std::vector<double> probs;
  for (std::size_t t = 0; t < completion.size(); ++t) {
    if (weights[t] == 0.0) continue;
    const std::size_t r = p.row(prompt.cls, completion, t);
    softmax_row(p.row_ptr(r), v, probs);
    double* g = out.data() + r * v;
    for (std::size_t j = 0; j < v; ++j) g[j] -= weights[t] * probs[j];
    g[completion[t]] += weights[t];
  }
}

inline Gradient grad_logprob(const PolicyParams& p, const Prompt& prompt, const std::vector<Token>& completion) {
  Gradient g(p.size(), 0.0);
  accumulate_grad_logprob(p, prompt, completion, std::vector<double>(completion.size(), 1.0), g);
  return g;
}

struct Rollout {
  Prompt prompt;
  std::vector<Token> completion;
  std::vector<double> logprob_old;
  bool injected = false;
};

struct SamplingConfig {
  double temperature = 0.6;
  std::size_t top_k = 20;
  double top_p = 0.95;
  std::size_t max_len = 64;
  bool greedy = false;

  void validate(std::size_t vocab_size) const {
    if (!(temperature > 0)) throw InputError("sampling: temperature must be > 0");
    if (top_k < 1) throw InputError("sampling: top_k must be >= 1");
    if (!(top_p > 0 && top_p <= 1)) throw InputError("sampling: top_p must be in (0, 1]");
    if (max_len < 1) throw InputError("sampling: max_len must be >= 1");
    (void)vocab_size;
  }
};

// Temperature, then top-k, then nucleus truncation over the renormalized
// top-k mass. Tokens tied with the last kept one are kept as well, so equal
// probabilities are never split by token id.
// Logprobs are recorded under the untempered, untruncated distribution.
inline Rollout sample(const PolicyParams& p, const Prompt& prompt, const SamplingConfig& cfg, Rng& rng) {
  cfg.validate(p.vocab().size());
  const std::size_t v = p.vocab().size();
  Rollout r{prompt, {}, {}, false};
  std::vector<double> probs;
  std::vector<Token> order(v);
  while (r.completion.size() < cfg.max_len) {
    const std::size_t row = p.row(prompt.cls, r.completion, r.completion.size());
    const double* logits = p.row_ptr(row);
    Token pick = 0;
    if (cfg.greedy || cfg.top_k == 1) {
      pick = static_cast<Token>(std::max_element(logits, logits + v) - logits);
    } else {
      softmax_row(logits, v, probs, cfg.temperature);
      std::iota(order.begin(), order.end(), Token{0});
      std::stable_sort(order.begin(), order.end(), [&](Token a, Token b) { return probs[a] > probs[b]; });
      auto extend_ties = [&](std::size_t keep) {
        while (keep < v && probs[order[keep]] == probs[order[keep - 1]]) ++keep;
        return keep;
      };
      std::size_t keep = extend_ties(std::min(cfg.top_k, v));
      double kept_mass = 0;
      for (std::size_t i = 0; i < keep; ++i) kept_mass += probs[order[i]];
      double mass = 0;
      for (std::size_t i = 0; i < keep; ++i) {
        mass += probs[order[i]];
        if (mass >= cfg.top_p * kept_mass) {
          keep = extend_ties(i + 1);
          break;
        }
      }
      double total = 0;
      for (std::size_t i = 0; i < keep; ++i) total += probs[order[i]];
      double u = rng.uniform() * total;
      pick = order[keep - 1];
      for (std::size_t i = 0; i < keep; ++i) {
        u -= probs[order[i]];
        if (u < 0) {
          pick = order[i];
          break;
        }
      }
    }
    r.logprob_old.push_back(log_softmax_at(logits, v, pick));
    r.completion.push_back(pick);
    if (pick == p.vocab().end()) break;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Checkpoints: a text header followed by shortest round-trip decimals.

inline constexpr const char* kCheckpointMagic = "anchorlab/1 policy";

inline std::string format_double(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline void save_checkpoint(const PolicyParams& p, std::ostream& out) {
  out << kCheckpointMagic << '\n';
  out << "vocab " << p.vocab().size();
  for (const auto& t : p.vocab().tokens()) out << ' ' << t;
  out << '\n';
  out << "reserved " << p.vocab().symbol(p.vocab().begin()) << ' ' << p.vocab().symbol(p.vocab().end()) << ' '
      << p.vocab().symbol(p.vocab().abstain()) << '\n';
  out << "context_order " << p.context_order() << '\n';
  out << "classes " << p.classes() << '\n';
  const std::size_t v = p.vocab().size();
  for (std::size_t r = 0; r < p.rows(); ++r) {
    const double* row = p.row_ptr(r);
    for (std::size_t j = 0; j < v; ++j) out << (j ? " " : "") << format_double(row[j]);
    out << '\n';
  }
}

inline void save_checkpoint(const PolicyParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  save_checkpoint(p, out);
}

inline PolicyParams load_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) throw InputError("checkpoint: bad header");
  auto expect = [&](const std::string& key) {
    std::string k;
    if (!(in >> k) || k != key) throw InputError("checkpoint: expected '" + key + "'");
  };
  std::size_t n = 0;
  expect("vocab");
  in >> n;
  std::vector<std::string> tokens(n);
  for (auto& t : tokens) in >> t;
  std::string b, e, a;
  expect("reserved");
  in >> b >> e >> a;
  int order = 0;
  std::uint32_t classes = 0;
  expect("context_order");
  in >> order;
  expect("classes");
  in >> classes;
  if (!in) throw InputError("checkpoint: truncated header");
  PolicyParams p(Vocab(std::move(tokens), b, e, a), order, classes);
  for (auto& x : p.logits()) {
    std::string s;
    if (!(in >> s)) throw InputError("checkpoint: truncated logits");
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InputError("checkpoint: bad number '" + s + "'");
  }
  return p;
}

inline PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return load_checkpoint(in);
}

}  // namespace anchorlab::policy
