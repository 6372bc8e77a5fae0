#pragma once

// Dataset records, split planning and deterministic parallel generation
// shared by both generators.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "anchorlab/error.hpp"
#include "anchorlab/rng.hpp"
#include "json.hpp"

namespace anchorlab {

inline constexpr const char* kFormatVersion = "anchorlab/1";

enum class DatasetKind { GraphLA, GraphLI };

inline std::string to_string(DatasetKind k) { return k == DatasetKind::GraphLA ? "graphla" : "graphli"; }

inline DatasetKind parse_dataset_kind(const std::string& s) {
  if (s == "graphla") return DatasetKind::GraphLA;
  if (s == "graphli") return DatasetKind::GraphLI;
  throw InputError("unknown dataset kind '" + s + "'");
}

// One persisted dataset item (one JSON line).
struct Record {
  std::string id;
  DatasetKind dataset = DatasetKind::GraphLA;
  std::string question;
  std::string answer;
  bool answerable = true;
  std::string trajectory;
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();
};

inline nlohmann::ordered_json to_json(const Record& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["dataset"] = to_string(r.dataset);
  j["question"] = r.question;
  j["answer"] = r.answer;
  j["label"] = r.answerable ? "answerable" : "unanswerable";
  j["trajectory"] = r.trajectory;
  j["meta"] = r.meta;
  return j;
}

inline Record record_from_json(const nlohmann::ordered_json& j) {
  Record r;
  try {
    r.id = j.at("id").get<std::string>();
    r.dataset = parse_dataset_kind(j.at("dataset").get<std::string>());
    r.question = j.at("question").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    const auto label = j.at("label").get<std::string>();
    if (label != "answerable" && label != "unanswerable") throw InputError("bad label '" + label + "'");
    r.answerable = label == "answerable";
    r.trajectory = j.at("trajectory").get<std::string>();
    r.meta = j.at("meta");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed record: ") + e.what());
  }
  return r;
}

inline void write_records(const std::string& path, const std::vector<Record>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::vector<Record> read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::vector<Record> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::ordered_json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// Inclusive integer interval.
struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  bool contains(std::int64_t x) const { return lo <= x && x <= hi; }
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  std::size_t total() const { return train + val + test; }
  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

// 9:1:1 split of a per-class pool.
inline SplitSizes ratio_split(std::size_t per_class) {
  const std::size_t held = (per_class + 5) / 11;
  return {per_class - 2 * held, held, held};
}

// Spread `total` items over `units` as evenly as possible, earlier units
// receiving the remainder.
inline std::vector<std::size_t> distribute(std::size_t total, std::size_t units) {
  if (units == 0) return {};
  std::vector<std::size_t> out(units, total / units);
  for (std::size_t i = 0; i < total % units; ++i) ++out[i];
  return out;
}

// Runs fn(i) for i in [0, n) across worker threads; results keep index order.
template <typename T>
std::vector<T> parallel_generate(std::size_t n, const std::function<T(std::size_t)>& fn, unsigned workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::optional<T>> slots(n);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      try {
        slots[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  if (workers == 1 || n < 64) {
    run(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t b = 0; b < n; b += chunk) pool.emplace_back(run, b, std::min(n, b + chunk));
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct Splits {
  std::vector<Record> train, val, test;
};

// Shuffles each class pool, deals it into train/val/test per the per-class
// sizes, shuffles every split and assigns ids.
inline Splits assemble_splits(DatasetKind kind, std::vector<Record> answerable, std::vector<Record> unanswerable,
                              const SplitSizes& ans_sizes, const SplitSizes& unans_sizes, std::uint64_t seed) {
  if (answerable.size() != ans_sizes.total() || unanswerable.size() != unans_sizes.total())
    throw InvariantError("assemble_splits: pool sizes do not match split plan");
  Rng rng(derive_seed(seed, 0x5b1175));
  rng.shuffle(answerable);
  rng.shuffle(unanswerable);
  Splits out;
  auto deal = [](std::vector<Record>& pool, const SplitSizes& s, Splits& dst) {
    auto it = pool.begin();
    auto take = [&](std::size_t n, std::vector<Record>& into) {
      into.insert(into.end(), std::make_move_iterator(it), std::make_move_iterator(it + static_cast<std::ptrdiff_t>(n)));
      it += static_cast<std::ptrdiff_t>(n);
    };
    take(s.train, dst.train);
    take(s.val, dst.val);
    take(s.test, dst.test);
  };
  deal(answerable, ans_sizes, out);
  deal(unanswerable, unans_sizes, out);
  const std::string prefix = to_string(kind);
  auto finish = [&](std::vector<Record>& split, const std::string& name) {
    rng.shuffle(split);
    for (std::size_t i = 0; i < split.size(); ++i) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "%06zu", i);
      split[i].id = prefix + "-" + name + "-" + buf;
    }
  };
  finish(out.train, "train");
  finish(out.val, "val");
  finish(out.test, "test");
  return out;
}

}  // namespace anchorlab
