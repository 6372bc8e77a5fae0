#pragma once

// Re-derives labels of persisted records from their stored structure and
// checks them against what was written.

#include <string>
#include <vector>

#include "anchorlab/dataset.hpp"
#include "anchorlab/eval.hpp"
#include "anchorlab/graphla.hpp"
#include "anchorlab/graphli.hpp"

namespace anchorlab::verify {

struct Finding {
  std::string id;
  std::string problem;
};

struct Report {
  std::size_t records = 0;
  std::size_t agree = 0;
  std::size_t answerable = 0;
  std::size_t unanswerable = 0;
  std::size_t trajectory_ok = 0;
  std::vector<Finding> findings;

  double agreement() const { return records ? static_cast<double>(agree) / static_cast<double>(records) : 1.0; }
  double trajectory_rate() const {
    return records ? static_cast<double>(trajectory_ok) / static_cast<double>(records) : 1.0;
  }
  bool ok() const { return findings.empty(); }
};

// Empty string means the record checks out.
inline std::string check_la(const Record& r) {
  using graphla::OracleResult;
  std::vector<graphla::LinearEdge> edges;
  std::vector<std::int64_t> values;
  graph::NodeId root = 0, query = 0;
  std::optional<graphla::LinearEdge> removed;
  try {
    for (const auto& e : r.meta.at("edges")) edges.push_back(graphla::edge_from_json(e));
    values = r.meta.at("values").get<std::vector<std::int64_t>>();
    root = r.meta.at("root").get<graph::NodeId>();
    query = r.meta.at("query").get<graph::NodeId>();
    if (!r.meta.at("removed_edge").is_null()) removed = graphla::edge_from_json(r.meta.at("removed_edge"));
  } catch (const std::exception& e) {
    return std::string("unreadable meta: ") + e.what();
  }
  if (root >= values.size() || query >= values.size()) return "root or query out of range";
  for (const auto& e : edges) {
    if (e.m >= values.size() || e.n >= values.size()) return "edge endpoint out of range";
    if (graphla::edge_constant(e.a, e.b, e.form, values[e.m], values[e.n]) != e.c)
      return "edge equation inconsistent with stored values";
  }
  const OracleResult res = graphla::la_oracle(edges, {{root, values[root]}}, query);
  if (res.kind == OracleResult::Kind::Inconsistent) return "system is inconsistent";
  const bool answerable = res.unique();
  if (answerable != r.answerable) return "label disagrees with oracle (" + res.describe() + ")";
  const std::string expected = answerable ? res.value.str() : "Unknown";
  if (r.answer != expected) return "answer '" + r.answer + "' disagrees with oracle '" + expected + "'";
  if (answerable && removed) return "answerable record carries a removed edge";
  if (!answerable) {
    if (!removed) return "unanswerable record without a removed edge";
    auto restored = edges;
    restored.push_back(*removed);
    const auto back = graphla::la_oracle(restored, {{root, values[root]}}, query);
    if (!back.unique() || back.value != values[query]) return "restoring the removed edge does not restore the answer";
  }
  return {};
}

inline std::string check_li(const Record& r) {
  graphli::LiInstance inst;
  try {
    inst = graphli::instance_from_record(r);
  } catch (const std::exception& e) {
    return std::string("unreadable meta: ") + e.what();
  }
  const auto closure = graphli::li_closure(inst.facts, inst.edges);
  const bool yes = closure.contains(inst.query);
  if (yes != r.answerable) return "label disagrees with forward closure";
  if (r.answer != (yes ? "Yes" : "No")) return "answer '" + r.answer + "' disagrees with forward closure";
  if (logic::has_contradiction(closure)) return "closure contains a contradiction";
  if (yes == inst.intervention.has_value()) return "intervention field inconsistent with label";
  std::vector<logic::Formula> all = inst.facts;
  all.push_back(inst.query);
  if (yes && logic::within_truth_table_cap(all) && !logic::entails(inst.facts, inst.query))
    return "query derivable but not entailed";
  if (!yes && logic::within_truth_table_cap(std::span(&inst.query, 1)) && logic::is_tautology(inst.query))
    return "unanswerable query is a tautology";
  if (yes) {
    std::vector<graphli::LiEdge> path_only;
    for (auto p : inst.path) path_only.push_back(inst.edges[p]);
    if (!graphli::li_closure(inst.facts, path_only).contains(inst.query)) return "label depends on distractor edges";
  } else {
    graphli::LiInstance back = inst;
    graphli::revert_intervention(back);
    if (!back.answerable()) return "reverting the intervention does not restore answerability";
  }
  return {};
}

inline Report verify_records(const std::vector<Record>& records) {
  Report rep;
  for (const auto& r : records) {
    ++rep.records;
    (r.answerable ? rep.answerable : rep.unanswerable) += 1;
    std::string problem = r.dataset == DatasetKind::GraphLA ? check_la(r) : check_li(r);
    if (eval::grade(r.dataset, r.answer, eval::extract_answer(r.trajectory))) {
      ++rep.trajectory_ok;
    } else if (problem.empty()) {
      problem = "trajectory answer does not grade correct";
    }
    if (problem.empty()) {
      ++rep.agree;
    } else {
      rep.findings.push_back({r.id, problem});
    }
  }
  return rep;
}

}  // namespace anchorlab::verify
