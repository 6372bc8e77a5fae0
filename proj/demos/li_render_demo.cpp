// Renders one answerable and one unanswerable implication instance and
// checks the labels with forward closure.

#include <cstdio>

#include "anchorlab/graphli.hpp"

using namespace anchorlab;

int main() {
  const auto cfg = graphli::LiConfig::easy();
  for (auto kind : {std::optional<graph::InterventionKind>{}, std::optional{graph::InterventionKind::FalsePremise}}) {
    const auto g = graphli::generate_li_instance(cfg, 3, kind, 7);
    std::printf("=== %s ===\n%s\n\n", g.record.answerable ? "answerable" : "unanswerable", g.record.question.c_str());
    const auto inst = graphli::instance_from_record(g.record);
    std::printf("closure derives query: %s\n\n", inst.answerable() ? "yes" : "no");
  }
}
