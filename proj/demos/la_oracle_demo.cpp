// Samples one priced graph, renders it, and shows what the exact oracle says
// before and after cutting a path edge.

#include <cstdio>

#include "anchorlab/graphla.hpp"

using namespace anchorlab;

int main() {
  auto cfg = graphla::LaConfig::easy();
  const auto inst = graphla::generate_la_instance(cfg, 3, std::nullopt, 2024);
  std::printf("%s\n\n", inst.question.c_str());
  std::printf("oracle: %s (stored value %lld)\n", graphla::la_oracle(inst.graph).describe().c_str(),
              static_cast<long long>(inst.graph.values[inst.graph.query]));

  for (int d = 1; d < static_cast<int>(inst.graph.path.size()); ++d) {
    const auto cut = graphla::cut_edge(inst.graph, d);
    std::printf("cut at depth %d: %s\n", d, graphla::la_oracle(cut).describe().c_str());
  }
  std::printf("\n%s\n", inst.trajectory.c_str());
}
