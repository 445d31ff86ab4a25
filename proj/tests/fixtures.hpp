#pragma once

#include "pfreg/demo.hpp"
#include "pfreg/random.hpp"

// Random colour-class graph whose number of classes depends on q mod 3, so
// no single partition shape works in every field.
inline pfreg::BipartiteDefinableGraph adversarial_graph() {
  auto g = pfreg::paley_graph();
  g.name = "adversarial";
  g.edge_hook = [](const pfreg::FieldSpec& f, std::span<const std::uint32_t> x, std::span<const std::uint32_t> y) {
    const std::uint64_t q = f.order();
    const std::uint64_t colors = 2 + q % 3;
    return pfreg::splitmix64(q * 1000 + x[0]) % colors == pfreg::splitmix64(q * 7777 + y[0]) % colors;
  };
  return g;
}

inline std::vector<pfreg::FieldSpec> prime_fields(std::initializer_list<std::uint64_t> ps) {
  std::vector<pfreg::FieldSpec> out;
  for (auto p : ps) out.push_back(pfreg::FieldSpec::make(p, 1));
  return out;
}

#ifndef PFREG_GRAPHS_DIR
#define PFREG_GRAPHS_DIR "graphs"
#endif

inline std::string graph_path(const std::string& name) { return std::string(PFREG_GRAPHS_DIR) + "/" + name; }
