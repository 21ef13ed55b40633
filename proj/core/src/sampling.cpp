#include "quadopt/sampling.hpp"

#include <vector>

namespace quadopt {

bool can_grow(const LayoutStack& stack, std::size_t cap) {
  const std::size_t leaves = stack.leaf_count();
  if (leaves >= cap) return false;
  const std::size_t room = cap - leaves;
  for (const QuadtreeLayout& layer : stack.layers()) {
    for (NodeId id : layer.leaf_ids()) {
      const int growth = split_growth(layer.node(id).region);
      if (growth > 0 && static_cast<std::size_t>(growth) <= room) return true;
    }
  }
  return false;
}

LayoutStack sample_tree_growth(GridDims dims, std::size_t cap, Rng& rng) {
  std::vector<std::uint8_t> states(static_cast<std::size_t>(dims.layers));
  for (auto& s : states) s = coin(rng) ? 1 : 0;
  LayoutStack stack = LayoutStack::root_only(dims, states);

  std::vector<std::vector<NodeId>> fitting(stack.layer_count());
  std::vector<std::size_t> growable;
  while (true) {
    const std::size_t leaves = stack.leaf_count();
    if (leaves >= cap) break;
    const std::size_t room = cap - leaves;
    growable.clear();
    for (std::size_t k = 0; k < stack.layer_count(); ++k) {
      fitting[k].clear();
      const QuadtreeLayout& layer = stack.layer(k);
      for (NodeId id : layer.leaf_ids()) {
        const int growth = split_growth(layer.node(id).region);
        if (growth > 0 && static_cast<std::size_t>(growth) <= room) {
          fitting[k].push_back(id);
        }
      }
      if (!fitting[k].empty()) growable.push_back(k);
    }
    if (growable.empty()) break;
    const std::size_t k = growable[uniform_index(rng, growable.size())];
    const NodeId leaf = fitting[k][uniform_index(rng, fitting[k].size())];
    stack.mutable_layer(k) = split_leaf(std::move(stack.mutable_layer(k)), leaf, rng);
  }
  return stack;
}

DesignMatrix sample_pixel_uniform(GridDims dims, Rng& rng) {
  DesignMatrix out(dims);
  auto cells = out.mutable_cells();
  std::size_t i = 0;
  while (i < cells.size()) {
    std::uint64_t word = rng();
    for (int b = 0; b < 64 && i < cells.size(); ++b, ++i) {
      cells[i] = static_cast<std::uint8_t>((word >> b) & 1U);
    }
  }
  return out;
}

}  // namespace quadopt
