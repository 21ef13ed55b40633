#include "quadopt/features.hpp"

#include "quadopt/errors.hpp"

namespace quadopt {

namespace {

std::vector<Region> refine(const std::vector<Region>& regions) {
  std::vector<Region> out;
  for (const Region& r : regions) {
    if (split_growth(r) == 0) {
      out.push_back(r);
    } else {
      for (const Region& c : split_region(r)) out.push_back(c);
    }
  }
  return out;
}

}  // namespace

FeatureMap::FeatureMap(GridDims dims) : dims_(dims) {
  if (dims.rows < 1 || dims.cols < 1 || dims.layers < 1) {
    throw DimensionMismatchError("feature map dimensions must be positive");
  }
  const Region root{0, dims.rows - 1, 0, dims.cols - 1};
  std::array<std::vector<Region>, kLevels> levels;
  levels[0] = {root};
  levels[1] = refine(levels[0]);
  levels[2] = refine(levels[1]);
  for (int i = 0; i < dims.rows; ++i) {
    for (int j = 0; j < dims.cols; ++j) levels[3].push_back({i, i, j, j});
  }

  cell_features_.resize(static_cast<std::size_t>(dims.cells()));
  for (int layer = 0; layer < dims.layers; ++layer) {
    for (int level = 0; level < kLevels; ++level) {
      for (const Region& r : levels[static_cast<std::size_t>(level)]) {
        const auto index = static_cast<std::uint32_t>(blocks_.size());
        blocks_.push_back({layer, level, r});
        inv_area_.push_back(1.0 / r.area());
        for (int i = r.r_start; i <= r.r_end; ++i) {
          for (int j = r.c_start; j <= r.c_end; ++j) {
            const auto cell =
                static_cast<std::size_t>((layer * dims.rows + i) * dims.cols + j);
            cell_features_[cell][static_cast<std::size_t>(level)] = index;
          }
        }
      }
    }
  }
}

std::vector<double> FeatureMap::compute(const DesignMatrix& design) const {
  std::vector<double> out(size());
  compute_into(design, out);
  return out;
}

void FeatureMap::compute_into(const DesignMatrix& design, std::span<double> out) const {
  if (design.dims() != dims_) {
    throw DimensionMismatchError("design " + to_string(design.dims()) +
                                 " does not match feature map " + to_string(dims_));
  }
  std::fill(out.begin(), out.end(), 0.0);
  const auto cells = design.cells();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (!cells[c]) continue;
    for (std::uint32_t f : cell_features_[c]) out[f] += inv_area_[f];
  }
}

std::vector<double> FeatureMap::fold(std::span<const double> weights) const {
  if (weights.size() != size()) {
    throw DimensionMismatchError("fold: weight vector length does not match features");
  }
  std::vector<double> out(cell_features_.size(), 0.0);
  for (std::size_t c = 0; c < cell_features_.size(); ++c) {
    double acc = 0.0;
    for (std::uint32_t f : cell_features_[c]) acc += weights[f] * inv_area_[f];
    out[c] = acc;
  }
  return out;
}

std::size_t FeatureMap::feature_of(int layer, int i, int j, int level) const {
  const auto cell = static_cast<std::size_t>((layer * dims_.rows + i) * dims_.cols + j);
  return cell_features_.at(cell).at(static_cast<std::size_t>(level));
}

}  // namespace quadopt
