#include "quadopt/layout.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "quadopt/errors.hpp"

namespace quadopt {

namespace {

int midpoint(int lo, int hi) noexcept { return (lo + hi) / 2; }

bool splits_rows(SplitKind kind) noexcept { return kind != SplitKind::kCols; }
bool splits_cols(SplitKind kind) noexcept { return kind != SplitKind::kRows; }

bool kind_fits(SplitKind kind, const Region& region) noexcept {
  return (!splits_rows(kind) || region.rows() >= 2) &&
         (!splits_cols(kind) || region.cols() >= 2);
}

std::string region_text(const Region& r) {
  return "(" + std::to_string(r.r_start) + ".." + std::to_string(r.r_end) +
         ", " + std::to_string(r.c_start) + ".." + std::to_string(r.c_end) + ")";
}

}  // namespace

int split_growth(const Region& region) noexcept {
  if (region.rows() >= 2 && region.cols() >= 2) return 3;
  if (region.rows() >= 2 || region.cols() >= 2) return 1;
  return 0;
}

SplitKind natural_split_kind(const Region& region) {
  if (region.rows() >= 2 && region.cols() >= 2) return SplitKind::kQuad;
  if (region.rows() >= 2) return SplitKind::kRows;
  if (region.cols() >= 2) return SplitKind::kCols;
  throw DegenerateRegionError("cannot split 1x1 region " + region_text(region));
}

std::vector<Region> split_region(const Region& region) {
  const SplitKind kind = natural_split_kind(region);
  return split_region_at(region, kind, midpoint(region.r_start, region.r_end),
                         midpoint(region.c_start, region.c_end));
}

std::vector<Region> split_region_at(const Region& region, SplitKind kind,
                                    int split_row, int split_col) {
  if (!kind_fits(kind, region)) {
    throw DegenerateRegionError("split kind does not fit region " +
                                region_text(region));
  }
  if (splits_rows(kind) &&
      (split_row < region.r_start || split_row >= region.r_end)) {
    throw DegenerateRegionError("row split line outside region " +
                                region_text(region));
  }
  if (splits_cols(kind) &&
      (split_col < region.c_start || split_col >= region.c_end)) {
    throw DegenerateRegionError("column split line outside region " +
                                region_text(region));
  }
  const Region& p = region;
  switch (kind) {
    case SplitKind::kQuad:
      return {{p.r_start, split_row, p.c_start, split_col},
              {p.r_start, split_row, split_col + 1, p.c_end},
              {split_row + 1, p.r_end, p.c_start, split_col},
              {split_row + 1, p.r_end, split_col + 1, p.c_end}};
    case SplitKind::kRows:
      return {{p.r_start, split_row, p.c_start, p.c_end},
              {split_row + 1, p.r_end, p.c_start, p.c_end}};
    case SplitKind::kCols:
      return {{p.r_start, p.r_end, p.c_start, split_col},
              {p.r_start, p.r_end, split_col + 1, p.c_end}};
  }
  return {};
}

// ---------------------------------------------------------------------------
// QuadtreeLayout

QuadtreeLayout::QuadtreeLayout(int rows, int cols, std::uint8_t root_state)
    : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) {
    throw DimensionMismatchError("layout grid must be at least 1x1");
  }
  QuadNode root;
  root.region = {0, rows - 1, 0, cols - 1};
  root.state = root_state ? 1 : 0;
  nodes_.push_back(root);
  leaves_.push_back(0);
}

bool QuadtreeLayout::is_leaf(NodeId id) const noexcept {
  return id >= 0 && static_cast<std::size_t>(id) < nodes_.size() &&
         nodes_[static_cast<std::size_t>(id)].is_leaf();
}

void QuadtreeLayout::require_leaf(NodeId id) const {
  if (!is_leaf(id)) {
    throw UnknownLeafError("no leaf with id " + std::to_string(id));
  }
}

std::vector<LeafInfo> QuadtreeLayout::leaves() const {
  std::vector<LeafInfo> out;
  out.reserve(leaves_.size());
  for (NodeId id : leaves_) {
    const QuadNode& n = nodes_[static_cast<std::size_t>(id)];
    out.push_back({id, n.region, n.state});
  }
  return out;
}

std::vector<NodeId> QuadtreeLayout::internal_ids() const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{0};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const QuadNode& n = nodes_[static_cast<std::size_t>(id)];
    if (n.is_leaf()) continue;
    out.push_back(id);
    for (int c = n.child_count - 1; c >= 0; --c) stack.push_back(n.first_child + c);
  }
  return out;
}

void QuadtreeLayout::rebuild_leaf_order() {
  leaves_.clear();
  std::vector<NodeId> stack{0};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    const QuadNode& n = nodes_[static_cast<std::size_t>(id)];
    if (n.is_leaf()) {
      leaves_.push_back(id);
      continue;
    }
    for (int c = n.child_count - 1; c >= 0; --c) stack.push_back(n.first_child + c);
  }
}

NodeId QuadtreeLayout::append_children(NodeId parent, SplitKind kind,
                                       int split_row, int split_col) {
  const Region region = nodes_[static_cast<std::size_t>(parent)].region;
  const std::vector<Region> children =
      split_region_at(region, kind, split_row, split_col);
  const auto first = static_cast<NodeId>(nodes_.size());
  for (const Region& r : children) {
    QuadNode child;
    child.region = r;
    nodes_.push_back(child);
  }
  QuadNode& p = nodes_[static_cast<std::size_t>(parent)];
  p.kind = kind;
  p.split_row = splits_rows(kind) ? split_row : -1;
  p.split_col = splits_cols(kind) ? split_col : -1;
  p.first_child = first;
  p.child_count = static_cast<std::uint8_t>(children.size());
  p.state = 0;
  return first;
}

bool QuadtreeLayout::reassign_regions(NodeId id, const Region& region) {
  QuadNode& n = nodes_[static_cast<std::size_t>(id)];
  n.region = region;
  if (n.is_leaf()) return true;
  if (!kind_fits(n.kind, region)) return false;
  if (splits_rows(n.kind)) {
    n.split_row = std::clamp(n.split_row, region.r_start, region.r_end - 1);
  }
  if (splits_cols(n.kind)) {
    n.split_col = std::clamp(n.split_col, region.c_start, region.c_end - 1);
  }
  const std::vector<Region> children =
      split_region_at(region, n.kind, n.split_row, n.split_col);
  const NodeId first = n.first_child;
  for (std::size_t c = 0; c < children.size(); ++c) {
    if (!reassign_regions(first + static_cast<NodeId>(c), children[c])) return false;
  }
  return true;
}

bool operator==(const QuadtreeLayout& a, const QuadtreeLayout& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_ ||
      a.leaves_.size() != b.leaves_.size()) {
    return false;
  }
  std::vector<std::pair<NodeId, NodeId>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [ia, ib] = stack.back();
    stack.pop_back();
    const QuadNode& x = a.nodes_[static_cast<std::size_t>(ia)];
    const QuadNode& y = b.nodes_[static_cast<std::size_t>(ib)];
    if (x.is_leaf() != y.is_leaf()) return false;
    if (x.is_leaf()) {
      if (x.state != y.state) return false;
      continue;
    }
    if (x.kind != y.kind || x.child_count != y.child_count) return false;
    if (splits_rows(x.kind) && x.split_row != y.split_row) return false;
    if (splits_cols(x.kind) && x.split_col != y.split_col) return false;
    for (int c = 0; c < x.child_count; ++c) {
      stack.emplace_back(x.first_child + c, y.first_child + c);
    }
  }
  return true;
}

QuadtreeLayout split_leaf_with_states(QuadtreeLayout layout, NodeId leaf,
                                      std::span<const std::uint8_t> states) {
  layout.require_leaf(leaf);
  const Region region = layout.node(leaf).region;
  const SplitKind kind = natural_split_kind(region);
  const std::size_t count = kind == SplitKind::kQuad ? 4 : 2;
  if (states.size() != count) {
    throw DimensionMismatchError("split_leaf_with_states needs " +
                                 std::to_string(count) + " states");
  }
  const NodeId first =
      layout.append_children(leaf, kind, midpoint(region.r_start, region.r_end),
                             midpoint(region.c_start, region.c_end));
  for (std::size_t c = 0; c < count; ++c) {
    layout.nodes_[static_cast<std::size_t>(first) + c].state = states[c] ? 1 : 0;
  }
  auto& leaves = layout.leaves_;
  auto pos = std::find(leaves.begin(), leaves.end(), leaf);
  *pos = first;
  std::vector<NodeId> rest;
  for (std::size_t c = 1; c < count; ++c) rest.push_back(first + static_cast<NodeId>(c));
  leaves.insert(pos + 1, rest.begin(), rest.end());
  return layout;
}

QuadtreeLayout split_leaf(QuadtreeLayout layout, NodeId leaf, Rng& rng) {
  layout.require_leaf(leaf);
  const int growth = split_growth(layout.node(leaf).region);
  if (growth == 0) {
    throw DegenerateRegionError("cannot split 1x1 leaf " + std::to_string(leaf));
  }
  std::uint8_t states[4];
  const std::size_t count = static_cast<std::size_t>(growth) + 1;
  for (std::size_t c = 0; c < count; ++c) states[c] = coin(rng) ? 1 : 0;
  return split_leaf_with_states(std::move(layout), leaf,
                                std::span<const std::uint8_t>(states, count));
}

QuadtreeLayout resample_leaf(QuadtreeLayout layout, NodeId leaf, Rng& rng) {
  layout.require_leaf(leaf);
  layout.nodes_[static_cast<std::size_t>(leaf)].state = coin(rng) ? 1 : 0;
  return layout;
}

QuadtreeLayout set_leaf_state(QuadtreeLayout layout, NodeId leaf,
                              std::uint8_t state) {
  layout.require_leaf(leaf);
  layout.nodes_[static_cast<std::size_t>(leaf)].state = state ? 1 : 0;
  return layout;
}

std::optional<QuadtreeLayout> move_split(QuadtreeLayout layout, NodeId node,
                                         Axis axis, int delta) {
  if (node < 0 || static_cast<std::size_t>(node) >= layout.nodes_.size()) {
    return std::nullopt;
  }
  QuadNode& n = layout.nodes_[static_cast<std::size_t>(node)];
  if (n.is_leaf()) return std::nullopt;
  const Region region = n.region;
  if (axis == Axis::kRow) {
    if (!splits_rows(n.kind)) return std::nullopt;
    const int moved = n.split_row + delta;
    if (moved < region.r_start || moved >= region.r_end) return std::nullopt;
    n.split_row = moved;
  } else {
    if (!splits_cols(n.kind)) return std::nullopt;
    const int moved = n.split_col + delta;
    if (moved < region.c_start || moved >= region.c_end) return std::nullopt;
    n.split_col = moved;
  }
  if (!layout.reassign_regions(node, region)) return std::nullopt;
  return layout;
}

// ---------------------------------------------------------------------------
// Reconstruction

void reconstruct_into(const QuadtreeLayout& layout,
                      std::span<std::uint8_t> cells) {
  const int cols = layout.cols();
  for (NodeId id : layout.leaf_ids()) {
    const QuadNode& n = layout.node(id);
    const Region& r = n.region;
    for (int i = r.r_start; i <= r.r_end; ++i) {
      auto row = cells.subspan(static_cast<std::size_t>(i * cols + r.c_start),
                               static_cast<std::size_t>(r.cols()));
      std::fill(row.begin(), row.end(), n.state);
    }
  }
}

DesignMatrix reconstruct(const QuadtreeLayout& layout) {
  DesignMatrix out(GridDims{layout.rows(), layout.cols(), 1});
  reconstruct_into(layout, out.mutable_layer(0));
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void write_node(const QuadtreeLayout& layout, NodeId id, std::string& out) {
  const QuadNode& n = layout.node(id);
  if (n.is_leaf()) {
    out.push_back(n.state ? '1' : '0');
    return;
  }
  const Region& r = n.region;
  const bool default_row = n.split_row == midpoint(r.r_start, r.r_end);
  const bool default_col = n.split_col == midpoint(r.c_start, r.c_end);
  switch (n.kind) {
    case SplitKind::kQuad:
      out.push_back('Q');
      if (!default_row || !default_col) {
        out += '@' + std::to_string(n.split_row) + ',' + std::to_string(n.split_col);
      }
      break;
    case SplitKind::kRows:
      out.push_back('R');
      if (!default_row) out += '@' + std::to_string(n.split_row);
      break;
    case SplitKind::kCols:
      out.push_back('C');
      if (!default_col) out += '@' + std::to_string(n.split_col);
      break;
  }
  out.push_back('(');
  for (int c = 0; c < n.child_count; ++c) write_node(layout, n.first_child + c, out);
  out.push_back(')');
}

}  // namespace

std::string serialize(const QuadtreeLayout& layout) {
  std::string out = std::to_string(layout.rows()) + 'x' +
                    std::to_string(layout.cols()) + ':';
  write_node(layout, layout.root(), out);
  return out;
}

class LayoutParser {
 public:
  explicit LayoutParser(std::string_view text) : text_(text) {}

  QuadtreeLayout parse() {
    const int rows = parse_int("row count");
    expect('x');
    const int cols = parse_int("column count");
    expect(':');
    if (rows < 1 || cols < 1) fail("grid must be at least 1x1");
    QuadtreeLayout layout;
    layout.rows_ = rows;
    layout.cols_ = cols;
    QuadNode root;
    root.region = {0, rows - 1, 0, cols - 1};
    layout.nodes_.push_back(root);
    parse_node(layout, 0);
    if (pos_ != text_.size()) fail("trailing characters");
    layout.rebuild_leaf_order();
    return layout;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  char peek() const {
    if (pos_ >= text_.size()) fail("unexpected end of input");
    return text_[pos_];
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  int parse_int(const char* what) {
    if (pos_ >= text_.size()) fail(std::string("unexpected end of input, expected ") + what);
    int value = 0;
    const char* begin = text_.data() + pos_;
    const char* end = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr == begin) fail(std::string("expected ") + what);
    pos_ += static_cast<std::size_t>(ptr - begin);
    return value;
  }

  void parse_node(QuadtreeLayout& layout, NodeId id) {
    const Region region = layout.nodes_[static_cast<std::size_t>(id)].region;
    const char c = peek();
    if (c == '0' || c == '1') {
      layout.nodes_[static_cast<std::size_t>(id)].state = c == '1' ? 1 : 0;
      ++pos_;
      return;
    }
    SplitKind kind;
    if (c == 'Q') {
      kind = SplitKind::kQuad;
    } else if (c == 'R') {
      kind = SplitKind::kRows;
    } else if (c == 'C') {
      kind = SplitKind::kCols;
    } else {
      fail(std::string("unexpected character '") + c + "'");
    }
    const std::size_t kind_pos = pos_;
    ++pos_;
    if (!kind_fits(kind, region)) {
      pos_ = kind_pos;
      fail("split kind does not fit region " + region_text(region));
    }
    int split_row = midpoint(region.r_start, region.r_end);
    int split_col = midpoint(region.c_start, region.c_end);
    if (peek() == '@') {
      ++pos_;
      if (kind == SplitKind::kQuad) {
        split_row = parse_int("split row");
        expect(',');
        split_col = parse_int("split column");
      } else if (kind == SplitKind::kRows) {
        split_row = parse_int("split row");
      } else {
        split_col = parse_int("split column");
      }
      if ((splits_rows(kind) && (split_row < region.r_start || split_row >= region.r_end)) ||
          (splits_cols(kind) && (split_col < region.c_start || split_col >= region.c_end))) {
        fail("split line outside region " + region_text(region));
      }
    }
    expect('(');
    const NodeId first = layout.append_children(id, kind, split_row, split_col);
    const int count = layout.nodes_[static_cast<std::size_t>(id)].child_count;
    for (int k = 0; k < count; ++k) parse_node(layout, first + k);
    expect(')');
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

QuadtreeLayout deserialize(std::string_view text) { return LayoutParser(text).parse(); }

// ---------------------------------------------------------------------------
// DesignMatrix

std::string to_string(const GridDims& dims) {
  std::string s = std::to_string(dims.rows) + "x" + std::to_string(dims.cols);
  if (dims.layers != 1) s += "x" + std::to_string(dims.layers);
  return s;
}

DesignMatrix::DesignMatrix(GridDims dims)
    : dims_(dims), cells_(static_cast<std::size_t>(dims.cells()), 0) {
  if (dims.rows < 1 || dims.cols < 1 || dims.layers < 1) {
    throw DimensionMismatchError("design dimensions must be positive");
  }
}

std::uint8_t DesignMatrix::at(int layer, int i, int j) const {
  return cells_.at(static_cast<std::size_t>((layer * dims_.rows + i) * dims_.cols + j));
}

void DesignMatrix::set(int layer, int i, int j, std::uint8_t value) {
  cells_.at(static_cast<std::size_t>((layer * dims_.rows + i) * dims_.cols + j)) =
      value ? 1 : 0;
}

std::span<const std::uint8_t> DesignMatrix::layer(int k) const {
  const auto per = static_cast<std::size_t>(dims_.cells_per_layer());
  return std::span<const std::uint8_t>(cells_).subspan(static_cast<std::size_t>(k) * per, per);
}

std::span<std::uint8_t> DesignMatrix::mutable_layer(int k) {
  const auto per = static_cast<std::size_t>(dims_.cells_per_layer());
  return std::span<std::uint8_t>(cells_).subspan(static_cast<std::size_t>(k) * per, per);
}

std::size_t DesignMatrix::count_ones() const noexcept {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

std::string DesignMatrix::bits() const {
  std::string out;
  out.reserve(cells_.size() + static_cast<std::size_t>(dims_.layers));
  const auto per = static_cast<std::size_t>(dims_.cells_per_layer());
  for (std::size_t k = 0; k < cells_.size(); ++k) {
    if (k > 0 && k % per == 0) out.push_back('/');
    out.push_back(cells_[k] ? '1' : '0');
  }
  return out;
}

DesignMatrix DesignMatrix::from_bits(GridDims dims, std::string_view bits) {
  DesignMatrix out(dims);
  const auto per = static_cast<std::size_t>(dims.cells_per_layer());
  std::size_t cell = 0;
  for (std::size_t pos = 0; pos < bits.size(); ++pos) {
    const char c = bits[pos];
    if (c == '/') {
      if (cell == 0 || cell % per != 0 || cell == out.cells_.size()) {
        throw ParseError("misplaced layer separator", pos);
      }
      continue;
    }
    if (c != '0' && c != '1') throw ParseError("expected '0' or '1'", pos);
    if (cell >= out.cells_.size()) throw ParseError("too many cells", pos);
    if (cell > 0 && cell % per == 0 && bits[pos - 1] != '/') {
      throw ParseError("missing layer separator", pos);
    }
    out.cells_[cell++] = c == '1' ? 1 : 0;
  }
  if (cell != out.cells_.size()) throw ParseError("too few cells", bits.size());
  return out;
}

std::strong_ordering DesignMatrix::operator<=>(const DesignMatrix& other) const {
  if (auto c = dims_.layers <=> other.dims_.layers; c != 0) return c;
  if (auto c = dims_.rows <=> other.dims_.rows; c != 0) return c;
  if (auto c = dims_.cols <=> other.dims_.cols; c != 0) return c;
  return std::lexicographical_compare_three_way(cells_.begin(), cells_.end(),
                                                other.cells_.begin(), other.cells_.end());
}

std::size_t DesignHash::operator()(const DesignMatrix& design) const noexcept {
  const auto cells = design.cells();
  const std::string_view bytes(reinterpret_cast<const char*>(cells.data()), cells.size());
  return static_cast<std::size_t>(fnv1a64(bytes));
}

std::vector<std::filesystem::path> write_design_csv(
    const DesignMatrix& design, const std::filesystem::path& prefix) {
  std::vector<std::filesystem::path> written;
  const GridDims& d = design.dims();
  for (int k = 0; k < d.layers; ++k) {
    std::filesystem::path path = prefix;
    path += "_layer" + std::to_string(k) + ".csv";
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (int i = 0; i < d.rows; ++i) {
      for (int j = 0; j < d.cols; ++j) {
        if (j > 0) out << ',';
        out << static_cast<int>(design.at(k, i, j));
      }
      out << '\n';
    }
    written.push_back(path);
  }
  return written;
}

// ---------------------------------------------------------------------------
// LayoutStack

LayoutStack::LayoutStack(std::vector<QuadtreeLayout> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw DimensionMismatchError("layout stack needs at least one layer");
  for (const auto& l : layers_) {
    if (l.rows() != layers_.front().rows() || l.cols() != layers_.front().cols()) {
      throw DimensionMismatchError("layout stack layers differ in size");
    }
  }
}

LayoutStack LayoutStack::root_only(GridDims dims, std::span<const std::uint8_t> states) {
  if (states.size() != static_cast<std::size_t>(dims.layers)) {
    throw DimensionMismatchError("root_only needs one state per layer");
  }
  std::vector<QuadtreeLayout> layers;
  for (std::uint8_t s : states) layers.emplace_back(dims.rows, dims.cols, s);
  return LayoutStack(std::move(layers));
}

GridDims LayoutStack::dims() const noexcept {
  if (layers_.empty()) return {};
  return {layers_.front().rows(), layers_.front().cols(),
          static_cast<int>(layers_.size())};
}

std::size_t LayoutStack::leaf_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.leaf_count();
  return n;
}

void reconstruct_into(const LayoutStack& stack, DesignMatrix& out) {
  if (out.dims() != stack.dims()) out = DesignMatrix(stack.dims());
  for (std::size_t k = 0; k < stack.layer_count(); ++k) {
    reconstruct_into(stack.layer(k), out.mutable_layer(static_cast<int>(k)));
  }
}

DesignMatrix reconstruct(const LayoutStack& stack) {
  DesignMatrix out(stack.dims());
  reconstruct_into(stack, out);
  return out;
}

std::string serialize(const LayoutStack& stack) {
  std::string out;
  for (std::size_t k = 0; k < stack.layer_count(); ++k) {
    if (k > 0) out.push_back('|');
    out += serialize(stack.layer(k));
  }
  return out;
}

LayoutStack deserialize_stack(std::string_view text) {
  std::vector<QuadtreeLayout> layers;
  std::size_t start = 0;
  while (true) {
    const std::size_t bar = text.find('|', start);
    const std::string_view part =
        text.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start);
    try {
      layers.push_back(deserialize(part));
    } catch (const ParseError& e) {
      throw ParseError("malformed layer " + std::to_string(layers.size()),
                       start + e.offset());
    }
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return LayoutStack(std::move(layers));
}

}  // namespace quadopt
