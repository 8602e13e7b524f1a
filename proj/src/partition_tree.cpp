#include "hypertropy/partition_tree.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "hypertropy/lorentz.hpp"

namespace hypertropy {

PartitionTree::PartitionTree(std::size_t num_graph_nodes, double curvature)
    : num_graph_nodes_(num_graph_nodes), curvature_(curvature) {
  TreeNode root;
  root.members.resize(num_graph_nodes);
  std::iota(root.members.begin(), root.members.end(), 0);
  nodes_.push_back(std::move(root));
}

int PartitionTree::add_child(int parent, std::vector<NodeId> members,
                             std::optional<Eigen::VectorXd> coords) {
  if (parent < 0 || static_cast<std::size_t>(parent) >= nodes_.size())
    throw std::out_of_range("add_child: unknown parent");
  std::sort(members.begin(), members.end());
  TreeNode n;
  n.id = static_cast<int>(nodes_.size());
  n.height = nodes_[static_cast<std::size_t>(parent)].height + 1;
  n.members = std::move(members);
  n.parent = parent;
  n.coords = std::move(coords);
  nodes_.push_back(std::move(n));
  nodes_[static_cast<std::size_t>(parent)].children.push_back(nodes_.back().id);
  return nodes_.back().id;
}

int PartitionTree::height() const {
  int h = 0;
  for (const auto& n : nodes_) h = std::max(h, n.height);
  return h;
}

std::vector<int> PartitionTree::nodes_at_height(int h) const {
  std::vector<int> out;
  for (const auto& n : nodes_)
    if (n.height == h) out.push_back(n.id);
  return out;
}

std::vector<int> PartitionTree::leaves() const {
  std::vector<int> out;
  for (const auto& n : nodes_)
    if (n.children.empty()) out.push_back(n.id);
  return out;
}

void PartitionTree::refresh_statistics(const Graph& g) {
  if (g.num_nodes() != num_graph_nodes_) throw std::invalid_argument("graph size differs from tree");
  for (auto& n : nodes_) {
    NodeSubset s(num_graph_nodes_, n.members);
    n.volume = subset_volume(g, s);
    n.cut = cut_weight(g, s);
  }
}

void PartitionTree::validate(bool allow_empty) const {
  if (nodes_.front().members.size() != num_graph_nodes_)
    throw std::logic_error("root module must contain every graph node");
  for (const auto& n : nodes_) {
    if (n.members.empty() && !allow_empty)
      throw std::logic_error("node " + std::to_string(n.id) + " has an empty module");
    if (n.children.empty()) {
      if (n.members.size() > 1)
        throw std::logic_error("leaf " + std::to_string(n.id) + " is not a singleton module");
      continue;
    }
    std::vector<NodeId> covered;
    for (int c : n.children) {
      const TreeNode& child = node(c);
      if (child.parent != n.id) throw std::logic_error("broken parent link at node " + std::to_string(c));
      covered.insert(covered.end(), child.members.begin(), child.members.end());
    }
    std::sort(covered.begin(), covered.end());
    if (covered != n.members)
      throw std::logic_error("children of node " + std::to_string(n.id) +
                             " do not partition its module");
  }
}

AssignmentStack harden(const AssignmentStack& soft) {
  std::vector<Eigen::MatrixXd> levels;
  for (const auto& c : soft.levels()) {
    Eigen::MatrixXd hard = Eigen::MatrixXd::Zero(c.rows(), c.cols());
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < c.cols(); ++j)
        if (c(i, j) > c(i, best)) best = j;
      hard(i, best) = 1.0;
    }
    levels.push_back(std::move(hard));
  }
  return AssignmentStack(std::move(levels));
}

PartitionTree decode(const AssignmentStack& hard, const std::vector<Eigen::MatrixXd>& embeddings,
                     const Graph& g, double curvature) {
  if (!hard.is_hard()) throw std::invalid_argument("decode requires a hard assignment stack");
  const int H = hard.height();
  const auto n = static_cast<std::size_t>(hard.num_leaves());
  if (n != g.num_nodes()) throw std::invalid_argument("stack leaf count differs from graph size");
  const bool with_coords = !embeddings.empty();
  if (with_coords) {
    if (embeddings.size() != static_cast<std::size_t>(H + 1))
      throw std::invalid_argument("decode: need embeddings for heights 0..H");
    const auto widths = hard.widths();
    for (int h = 0; h <= H; ++h)
      if (embeddings[static_cast<std::size_t>(h)].rows() != widths[static_cast<std::size_t>(h)])
        throw std::invalid_argument("decode: embedding rows differ from level width at height " +
                                    std::to_string(h));
  }
  auto coords_of = [&](int h, Eigen::Index k) -> std::optional<Eigen::VectorXd> {
    if (!with_coords) return std::nullopt;
    return Eigen::VectorXd(embeddings[static_cast<std::size_t>(h)].row(k).transpose());
  };

  // members[h][k]: graph nodes under the k-th tree node at height h.
  std::vector<std::vector<std::vector<NodeId>>> members(static_cast<std::size_t>(H + 1));
  members[static_cast<std::size_t>(H)].resize(n);
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(H)][i] = {static_cast<NodeId>(i)};
  for (int h = H; h >= 1; --h) {
    const Eigen::MatrixXd& c = hard.level(h);
    auto& above = members[static_cast<std::size_t>(h - 1)];
    above.assign(static_cast<std::size_t>(c.cols()), {});
    for (Eigen::Index k = 0; k < c.rows(); ++k)
      for (Eigen::Index j = 0; j < c.cols(); ++j)
        if (c(k, j) == 1.0) {
          const auto& sub = members[static_cast<std::size_t>(h)][static_cast<std::size_t>(k)];
          above[static_cast<std::size_t>(j)].insert(above[static_cast<std::size_t>(j)].end(),
                                                    sub.begin(), sub.end());
        }
  }

  PartitionTree t(n, curvature);
  t.node(0).level_index = 0;
  if (with_coords) t.set_root_coords(*coords_of(0, 0));
  std::deque<int> queue{0};
  while (!queue.empty()) {
    const int id = queue.front();
    queue.pop_front();
    const int h = t.node(id).height;
    if (h >= H) continue;
    const int j = t.node(id).level_index;
    const Eigen::MatrixXd& c = hard.level(h + 1);
    for (Eigen::Index k = 0; k < c.rows(); ++k) {
      if (c(k, j) != 1.0) continue;
      auto m = members[static_cast<std::size_t>(h + 1)][static_cast<std::size_t>(k)];
      if (m.empty()) continue;
      const int child = t.add_child(id, std::move(m), coords_of(h + 1, k));
      t.node(child).level_index = static_cast<int>(k);
      queue.push_back(child);
    }
  }
  t.refresh_statistics(g);
  return t;
}

namespace {

std::vector<int> nonempty_children(const PartitionTree& t, int id) {
  std::vector<int> out;
  for (int c : t.node(id).children)
    if (!t.node(c).members.empty()) out.push_back(c);
  return out;
}

// Follows single-child chains with identical modules down to the lowest node.
int chain_bottom(const PartitionTree& t, int id) {
  for (;;) {
    const auto kids = nonempty_children(t, id);
    if (kids.size() != 1 || t.node(kids.front()).members != t.node(id).members) return id;
    id = kids.front();
  }
}

void copy_subtree(const PartitionTree& src, int src_id, PartitionTree& dst, int dst_parent) {
  const int kept = chain_bottom(src, src_id);
  const TreeNode& n = src.node(kept);
  const int id = dst.add_child(dst_parent, n.members, n.coords);
  dst.node(id).level_index = n.level_index;
  dst.node(id).volume = n.volume;
  dst.node(id).cut = n.cut;
  for (int c : nonempty_children(src, kept)) copy_subtree(src, c, dst, id);
}

}  // namespace

PartitionTree repair(const PartitionTree& t) {
  PartitionTree out(t.num_graph_nodes(), t.curvature());
  const TreeNode& root = t.node(t.root());
  if (root.coords) out.set_root_coords(*root.coords);
  out.node(0).level_index = root.level_index;
  out.node(0).volume = root.volume;
  out.node(0).cut = root.cut;
  const int bottom = chain_bottom(t, t.root());
  for (int c : nonempty_children(t, bottom)) copy_subtree(t, c, out, 0);
  return out;
}

Labeling canonical_labels(const Labeling& labels) {
  std::map<int, int> renumber;
  Labeling out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = renumber.try_emplace(labels[i], static_cast<int>(renumber.size()));
    out[i] = it->second;
  }
  return out;
}

Labeling natural_clusters(const PartitionTree& t) {
  Labeling labels(t.num_graph_nodes(), -1);
  const auto& kids = t.node(t.root()).children;
  for (std::size_t c = 0; c < kids.size(); ++c)
    for (NodeId i : t.node(kids[c]).members) labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
  if (kids.empty()) std::fill(labels.begin(), labels.end(), 0);
  return canonical_labels(labels);
}

std::size_t natural_cluster_count(const PartitionTree& t) {
  return std::max<std::size_t>(1, nonempty_children(t, t.root()).size());
}

namespace {

struct FrontierItem {
  std::vector<NodeId> members;
  LorentzPoint point;
  double dist;
  std::vector<int> children;  // tree ids available for splitting
  int group;                  // split generation that produced the item
};

bool closer(const FrontierItem& a, const FrontierItem& b) {
  if (a.dist != b.dist) return a.dist < b.dist;
  return a.members.front() < b.members.front();
}

}  // namespace

Labeling extract_k(const PartitionTree& t, std::size_t k) {
  const std::size_t n = t.num_graph_nodes();
  if (k < 1 || k > n) throw std::invalid_argument("extract_k: K must lie in [1, N]");
  const TreeNode& root = t.node(t.root());
  if (!root.coords) throw std::invalid_argument("extract_k: tree has no coordinates");
  const LorentzPoint origin(*root.coords, t.curvature());

  auto make_item = [&](int id, int group) {
    const TreeNode& node = t.node(id);
    if (!node.coords) throw std::invalid_argument("extract_k: tree node without coordinates");
    LorentzPoint p(*node.coords, t.curvature());
    const double d = geodesic_dist(origin, p);
    return FrontierItem{node.members, std::move(p), d, node.children, group};
  };

  std::vector<FrontierItem> frontier;
  for (int c : t.node(t.root()).children)
    if (!t.node(c).members.empty()) frontier.push_back(make_item(c, 0));
  if (frontier.empty()) frontier.push_back(make_item(t.root(), 0));

  // Merges the two items of `group` (any group when -1) farthest from the root.
  auto merge_farthest = [&](int group) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < frontier.size(); ++i)
      if (group < 0 || frontier[i].group == group) idx.push_back(i);
    if (idx.size() < 2) throw std::logic_error("extract_k: nothing left to merge");
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return closer(frontier[b], frontier[a]); });
    FrontierItem& u = frontier[idx[0]];
    FrontierItem& v = frontier[idx[1]];
    const std::vector<LorentzPoint> pair{u.point, v.point};
    LorentzPoint mid = centroid(pair, Eigen::Vector2d(1.0, 1.0));
    std::vector<NodeId> members = u.members;
    members.insert(members.end(), v.members.begin(), v.members.end());
    std::sort(members.begin(), members.end());
    const double d = geodesic_dist(origin, mid);
    FrontierItem merged{std::move(members), std::move(mid), d, {}, u.group};
    const std::size_t hi = std::max(idx[0], idx[1]), lo = std::min(idx[0], idx[1]);
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(hi));
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(lo));
    frontier.push_back(std::move(merged));
  };

  while (frontier.size() > k) merge_farthest(-1);

  int generation = 0;
  while (frontier.size() < k) {
    std::vector<std::size_t> order(frontier.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return closer(frontier[a], frontier[b]); });
    auto pick = std::find_if(order.begin(), order.end(), [&](std::size_t i) {
      return std::count_if(frontier[i].children.begin(), frontier[i].children.end(),
                           [&](int c) { return !t.node(c).members.empty(); }) > 1;
    });
    if (pick == order.end())
      throw std::runtime_error("extract_k: no splittable node left for K=" + std::to_string(k));
    ++generation;
    FrontierItem victim = std::move(frontier[*pick]);
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(*pick));
    for (int c : victim.children)
      if (!t.node(c).members.empty()) frontier.push_back(make_item(c, generation));
    while (frontier.size() > k) merge_farthest(generation);
  }

  Labeling labels(n, -1);
  std::sort(frontier.begin(), frontier.end(), closer);
  for (std::size_t c = 0; c < frontier.size(); ++c)
    for (NodeId i : frontier[c].members) labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
  return canonical_labels(labels);
}

nlohmann::json tree_to_json(const PartitionTree& t) {
  auto encode = [&](auto&& self, int id) -> nlohmann::json {
    const TreeNode& n = t.node(id);
    nlohmann::json j;
    j["id"] = n.id;
    j["height"] = n.height;
    j["members"] = n.members;
    if (n.coords) {
      LorentzPoint p(*n.coords, t.curvature());
      const Eigen::VectorXd xy = to_poincare(p);
      j["poincare_xy"] = std::vector<double>(xy.data(), xy.data() + xy.size());
      j["coords"] = std::vector<double>(n.coords->data(), n.coords->data() + n.coords->size());
    }
    j["children"] = nlohmann::json::array();
    for (int c : n.children) j["children"].push_back(self(self, c));
    return j;
  };
  nlohmann::json j = encode(encode, t.root());
  j["curvature"] = t.curvature();
  return j;
}

PartitionTree tree_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("members") || !j.contains("children"))
    throw std::invalid_argument("tree JSON must be an object with members and children");
  const double curvature = j.value("curvature", -1.0);
  const auto root_members = j.at("members").get<std::vector<NodeId>>();
  PartitionTree t(root_members.size(), curvature);
  auto coords_of = [](const nlohmann::json& node) -> std::optional<Eigen::VectorXd> {
    if (!node.contains("coords")) return std::nullopt;
    auto v = node.at("coords").get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  };
  if (auto c = coords_of(j)) t.set_root_coords(*c);
  auto decode_children = [&](auto&& self, const nlohmann::json& node, int parent) -> void {
    for (const auto& child : node.at("children")) {
      const int id = t.add_child(parent, child.at("members").get<std::vector<NodeId>>(), coords_of(child));
      self(self, child, id);
    }
  };
  decode_children(decode_children, j, t.root());
  t.validate();
  return t;
}

}  // namespace hypertropy
