#include "hypertropy/viz.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include <Eigen/Dense>

namespace hypertropy {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#ad494a"};

struct Drawn {
  Eigen::Vector2d xy;
  int depth;
  int cluster;
  bool leaf;
  int parent;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

Eigen::VectorXd coords_of(const nlohmann::json& node) {
  if (!node.contains("coords")) throw VizError("tree node " + node.value("id", nlohmann::json()).dump() +
                                               " has no coordinates");
  const auto v = node.at("coords").get<std::vector<double>>();
  if (v.size() != 3)
    throw VizError("embedding dimension is " + std::to_string(v.empty() ? 0 : v.size() - 1) +
                   "; the disc plot needs embed_dim = 2");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), 3);
}

}  // namespace

std::string render_svg(const nlohmann::json& tree, const SvgOptions& options) {
  if (!tree.is_object() || !tree.contains("children") || tree.value("members", nlohmann::json::array()).empty())
    throw VizError("tree is empty");
  const double k = tree.value("curvature", -1.0);
  const double sk = std::sqrt(-k);
  const Eigen::VectorXd r = coords_of(tree) * sk;

  // Inverse boost taking the (unit-curvature) root to the origin, then the disc projection.
  auto project = [&](const Eigen::VectorXd& x_raw) {
    const Eigen::VectorXd x = x_raw * sk;
    const Eigen::Vector2d rs = r.tail<2>(), xs = x.tail<2>();
    const double y0 = r[0] * x[0] - rs.dot(xs);
    const Eigen::Vector2d ys = -x[0] * rs + xs + rs * (rs.dot(xs) / (1.0 + r[0]));
    Eigen::Vector2d p = ys / (1.0 + y0);
    if (p.norm() >= 1.0) p *= (1.0 - 1e-12) / p.norm();
    return p;
  };

  std::vector<Drawn> nodes;
  auto walk = [&](auto&& self, const nlohmann::json& node, int depth, int cluster, int parent) -> void {
    const int idx = static_cast<int>(nodes.size());
    const auto& kids = node.at("children");
    nodes.push_back({project(coords_of(node)), depth, cluster, kids.empty(), parent});
    int c = 0;
    for (const auto& child : kids) {
      self(self, child, depth + 1, depth == 0 ? c : cluster, idx);
      ++c;
    }
  };
  walk(walk, tree, 0, 0, -1);

  const double half = options.size / 2.0;
  const double radius = half - 10.0;
  auto sx = [&](const Eigen::Vector2d& p) { return fmt(half + radius * p.x()); };
  auto sy = [&](const Eigen::Vector2d& p) { return fmt(half - radius * p.y()); };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(options.size) +
                    "\" height=\"" + std::to_string(options.size) + "\" viewBox=\"0 0 " +
                    std::to_string(options.size) + " " + std::to_string(options.size) + "\">\n";
  svg += "<circle class=\"disc\" cx=\"" + fmt(half) + "\" cy=\"" + fmt(half) + "\" r=\"" + fmt(radius) +
         "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  for (const Drawn& d : nodes) {
    if (d.parent < 0) continue;
    const Drawn& p = nodes[static_cast<std::size_t>(d.parent)];
    svg += "<line class=\"edge\" x1=\"" + sx(p.xy) + "\" y1=\"" + sy(p.xy) + "\" x2=\"" + sx(d.xy) +
           "\" y2=\"" + sy(d.xy) + "\" stroke=\"#999\" stroke-width=\"0.8\"/>\n";
  }
  for (const Drawn& d : nodes) {
    if (d.parent < 0 || d.leaf) continue;
    svg += "<circle class=\"internal\" cx=\"" + sx(d.xy) + "\" cy=\"" + sy(d.xy) + "\" r=\"" +
           fmt(options.internal_radius) + "\" fill=\"#fff\" stroke=\"#222\" stroke-width=\"1.5\"/>\n";
  }
  for (const Drawn& d : nodes) {
    if (d.parent < 0 || !d.leaf) continue;
    const char* color = kPalette[static_cast<std::size_t>(d.cluster) % std::size(kPalette)];
    svg += "<circle class=\"leaf\" cx=\"" + sx(d.xy) + "\" cy=\"" + sy(d.xy) + "\" r=\"" +
           fmt(options.leaf_radius) + "\" fill=\"" + color + "\"/>\n";
  }
  const Drawn& root = nodes.front();
  svg += "<circle class=\"root\" cx=\"" + sx(root.xy) + "\" cy=\"" + sy(root.xy) + "\" r=\"" +
         fmt(options.internal_radius) + "\" fill=\"#000\"/>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace hypertropy
