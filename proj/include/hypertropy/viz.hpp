#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace hypertropy {

/// Raised when a tree cannot be drawn: no nodes, missing coordinates, or an
/// embedding that is not 2-dimensional.
class VizError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SvgOptions {
  int size = 640;
  double leaf_radius = 5.0;
  double internal_radius = 7.0;
};

/// Poincare-disc drawing of an exported tree. The tree is moved by a hyperbolic
/// isometry that takes the root to the origin, so the root sits at the centre.
/// Elements carry class="disc", "edge", "leaf", "internal" or "root"; leaves are
/// colored by their ancestor directly under the root.
std::string render_svg(const nlohmann::json& tree, const SvgOptions& options = {});

}  // namespace hypertropy
