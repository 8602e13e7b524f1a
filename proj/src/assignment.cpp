#include "hypertropy/assignment.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hypertropy {

AssignmentStack::AssignmentStack(std::vector<Eigen::MatrixXd> levels) : levels_(std::move(levels)) {
  if (levels_.empty()) throw std::invalid_argument("assignment stack needs at least one level");
  if (levels_.front().cols() != 1)
    throw std::invalid_argument("C^1 must have a single column (the root)");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i].rows() < 1) throw std::invalid_argument("assignment level with no rows");
    if (i > 0 && levels_[i].cols() != levels_[i - 1].rows())
      throw std::invalid_argument("C^" + std::to_string(i + 1) + " has " +
                                  std::to_string(levels_[i].cols()) + " columns but level " +
                                  std::to_string(i) + " has " +
                                  std::to_string(levels_[i - 1].rows()) + " nodes");
    if (!levels_[i].allFinite()) throw std::invalid_argument("assignment entries must be finite");
  }
}

AssignmentStack AssignmentStack::flat(Eigen::Index n) {
  return AssignmentStack({Eigen::MatrixXd::Ones(n, 1)});
}

AssignmentStack AssignmentStack::from_parents(const std::vector<std::vector<int>>& parents) {
  std::vector<Eigen::MatrixXd> levels;
  Eigen::Index width_above = 1;
  for (const auto& p : parents) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p.size()), width_above);
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (p[k] < 0 || p[k] >= width_above) throw std::invalid_argument("parent index out of range");
      c(static_cast<Eigen::Index>(k), p[k]) = 1.0;
    }
    width_above = c.rows();
    levels.push_back(std::move(c));
  }
  return AssignmentStack(std::move(levels));
}

const Eigen::MatrixXd& AssignmentStack::level(int h) const {
  if (h < 1 || h > height()) throw std::out_of_range("assignment level " + std::to_string(h));
  return levels_[static_cast<std::size_t>(h - 1)];
}

std::vector<Eigen::Index> AssignmentStack::widths() const {
  std::vector<Eigen::Index> w{1};
  for (const auto& c : levels_) w.push_back(c.rows());
  return w;
}

bool AssignmentStack::is_hard() const {
  for (const auto& c : levels_)
    if (((c.array() != 0.0) && (c.array() != 1.0)).any()) return false;
  return max_row_deviation() == 0.0;
}

double AssignmentStack::max_row_deviation() const {
  double dev = 0.0;
  for (const auto& c : levels_)
    dev = std::max(dev, (c.rowwise().sum().array() - 1.0).abs().maxCoeff());
  return dev;
}

void AssignmentStack::require_row_stochastic(double tol) const {
  for (const auto& c : levels_)
    if ((c.array() < 0.0).any()) throw std::invalid_argument("assignment has negative entries");
  const double dev = max_row_deviation();
  if (dev > tol)
    throw std::invalid_argument("assignment rows must sum to 1 (deviation " + std::to_string(dev) +
                                ")");
}

Eigen::MatrixXd AssignmentStack::cumulative(int h) const {
  if (h < 0 || h > height()) throw std::out_of_range("cumulative level " + std::to_string(h));
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(num_leaves(), num_leaves());
  for (int l = height(); l > h; --l) s = s * level(l);
  return s;
}

LevelVolumes level_volumes(const AssignmentStack& stack, const Eigen::VectorXd& degrees) {
  const int H = stack.height();
  if (degrees.size() != stack.num_leaves())
    throw std::invalid_argument("degree vector does not match the stack's leaf count");
  LevelVolumes lv;
  lv.volume.resize(static_cast<std::size_t>(H + 1));
  lv.parent_volume.resize(static_cast<std::size_t>(H + 1));
  lv.volume[static_cast<std::size_t>(H)] = degrees;
  for (int h = H; h >= 1; --h)
    lv.volume[static_cast<std::size_t>(h - 1)] =
        stack.level(h).transpose() * lv.volume[static_cast<std::size_t>(h)];
  for (int h = 1; h <= H; ++h)
    lv.parent_volume[static_cast<std::size_t>(h)] =
        stack.level(h) * lv.volume[static_cast<std::size_t>(h - 1)];
  return lv;
}

}  // namespace hypertropy
