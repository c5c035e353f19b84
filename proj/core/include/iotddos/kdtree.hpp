#pragma once

#include "iotddos/features.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace iotddos {

struct Neighbor {
  std::size_t index = 0;
  double dist2 = 0.0;

  // Order used everywhere: distance, then training-row index.
  friend bool operator<(const Neighbor& a, const Neighbor& b) noexcept {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

// Exact k-nearest-neighbour index over squared Euclidean distance. Ties are
// broken by row index, so results match a linear scan exactly.
class KdTree {
public:
  KdTree() = default;
  explicit KdTree(Matrix points, std::size_t leaf_size = 16);

  // Up to k neighbours sorted by (dist2, index).
  std::vector<Neighbor> knn(std::span<const double> query, std::size_t k) const;

  const Matrix& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.rows(); }

private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::uint32_t left = 0; // 0 marks a leaf (root is never a child)
    std::uint32_t right = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  double box_distance(std::uint32_t node, std::span<const double> q) const noexcept;
  void search(std::uint32_t node, std::span<const double> q, std::size_t k, std::vector<Neighbor>& heap) const;

  Matrix points_;
  std::size_t leaf_size_ = 16;
  std::vector<std::uint32_t> perm_;
  std::vector<Node> nodes_;
  std::vector<double> box_lo_;
  std::vector<double> box_hi_;
};

} // namespace iotddos
