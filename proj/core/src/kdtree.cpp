#include "iotddos/kdtree.hpp"

#include "iotddos/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace iotddos {

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

KdTree::KdTree(Matrix points, std::size_t leaf_size) : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  if (points_.rows() >= std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::DimensionMismatch, "too many points for the KD-tree index");
  }
  perm_.resize(points_.rows());
  std::iota(perm_.begin(), perm_.end(), 0u);
  if (points_.rows() == 0) return;
  nodes_.reserve(2 * points_.rows() / leaf_size_ + 1);
  build(0, static_cast<std::uint32_t>(points_.rows()));
}

std::uint32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const std::size_t dims = points_.cols();
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end, 0, 0});
  box_lo_.resize(box_lo_.size() + dims, std::numeric_limits<double>::infinity());
  box_hi_.resize(box_hi_.size() + dims, -std::numeric_limits<double>::infinity());
  double* lo = box_lo_.data() + static_cast<std::size_t>(id) * dims;
  double* hi = box_hi_.data() + static_cast<std::size_t>(id) * dims;
  for (auto i = begin; i < end; ++i) {
    auto p = points_.row(perm_[i]);
    for (std::size_t d = 0; d < dims; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  }
  if (end - begin <= leaf_size_) return id;

  std::size_t split_dim = 0;
  double spread = -1.0;
  for (std::size_t d = 0; d < dims; ++d) {
    if (hi[d] - lo[d] > spread) {
      spread = hi[d] - lo[d];
      split_dim = d;
    }
  }
  if (spread <= 0.0) return id; // all points identical

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double va = points_(a, split_dim);
                     const double vb = points_(b, split_dim);
                     return va < vb || (va == vb && a < b);
                   });
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::box_distance(std::uint32_t node, std::span<const double> q) const noexcept {
  const std::size_t dims = points_.cols();
  const double* lo = box_lo_.data() + static_cast<std::size_t>(node) * dims;
  const double* hi = box_hi_.data() + static_cast<std::size_t>(node) * dims;
  double s = 0.0;
  for (std::size_t d = 0; d < dims; ++d) {
    double diff = 0.0;
    if (q[d] < lo[d]) {
      diff = lo[d] - q[d];
    } else if (q[d] > hi[d]) {
      diff = q[d] - hi[d];
    }
    s += diff * diff;
  }
  return s;
}

void KdTree::search(std::uint32_t node, std::span<const double> q, std::size_t k, std::vector<Neighbor>& heap) const {
  const Node& n = nodes_[node];
  if (n.left == 0) {
    for (auto i = n.begin; i < n.end; ++i) {
      const std::uint32_t row = perm_[i];
      Neighbor cand{row, squared_distance(points_.row(row), q)};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  double dl = box_distance(n.left, q);
  double dr = box_distance(n.right, q);
  std::uint32_t first = n.left;
  std::uint32_t second = n.right;
  if (dr < dl) {
    std::swap(first, second);
    std::swap(dl, dr);
  }
  // Equal distances must still be visited: a farther-indexed tie can lose to a
  // lower index inside the box.
  if (heap.size() < k || dl <= heap.front().dist2) search(first, q, k, heap);
  if (heap.size() < k || dr <= heap.front().dist2) search(second, q, k, heap);
}

std::vector<Neighbor> KdTree::knn(std::span<const double> query, std::size_t k) const {
  if (query.size() != points_.cols()) throw Error(Errc::ArityMismatch, "query width differs from indexed points");
  std::vector<Neighbor> heap;
  if (k == 0 || nodes_.empty()) return heap;
  heap.reserve(k + 1);
  search(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

} // namespace iotddos
