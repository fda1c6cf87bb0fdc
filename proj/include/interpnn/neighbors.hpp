#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "interpnn/core.hpp"

namespace interpnn {

/// The k+1 nearest training points of a query, ascending by distance.
/// Ties are broken by ascending training index, so results are fully
/// deterministic. The extra (k+1)-th entry carries the normalizing radius
/// used by distance-ratio weight schemes.
struct NeighborList {
  std::vector<std::uint32_t> indices;
  std::vector<double> distances;

  [[nodiscard]] int k() const { return static_cast<int>(indices.size()) - 1; }

  friend bool operator==(const NeighborList&, const NeighborList&) = default;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

namespace detail {

// (squared distance, training index), ordered so that the lexicographically
// smaller pair is the better neighbor.
using Candidate = std::pair<double, std::uint32_t>;

inline bool better(const Candidate& a, const Candidate& b) {
  return a.first < b.first || (a.first == b.first && a.second < b.second);
}

inline NeighborList finalize(std::vector<Candidate>& cands) {
  std::sort(cands.begin(), cands.end(), better);
  NeighborList nl;
  nl.indices.reserve(cands.size());
  nl.distances.reserve(cands.size());
  for (const auto& [d2, idx] : cands) {
    nl.indices.push_back(idx);
    nl.distances.push_back(std::sqrt(d2));
  }
  return nl;
}

inline void check_query(std::size_t n, int dim, std::span<const double> q, int k) {
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  if (static_cast<std::size_t>(k) + 1 > n)
    throw KTooLargeError("k+1 = " + std::to_string(k + 1) + " exceeds n = " + std::to_string(n));
  if (static_cast<int>(q.size()) != dim)
    throw DimensionMismatchError("query dimension " + std::to_string(q.size()) +
                                 " != data dimension " + std::to_string(dim));
}

}  // namespace detail

/// Exact k+1 nearest neighbors by full scan. Serves as the reference
/// implementation the tree is tested against, and as the fast path when
/// k is of the order of n.
inline NeighborList brute_knn(const LabeledDataset& ds, std::span<const double> q, int k) {
  if (ds.size() == 0) throw EmptyDatasetError("brute_knn on empty dataset");
  detail::check_query(ds.size(), ds.dim(), q, k);
  std::vector<detail::Candidate> cands(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i)
    cands[i] = {squared_distance(q, ds.point(i)), static_cast<std::uint32_t>(i)};
  const auto take = static_cast<std::ptrdiff_t>(k) + 1;
  std::nth_element(cands.begin(), cands.begin() + (take - 1), cands.end(), detail::better);
  cands.resize(static_cast<std::size_t>(take));
  return detail::finalize(cands);
}

/// Exact nearest-neighbor index (kd-tree with median splits on the widest
/// coordinate). Immutable after construction; concurrent queries are safe.
class KdTree {
 public:
  explicit KdTree(const LabeledDataset& ds)
      : dim_(ds.dim()), n_(ds.size()), coords_(ds.coords().begin(), ds.coords().end()) {
    if (n_ == 0) throw EmptyDatasetError("cannot index an empty dataset");
    perm_.resize(n_);
    std::iota(perm_.begin(), perm_.end(), 0u);
    nodes_.reserve(2 * n_ / kLeafSize + 2);
    build(0, n_);
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] std::size_t size() const { return n_; }

  [[nodiscard]] NeighborList query(std::span<const double> q, int k) const {
    detail::check_query(n_, dim_, q, k);
    SearchState state;
    state.capacity = static_cast<std::size_t>(k) + 1;
    state.q = q;
    state.heap.reserve(state.capacity);
    search(0, state);
    return detail::finalize(state.heap);
  }

 private:
  static constexpr std::size_t kLeafSize = 16;
  static constexpr std::uint32_t kNoChild = std::numeric_limits<std::uint32_t>::max();

  struct Node {
    std::uint32_t begin = 0, end = 0;     // leaf range into perm_
    std::uint32_t left = kNoChild, right = kNoChild;
    int split_dim = 0;
    double split_value = 0.0;

    [[nodiscard]] bool is_leaf() const { return left == kNoChild; }
  };

  struct SearchState {
    std::span<const double> q;
    std::size_t capacity = 1;
    // max-heap: worst candidate at front, ordered by (distance, index)
    std::vector<detail::Candidate> heap;

    [[nodiscard]] bool full() const { return heap.size() == capacity; }
    [[nodiscard]] double worst() const { return heap.front().first; }

    void offer(double d2, std::uint32_t idx) {
      const detail::Candidate c{d2, idx};
      if (!full()) {
        heap.push_back(c);
        std::push_heap(heap.begin(), heap.end(), detail::better);
      } else if (detail::better(c, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), detail::better);
        heap.back() = c;
        std::push_heap(heap.begin(), heap.end(), detail::better);
      }
    }
  };

  [[nodiscard]] const double* point(std::uint32_t i) const {
    return coords_.data() + static_cast<std::size_t>(i) * dim_;
  }

  std::uint32_t build(std::size_t begin, std::size_t end) {
    const auto node_id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Node node;
    node.begin = static_cast<std::uint32_t>(begin);
    node.end = static_cast<std::uint32_t>(end);
    if (end - begin > kLeafSize) {
      // Split on the coordinate with the widest extent.
      int best_dim = 0;
      double best_spread = -1.0;
      for (int d = 0; d < dim_; ++d) {
        double lo = point(perm_[begin])[d], hi = lo;
        for (std::size_t i = begin + 1; i < end; ++i) {
          const double v = point(perm_[i])[d];
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (hi - lo > best_spread) {
          best_spread = hi - lo;
          best_dim = d;
        }
      }
      if (best_spread > 0.0) {
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin),
                         perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                         perm_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::uint32_t a, std::uint32_t b) {
                           return point(a)[best_dim] < point(b)[best_dim];
                         });
        node.split_dim = best_dim;
        node.split_value = point(perm_[mid])[best_dim];
        node.left = build(begin, mid);
        node.right = build(mid, end);
      }
      // All points identical: keep as one leaf.
    }
    nodes_[node_id] = node;
    return node_id;
  }

  void search(std::uint32_t node_id, SearchState& state) const {
    const Node& node = nodes_[node_id];
    if (node.is_leaf()) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = perm_[i];
        state.offer(squared_distance(state.q, {point(idx), static_cast<std::size_t>(dim_)}), idx);
      }
      return;
    }
    const double diff = state.q[node.split_dim] - node.split_value;
    const std::uint32_t near = diff < 0.0 ? node.left : node.right;
    const std::uint32_t far = diff < 0.0 ? node.right : node.left;
    search(near, state);
    // The far side may only be skipped when it provably cannot improve the
    // result set; at equality a point could still win its index tie-break.
    if (!state.full() || diff * diff <= state.worst()) search(far, state);
  }

  int dim_;
  std::size_t n_;
  std::vector<double> coords_;
  std::vector<std::uint32_t> perm_;
  std::vector<Node> nodes_;
};

using NeighborIndex = KdTree;

inline NeighborIndex build_index(const LabeledDataset& ds) { return KdTree(ds); }

inline NeighborList knn_query(const NeighborIndex& index, std::span<const double> q, int k) {
  return index.query(q, k);
}

}  // namespace interpnn
