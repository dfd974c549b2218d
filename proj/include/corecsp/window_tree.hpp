#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "corecsp/coreset.hpp"

namespace corecsp {

// Balanced 2-3 tree over leaf coresets in arrival order. Every inner node
// caches the merge of its children, so the root coreset always summarizes the
// live window. Inserts append the newest leaf on the right; deletions remove
// the oldest leaf on the left; both touch O(log n) nodes, each update being
// one O(d^3) merge-reduce. An optional window bound (in samples) evicts the
// oldest leaves after each insert until the live span fits.
//
// Single-writer; readers may copy root_coreset() as an immutable snapshot.
class CoresetWindowTree {
 public:
  explicit CoresetWindowTree(Eigen::Index channels,
                             std::optional<std::int64_t> window_length = std::nullopt)
      : channels_(channels), window_length_(window_length) {
    if (channels < 1) throw spec_error("window tree: channel count must be >= 1");
    if (window_length_ && *window_length_ < 1)
      throw spec_error("window tree: window length must be >= 1");
  }

  Eigen::Index channels() const { return channels_; }
  std::size_t leaf_count() const { return root_ ? root_->leaves : 0; }
  std::int64_t live_span() const { return root_ ? root_->span : 0; }
  std::int64_t absorbed_total() const { return absorbed_total_; }
  std::optional<std::int64_t> window_length() const { return window_length_; }

  // Number of inner-node cache recomputations in the most recent public
  // operation, and over the tree's lifetime.
  std::int64_t last_op_recomputes() const { return op_recomputes_; }
  std::int64_t total_recomputes() const { return total_recomputes_; }

  void insert(ScatterCoreset chunk, std::int64_t chunk_sample_span) {
    if (chunk.channels() != channels_) {
      throw dimension_error("window tree insert: chunk has " +
                            std::to_string(chunk.channels()) + " channels, tree expects " +
                            std::to_string(channels_));
    }
    if (chunk_sample_span < 1) throw spec_error("window tree insert: span must be >= 1");
    op_recomputes_ = 0;
    absorbed_total_ += chunk_sample_span;

    auto leaf = std::make_unique<Node>(std::move(chunk), chunk_sample_span);
    if (!root_) {
      root_ = std::move(leaf);
    } else if (root_->is_leaf()) {
      auto inner = std::make_unique<Node>(ScatterCoreset(channels_), 0);
      inner->children.push_back(std::move(root_));
      inner->children.push_back(std::move(leaf));
      recompute(*inner);
      root_ = std::move(inner);
    } else {
      auto spill = insert_rightmost(*root_, std::move(leaf));
      if (spill) {
        auto inner = std::make_unique<Node>(ScatterCoreset(channels_), 0);
        inner->children.push_back(std::move(root_));
        inner->children.push_back(std::move(spill));
        recompute(*inner);
        root_ = std::move(inner);
      }
    }
    if (window_length_) {
      while (root_ && root_->span > *window_length_) delete_oldest_impl();
    }
  }

  void delete_oldest() {
    if (!root_) throw empty_input_error("delete_oldest: tree is empty");
    op_recomputes_ = 0;
    delete_oldest_impl();
  }

  // Snapshot of the root summary; an empty coreset when no leaves are live.
  ScatterCoreset root_coreset() const {
    return root_ ? root_->summary : ScatterCoreset(channels_);
  }

  Eigen::MatrixXd root_scatter() const { return root_coreset().scatter(); }

  int height() const {
    int h = 0;
    for (const Node* n = root_.get(); n != nullptr && !n->is_leaf();
         n = n->children.front().get())
      ++h;
    return h;
  }

  // Structural audit used by the tests: 2-3 arity, uniform leaf depth,
  // consistent span/leaf bookkeeping.
  bool check_structure() const {
    if (!root_) return true;
    int leaf_depth = -1;
    return check_node(*root_, 0, leaf_depth, root_.get());
  }

 private:
  struct Node {
    Node(ScatterCoreset s, std::int64_t sp) : summary(std::move(s)), span(sp) {}
    ScatterCoreset summary;
    std::int64_t span;
    std::size_t leaves = 1;
    std::vector<std::unique_ptr<Node>> children;  // empty for a leaf
    bool is_leaf() const { return children.empty(); }
  };

  void recompute(Node& node) {
    std::array<const ScatterCoreset*, 3> parts{};
    std::int64_t span = 0;
    std::size_t leaves = 0;
    std::size_t count = 0;
    for (const auto& child : node.children) {
      parts[count++] = &child->summary;
      span += child->span;
      leaves += child->leaves;
    }
    node.summary = ScatterCoreset::merged(std::span(parts.data(), count));
    node.span = span;
    node.leaves = leaves;
    ++op_recomputes_;
    ++total_recomputes_;
  }

  std::unique_ptr<Node> insert_rightmost(Node& node, std::unique_ptr<Node> leaf) {
    if (node.children.front()->is_leaf()) {
      node.children.push_back(std::move(leaf));
    } else {
      auto spill = insert_rightmost(*node.children.back(), std::move(leaf));
      if (spill) node.children.push_back(std::move(spill));
    }
    if (node.children.size() > 3) {
      auto right = std::make_unique<Node>(ScatterCoreset(channels_), 0);
      right->children.push_back(std::move(node.children[2]));
      right->children.push_back(std::move(node.children[3]));
      node.children.resize(2);
      recompute(node);
      recompute(*right);
      return right;
    }
    recompute(node);
    return nullptr;
  }

  void delete_oldest_impl() {
    if (root_->is_leaf()) {
      root_.reset();
      return;
    }
    delete_leftmost(*root_);
    if (root_->children.size() == 1) root_ = std::move(root_->children.front());
  }

  // Removes the leftmost leaf below `node`; returns true when `node` is left
  // with fewer than 2 children and needs its parent to rebalance.
  bool delete_leftmost(Node& node) {
    if (node.children.front()->is_leaf()) {
      node.children.erase(node.children.begin());
    } else {
      if (delete_leftmost(*node.children.front())) {
        Node& left = *node.children[0];
        Node& sibling = *node.children[1];
        if (sibling.children.size() >= 3) {
          // borrow the sibling's first child
          left.children.push_back(std::move(sibling.children.front()));
          sibling.children.erase(sibling.children.begin());
          recompute(left);
          recompute(sibling);
        } else {
          // fold the lone child into the sibling
          sibling.children.insert(sibling.children.begin(),
                                  std::move(left.children.front()));
          node.children.erase(node.children.begin());
          recompute(sibling);
        }
      }
    }
    recompute(node);
    return node.children.size() < 2;
  }

  bool check_node(const Node& node, int depth, int& leaf_depth, const Node* root) const {
    if (node.is_leaf()) {
      if (leaf_depth < 0) leaf_depth = depth;
      return depth == leaf_depth && node.leaves == 1 && node.span >= 1;
    }
    if (node.children.size() < 2 || node.children.size() > 3) return false;
    std::int64_t span = 0;
    std::size_t leaves = 0;
    for (const auto& child : node.children) {
      if (!check_node(*child, depth + 1, leaf_depth, root)) return false;
      span += child->span;
      leaves += child->leaves;
    }
    return span == node.span && leaves == node.leaves;
  }

  Eigen::Index channels_;
  std::optional<std::int64_t> window_length_;
  std::unique_ptr<Node> root_;
  std::int64_t absorbed_total_ = 0;
  std::int64_t op_recomputes_ = 0;
  std::int64_t total_recomputes_ = 0;
};

}  // namespace corecsp
