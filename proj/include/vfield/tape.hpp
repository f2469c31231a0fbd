#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vfield/param_store.hpp"
#include "vfield/types.hpp"

namespace vfield {

using NodeId = int;

/// Reverse-mode differentiation tape over dense matrices.
///
/// Nodes are created in topological order by the op builders below; backward()
/// walks them in reverse, accumulating gradients. Parameter nodes pull their
/// value from a ParamStore at creation time and push their gradient back into
/// the store's gradient vector, so several tapes (e.g. per-ray-chunk) can
/// accumulate into one parameter gradient as long as loss terms are scaled by
/// global (whole-batch) denominators.
///
/// A tape is single-use: backward() may run once, and no ops may be added
/// afterwards. Not thread-safe; use one tape per thread.
class Tape {
 public:
  explicit Tape(ParamStore* store = nullptr) : store_(store) {}

  NodeId constant(Mat value);
  /// Copies the named segment's current value; backward accumulates into the
  /// store's gradient. Unknown names error with the offending name.
  NodeId param(const std::string& segment_name);

  const Mat& value(NodeId id) const { return nodes_[check(id)].value; }
  /// Gradient of the root w.r.t. this node; valid only after backward().
  const Mat& grad(NodeId id) const;
  size_t node_count() const { return nodes_.size(); }

  // ---- elementwise / scalar ----
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId cmul(NodeId a, NodeId b);
  NodeId cdiv(NodeId a, NodeId b);
  NodeId scale(NodeId a, Real s);
  NodeId add_scalar(NodeId a, Real s);
  NodeId relu(NodeId a);
  NodeId sin_of(NodeId a);
  NodeId cos_of(NodeId a);
  NodeId exp_of(NodeId a);
  NodeId abs_of(NodeId a);
  NodeId logistic(NodeId a);
  /// Elementwise multiply / subtract by a 1x1 node, broadcast over a.
  NodeId mul_scalar_node(NodeId a, NodeId s);
  NodeId sub_scalar_node(NodeId a, NodeId s);

  // ---- linear algebra / shape ----
  NodeId matmul(NodeId a, NodeId b);
  NodeId transpose(NodeId a);
  /// m.colwise() + column (bias add over a batch of columns).
  NodeId add_col(NodeId m, NodeId column);
  NodeId rows(NodeId a, Eigen::Index first, Eigen::Index count);
  NodeId cols(NodeId a, Eigen::Index first, Eigen::Index count);
  NodeId vstack(NodeId a, NodeId b);
  /// Places column j of `a` at column destinations[j] of an otherwise-zero
  /// matrix with `total` columns. Destinations must be distinct.
  NodeId scatter_cols(NodeId a, const std::vector<Eigen::Index>& destinations,
                      Eigen::Index total);

  // ---- reductions / geometry ----
  NodeId sum(NodeId a);
  /// Row of per-column L2 norms. Backward floors the norm at kNormFloor.
  NodeId colnorm(NodeId a);
  /// Row of per-column dot products (shapes must match).
  NodeId coldot(NodeId a, NodeId b);
  /// Row of per-column cosine similarities with kNormFloor in the
  /// denominator, so zero vectors yield cosine 0 instead of NaN.
  NodeId cosine_cols(NodeId a, NodeId b);
  /// Exclusive prefix sum along each row: out(r,0)=0, out(r,c)=sum_{k<c} a(r,k).
  NodeId cumsum_cols_exclusive(NodeId a);

  /// Elementwise standard Laplace CDF of x with scalar (1x1) mu and beta
  /// nodes: x<=mu -> 0.5*exp((x-mu)/beta), else 1 - 0.5*exp(-(x-mu)/beta).
  /// beta must hold a positive value (pass exp(log_beta)).
  NodeId laplace_cdf(NodeId x, NodeId mu, NodeId beta);

  /// Accumulates d(root)/d(node) for every node and d(root)/d(param) into the
  /// ParamStore. Root must be 1x1. A second call without a fresh tape errors.
  void backward(NodeId root);

 private:
  struct Node {
    Mat value;
    Mat grad;
    // Receives the tape and this node (whose grad is fully accumulated by the
    // time it runs); null for leaves without parents.
    std::function<void(Tape&, const Node&)> back;
  };

  NodeId push(Mat value, std::function<void(Tape&, const Node&)> back);
  int check(NodeId id) const;
  Mat& grad_ref(NodeId id) { return nodes_[id].grad; }
  [[noreturn]] void shape_error(const char* op, NodeId a, NodeId b) const;
  void require_same_shape(const char* op, NodeId a, NodeId b) const;

  ParamStore* store_ = nullptr;
  std::vector<Node> nodes_;
  bool differentiated_ = false;
};

}  // namespace vfield
