#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "vfield/types.hpp"

namespace vfield {

/// Named span of the flat parameter vector holding one matrix, stored
/// column-major. Segment order is creation order and fixes the checkpoint
/// layout, so networks must register segments deterministically.
struct Segment {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

/// Flat f64 parameter vector plus a same-length gradient vector. All learnable
/// state (both networks and the density parameters) lives here so the
/// optimizer and checkpoints treat it as a single array.
class ParamStore {
 public:
  /// Registers a rows x cols segment; errors if the name already exists.
  const Segment& add(const std::string& name, Eigen::Index rows, Eigen::Index cols);

  bool has(const std::string& name) const { return index_.count(name) > 0; }
  /// Errors with the offending name on unknown segments.
  const Segment& segment(const std::string& name) const;
  const std::vector<Segment>& segments() const { return segments_; }

  Eigen::Index size() const { return values_.size(); }

  Eigen::Map<Mat> value(const std::string& name);
  Eigen::Map<const Mat> value(const std::string& name) const;
  Eigen::Map<Mat> grad(const std::string& name);
  Eigen::Map<const Mat> grad(const std::string& name) const;

  /// 1x1 segment accessors for scalar parameters.
  Real scalar(const std::string& name) const;
  void set_scalar(const std::string& name, Real v);

  Vec& values() { return values_; }
  const Vec& values() const { return values_; }
  Vec& grads() { return grads_; }
  const Vec& grads() const { return grads_; }

  void zero_grads() { grads_.setZero(); }

 private:
  Vec values_{0};
  Vec grads_{0};
  std::vector<Segment> segments_;
  std::unordered_map<std::string, size_t> index_;
};

}  // namespace vfield
