#include "vfield/param_store.hpp"

#include <stdexcept>

namespace vfield {

const Segment& ParamStore::add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  if (has(name)) throw std::runtime_error("ParamStore: duplicate segment '" + name + "'");
  if (rows <= 0 || cols <= 0) {
    throw std::runtime_error("ParamStore: segment '" + name + "' must be non-empty");
  }
  Segment seg;
  seg.name = name;
  seg.offset = values_.size();
  seg.rows = rows;
  seg.cols = cols;
  values_.conservativeResize(seg.offset + seg.size());
  grads_.conservativeResize(seg.offset + seg.size());
  values_.tail(seg.size()).setZero();
  grads_.tail(seg.size()).setZero();
  index_[name] = segments_.size();
  segments_.push_back(seg);
  return segments_.back();
}

const Segment& ParamStore::segment(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw std::runtime_error("ParamStore: unknown segment '" + name + "'");
  }
  return segments_[it->second];
}

Eigen::Map<Mat> ParamStore::value(const std::string& name) {
  const Segment& seg = segment(name);
  return Eigen::Map<Mat>(values_.data() + seg.offset, seg.rows, seg.cols);
}

Eigen::Map<const Mat> ParamStore::value(const std::string& name) const {
  const Segment& seg = segment(name);
  return Eigen::Map<const Mat>(values_.data() + seg.offset, seg.rows, seg.cols);
}

Eigen::Map<Mat> ParamStore::grad(const std::string& name) {
  const Segment& seg = segment(name);
  return Eigen::Map<Mat>(grads_.data() + seg.offset, seg.rows, seg.cols);
}

Eigen::Map<const Mat> ParamStore::grad(const std::string& name) const {
  const Segment& seg = segment(name);
  return Eigen::Map<const Mat>(grads_.data() + seg.offset, seg.rows, seg.cols);
}

Real ParamStore::scalar(const std::string& name) const {
  const Segment& seg = segment(name);
  if (seg.size() != 1) throw std::runtime_error("ParamStore: '" + name + "' is not scalar");
  return values_[seg.offset];
}

void ParamStore::set_scalar(const std::string& name, Real v) {
  const Segment& seg = segment(name);
  if (seg.size() != 1) throw std::runtime_error("ParamStore: '" + name + "' is not scalar");
  values_[seg.offset] = v;
}

}  // namespace vfield
