#include "vfield/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace vfield {

NodeId Tape::push(Mat value, std::function<void(Tape&, const Node&)> back) {
  if (differentiated_) {
    throw std::runtime_error("Tape: cannot add nodes after backward(); build a fresh tape");
  }
  Node node;
  node.value = std::move(value);
  node.back = std::move(back);
  nodes_.push_back(std::move(node));
  return static_cast<NodeId>(nodes_.size() - 1);
}

int Tape::check(NodeId id) const {
  if (id < 0 || static_cast<size_t>(id) >= nodes_.size()) {
    throw std::runtime_error("Tape: invalid node id " + std::to_string(id));
  }
  return id;
}

const Mat& Tape::grad(NodeId id) const {
  if (!differentiated_) throw std::runtime_error("Tape: grad() before backward()");
  return nodes_[check(id)].grad;
}

void Tape::shape_error(const char* op, NodeId a, NodeId b) const {
  const Mat& va = nodes_[a].value;
  const Mat& vb = nodes_[b].value;
  throw std::runtime_error(std::string("Tape: ") + op + ": shape mismatch " +
                           std::to_string(va.rows()) + "x" + std::to_string(va.cols()) +
                           " vs " + std::to_string(vb.rows()) + "x" +
                           std::to_string(vb.cols()));
}

void Tape::require_same_shape(const char* op, NodeId a, NodeId b) const {
  const Mat& va = nodes_[check(a)].value;
  const Mat& vb = nodes_[check(b)].value;
  if (va.rows() != vb.rows() || va.cols() != vb.cols()) shape_error(op, a, b);
}

NodeId Tape::constant(Mat value) { return push(std::move(value), nullptr); }

NodeId Tape::param(const std::string& segment_name) {
  if (store_ == nullptr) {
    throw std::runtime_error("Tape: param('" + segment_name + "') on a tape without a store");
  }
  Mat value = store_->value(segment_name);  // copy; the store may mutate later
  return push(std::move(value), [name = segment_name](Tape& t, const Node& self) {
    t.store_->grad(name) += self.grad;
  });
}

NodeId Tape::add(NodeId a, NodeId b) {
  require_same_shape("add", a, b);
  return push(nodes_[a].value + nodes_[b].value, [a, b](Tape& t, const Node& self) {
    t.grad_ref(a) += self.grad;
    t.grad_ref(b) += self.grad;
  });
}

NodeId Tape::sub(NodeId a, NodeId b) {
  require_same_shape("sub", a, b);
  return push(nodes_[a].value - nodes_[b].value, [a, b](Tape& t, const Node& self) {
    t.grad_ref(a) += self.grad;
    t.grad_ref(b) -= self.grad;
  });
}

NodeId Tape::cmul(NodeId a, NodeId b) {
  require_same_shape("cmul", a, b);
  return push(nodes_[a].value.cwiseProduct(nodes_[b].value), [a, b](Tape& t, const Node& self) {
    t.grad_ref(a) += self.grad.cwiseProduct(t.nodes_[b].value);
    t.grad_ref(b) += self.grad.cwiseProduct(t.nodes_[a].value);
  });
}

NodeId Tape::cdiv(NodeId a, NodeId b) {
  require_same_shape("cdiv", a, b);
  return push(nodes_[a].value.cwiseQuotient(nodes_[b].value), [a, b](Tape& t, const Node& self) {
    const Mat& vb = t.nodes_[b].value;
    t.grad_ref(a) += self.grad.cwiseQuotient(vb);
    t.grad_ref(b) -= self.grad.cwiseProduct(self.value).cwiseQuotient(vb);
  });
}

NodeId Tape::scale(NodeId a, Real s) {
  check(a);
  return push(s * nodes_[a].value, [a, s](Tape& t, const Node& self) {
    t.grad_ref(a) += s * self.grad;
  });
}

NodeId Tape::add_scalar(NodeId a, Real s) {
  check(a);
  return push((nodes_[a].value.array() + s).matrix(), [a](Tape& t, const Node& self) {
    t.grad_ref(a) += self.grad;
  });
}

NodeId Tape::relu(NodeId a) {
  check(a);
  return push(nodes_[a].value.cwiseMax(0.0), [a](Tape& t, const Node& self) {
    const Mat mask = (t.nodes_[a].value.array() > 0.0).cast<Real>().matrix();
    t.grad_ref(a) += self.grad.cwiseProduct(mask);
  });
}

NodeId Tape::sin_of(NodeId a) {
  check(a);
  return push(nodes_[a].value.array().sin().matrix(), [a](Tape& t, const Node& self) {
    t.grad_ref(a).array() += self.grad.array() * t.nodes_[a].value.array().cos();
  });
}

NodeId Tape::cos_of(NodeId a) {
  check(a);
  return push(nodes_[a].value.array().cos().matrix(), [a](Tape& t, const Node& self) {
    t.grad_ref(a).array() -= self.grad.array() * t.nodes_[a].value.array().sin();
  });
}

NodeId Tape::exp_of(NodeId a) {
  check(a);
  return push(nodes_[a].value.array().exp().matrix(), [a](Tape& t, const Node& self) {
    t.grad_ref(a).array() += self.grad.array() * self.value.array();
  });
}

NodeId Tape::abs_of(NodeId a) {
  check(a);
  return push(nodes_[a].value.array().abs().matrix(), [a](Tape& t, const Node& self) {
    const Mat sign = t.nodes_[a].value.array().sign().matrix();  // sign(0) = 0 subgradient
    t.grad_ref(a) += self.grad.cwiseProduct(sign);
  });
}

NodeId Tape::logistic(NodeId a) {
  check(a);
  Mat out = (1.0 / (1.0 + (-nodes_[a].value.array()).exp())).matrix();
  return push(std::move(out), [a](Tape& t, const Node& self) {
    const auto s = self.value.array();
    t.grad_ref(a).array() += self.grad.array() * s * (1.0 - s);
  });
}

NodeId Tape::mul_scalar_node(NodeId a, NodeId s) {
  check(a);
  if (nodes_[check(s)].value.size() != 1) shape_error("mul_scalar_node", a, s);
  return push(nodes_[a].value * nodes_[s].value(0, 0), [a, s](Tape& t, const Node& self) {
    t.grad_ref(a) += self.grad * t.nodes_[s].value(0, 0);
    t.grad_ref(s)(0, 0) += self.grad.cwiseProduct(t.nodes_[a].value).sum();
  });
}

NodeId Tape::sub_scalar_node(NodeId a, NodeId s) {
  check(a);
  if (nodes_[check(s)].value.size() != 1) shape_error("sub_scalar_node", a, s);
  return push((nodes_[a].value.array() - nodes_[s].value(0, 0)).matrix(),
              [a, s](Tape& t, const Node& self) {
    t.grad_ref(a) += self.grad;
    t.grad_ref(s)(0, 0) -= self.grad.sum();
  });
}

NodeId Tape::matmul(NodeId a, NodeId b) {
  check(a);
  check(b);
  if (nodes_[a].value.cols() != nodes_[b].value.rows()) shape_error("matmul", a, b);
  return push(nodes_[a].value * nodes_[b].value, [a, b](Tape& t, const Node& self) {
    t.grad_ref(a).noalias() += self.grad * t.nodes_[b].value.transpose();
    t.grad_ref(b).noalias() += t.nodes_[a].value.transpose() * self.grad;
  });
}

NodeId Tape::transpose(NodeId a) {
  check(a);
  return push(nodes_[a].value.transpose(), [a](Tape& t, const Node& self) {
    t.grad_ref(a) += self.grad.transpose();
  });
}

NodeId Tape::add_col(NodeId m, NodeId column) {
  check(m);
  check(column);
  if (nodes_[column].value.cols() != 1 || nodes_[m].value.rows() != nodes_[column].value.rows()) {
    shape_error("add_col", m, column);
  }
  Mat out = nodes_[m].value;
  out.colwise() += nodes_[column].value.col(0);
  return push(std::move(out), [m, column](Tape& t, const Node& self) {
    t.grad_ref(m) += self.grad;
    t.grad_ref(column) += self.grad.rowwise().sum();
  });
}

NodeId Tape::rows(NodeId a, Eigen::Index first, Eigen::Index count) {
  check(a);
  if (first < 0 || count < 0 || first + count > nodes_[a].value.rows()) {
    throw std::runtime_error("Tape: rows: slice out of range");
  }
  return push(nodes_[a].value.middleRows(first, count), [a, first, count](Tape& t, const Node& self) {
    t.grad_ref(a).middleRows(first, count) += self.grad;
  });
}

NodeId Tape::cols(NodeId a, Eigen::Index first, Eigen::Index count) {
  check(a);
  if (first < 0 || count < 0 || first + count > nodes_[a].value.cols()) {
    throw std::runtime_error("Tape: cols: slice out of range");
  }
  return push(nodes_[a].value.middleCols(first, count), [a, first, count](Tape& t, const Node& self) {
    t.grad_ref(a).middleCols(first, count) += self.grad;
  });
}

NodeId Tape::vstack(NodeId a, NodeId b) {
  check(a);
  check(b);
  if (nodes_[a].value.cols() != nodes_[b].value.cols()) shape_error("vstack", a, b);
  Mat out(nodes_[a].value.rows() + nodes_[b].value.rows(), nodes_[a].value.cols());
  out << nodes_[a].value, nodes_[b].value;
  const Eigen::Index top = nodes_[a].value.rows();
  return push(std::move(out), [a, b, top](Tape& t, const Node& self) {
    t.grad_ref(a) += self.grad.topRows(top);
    t.grad_ref(b) += self.grad.bottomRows(self.grad.rows() - top);
  });
}

NodeId Tape::scatter_cols(NodeId a, const std::vector<Eigen::Index>& destinations,
                          Eigen::Index total) {
  check(a);
  const Mat& va = nodes_[a].value;
  if (static_cast<Eigen::Index>(destinations.size()) != va.cols()) {
    throw std::runtime_error("Tape: scatter_cols: destination count != source columns");
  }
  Mat out = Mat::Zero(va.rows(), total);
  for (size_t j = 0; j < destinations.size(); ++j) {
    const Eigen::Index d = destinations[j];
    if (d < 0 || d >= total) throw std::runtime_error("Tape: scatter_cols: index out of range");
    out.col(d) = va.col(static_cast<Eigen::Index>(j));
  }
  return push(std::move(out), [a, destinations](Tape& t, const Node& self) {
    Mat& ga = t.grad_ref(a);
    for (size_t j = 0; j < destinations.size(); ++j) {
      ga.col(static_cast<Eigen::Index>(j)) += self.grad.col(destinations[j]);
    }
  });
}

NodeId Tape::sum(NodeId a) {
  check(a);
  Mat out(1, 1);
  out(0, 0) = nodes_[a].value.sum();
  return push(std::move(out), [a](Tape& t, const Node& self) {
    t.grad_ref(a).array() += self.grad(0, 0);
  });
}

NodeId Tape::colnorm(NodeId a) {
  check(a);
  Mat out = nodes_[a].value.colwise().norm();
  return push(std::move(out), [a](Tape& t, const Node& self) {
    const Mat& va = t.nodes_[a].value;
    Mat& ga = t.grad_ref(a);
    for (Eigen::Index c = 0; c < va.cols(); ++c) {
      ga.col(c) += self.grad(0, c) * va.col(c) / std::max(self.value(0, c), kNormFloor);
    }
  });
}

NodeId Tape::coldot(NodeId a, NodeId b) {
  require_same_shape("coldot", a, b);
  Mat out = nodes_[a].value.cwiseProduct(nodes_[b].value).colwise().sum();
  return push(std::move(out), [a, b](Tape& t, const Node& self) {
    const Mat& va = t.nodes_[a].value;
    const Mat& vb = t.nodes_[b].value;
    Mat& ga = t.grad_ref(a);
    Mat& gb = t.grad_ref(b);
    for (Eigen::Index c = 0; c < va.cols(); ++c) {
      ga.col(c) += self.grad(0, c) * vb.col(c);
      gb.col(c) += self.grad(0, c) * va.col(c);
    }
  });
}

NodeId Tape::cosine_cols(NodeId a, NodeId b) {
  require_same_shape("cosine_cols", a, b);
  const Mat& va = nodes_[a].value;
  const Mat& vb = nodes_[b].value;
  Mat out(1, va.cols());
  for (Eigen::Index c = 0; c < va.cols(); ++c) {
    const Real na = std::max(va.col(c).norm(), kNormFloor);
    const Real nb = std::max(vb.col(c).norm(), kNormFloor);
    out(0, c) = va.col(c).dot(vb.col(c)) / (na * nb);
  }
  return push(std::move(out), [a, b](Tape& t, const Node& self) {
    const Mat& va = t.nodes_[a].value;
    const Mat& vb = t.nodes_[b].value;
    Mat& ga = t.grad_ref(a);
    Mat& gb = t.grad_ref(b);
    for (Eigen::Index c = 0; c < va.cols(); ++c) {
      const Real raw_na = va.col(c).norm();
      const Real raw_nb = vb.col(c).norm();
      const Real na = std::max(raw_na, kNormFloor);
      const Real nb = std::max(raw_nb, kNormFloor);
      const Real g = self.grad(0, c);
      const Real cosine = self.value(0, c);
      ga.col(c) += g * vb.col(c) / (na * nb);
      gb.col(c) += g * va.col(c) / (na * nb);
      // Below the floor the 1/norm factor is a constant, so the curvature
      // term only applies above it (matches the piecewise forward exactly).
      if (raw_na > kNormFloor) ga.col(c) -= g * cosine * va.col(c) / (na * na);
      if (raw_nb > kNormFloor) gb.col(c) -= g * cosine * vb.col(c) / (nb * nb);
    }
  });
}

NodeId Tape::cumsum_cols_exclusive(NodeId a) {
  check(a);
  const Mat& va = nodes_[a].value;
  Mat out = Mat::Zero(va.rows(), va.cols());
  for (Eigen::Index r = 0; r < va.rows(); ++r) {
    Real acc = 0;
    for (Eigen::Index c = 0; c < va.cols(); ++c) {
      out(r, c) = acc;
      acc += va(r, c);
    }
  }
  return push(std::move(out), [a](Tape& t, const Node& self) {
    Mat& ga = t.grad_ref(a);
    for (Eigen::Index r = 0; r < self.grad.rows(); ++r) {
      Real acc = 0;
      for (Eigen::Index c = self.grad.cols() - 1; c >= 0; --c) {
        ga(r, c) += acc;  // d out(r,k)/d in(r,c) = 1 exactly when k > c
        acc += self.grad(r, c);
      }
    }
  });
}

NodeId Tape::laplace_cdf(NodeId x, NodeId mu, NodeId beta) {
  check(x);
  if (nodes_[check(mu)].value.size() != 1 || nodes_[check(beta)].value.size() != 1) {
    throw std::runtime_error("Tape: laplace_cdf: mu and beta must be 1x1 nodes");
  }
  const Real m = nodes_[mu].value(0, 0);
  const Real b = nodes_[beta].value(0, 0);
  if (!(b > 0)) throw std::runtime_error("Tape: laplace_cdf: beta must be positive");
  const Mat& vx = nodes_[x].value;
  Mat out(vx.rows(), vx.cols());
  for (Eigen::Index i = 0; i < vx.size(); ++i) {
    const Real d = vx(i) - m;
    out(i) = d <= 0 ? 0.5 * std::exp(d / b) : 1.0 - 0.5 * std::exp(-d / b);
  }
  return push(std::move(out), [x, mu, beta, m, b](Tape& t, const Node& self) {
    const Mat& vx = t.nodes_[x].value;
    Mat& gx = t.grad_ref(x);
    Real gmu = 0, gbeta = 0;
    for (Eigen::Index i = 0; i < vx.size(); ++i) {
      const Real d = vx(i) - m;
      const Real pdf = std::exp(-std::abs(d) / b) / (2.0 * b);
      gx(i) += self.grad(i) * pdf;
      gmu -= self.grad(i) * pdf;
      gbeta -= self.grad(i) * pdf * d / b;
    }
    t.grad_ref(mu)(0, 0) += gmu;
    t.grad_ref(beta)(0, 0) += gbeta;
  });
}

void Tape::backward(NodeId root) {
  if (differentiated_) {
    throw std::runtime_error("Tape: backward() called twice; re-trace before differentiating");
  }
  check(root);
  if (nodes_[root].value.size() != 1) {
    throw std::runtime_error("Tape: backward() root must be scalar (1x1), got " +
                             std::to_string(nodes_[root].value.rows()) + "x" +
                             std::to_string(nodes_[root].value.cols()));
  }
  differentiated_ = true;
  for (Node& node : nodes_) node.grad = Mat::Zero(node.value.rows(), node.value.cols());
  nodes_[root].grad(0, 0) = 1.0;
  for (NodeId id = root; id >= 0; --id) {
    if (!nodes_[id].back) continue;
    nodes_[id].back(*this, nodes_[id]);
  }
}

}  // namespace vfield
