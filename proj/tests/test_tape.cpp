// Reverse-mode tape: every op's gradient is checked against central finite
// differences, plus the structural rules (single use, scalar root, parameter
// accumulation).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vfield/param_store.hpp"
#include "vfield/rng.hpp"
#include "vfield/tape.hpp"

using namespace vfield;

namespace {

Mat random_mat(Rng& rng, Eigen::Index rows, Eigen::Index cols, Real lo = -1.0, Real hi = 1.0) {
  Mat m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(lo, hi);
  }
  return m;
}

/// Builds a graph from the store's parameters and returns the scalar root.
using GraphFn = std::function<NodeId(Tape&)>;

/// Checks d(root)/d(theta) against central differences for every parameter
/// entry. `tol` is relative with an absolute floor, so near-zero gradients do
/// not explode the ratio.
void check_gradients(ParamStore& store, const GraphFn& build, Real tol = 1e-6,
                     Real fd_step = 1e-6) {
  {
    Tape tape(&store);
    const NodeId root = build(tape);
    REQUIRE(tape.value(root).size() == 1);
    store.zero_grads();
    tape.backward(root);
  }
  const Vec analytic = store.grads();
  const Vec theta = store.values();
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    store.values() = theta;
    store.values()[i] += fd_step;
    Real plus;
    {
      Tape tape(&store);
      plus = tape.value(build(tape))(0, 0);
    }
    store.values() = theta;
    store.values()[i] -= fd_step;
    Real minus;
    {
      Tape tape(&store);
      minus = tape.value(build(tape))(0, 0);
    }
    store.values() = theta;
    const Real fd = (plus - minus) / (2 * fd_step);
    const Real scale = std::max({std::abs(fd), std::abs(analytic[i]), Real(1e-3)});
    INFO("param entry ", i, ": analytic ", analytic[i], " vs fd ", fd);
    CHECK(std::abs(analytic[i] - fd) / scale < tol);
  }
}

/// Store with a single named matrix parameter.
ParamStore single_param(const std::string& name, const Mat& value) {
  ParamStore store;
  store.add(name, value.rows(), value.cols());
  store.value(name) = value;
  return store;
}

/// Reduces any node to a scalar with a fixed random weighting, so gradients
/// are not uniform across entries.
NodeId weighted_sum(Tape& tape, NodeId a, std::uint64_t salt = 17) {
  Rng rng(salt);
  const Mat& v = tape.value(a);
  const Mat w = random_mat(rng, v.rows(), v.cols(), 0.25, 1.75);
  return tape.sum(tape.cmul(a, tape.constant(w)));
}

}  // namespace

TEST_CASE("elementwise binary op gradients match finite differences") {
  Rng rng(1);
  const Mat a = random_mat(rng, 3, 4);
  const Mat b = random_mat(rng, 3, 4, 0.5, 2.0);  // keep cdiv well conditioned
  ParamStore store;
  store.add("a", 3, 4);
  store.add("b", 3, 4);
  store.value("a") = a;
  store.value("b") = b;

  SUBCASE("add") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.add(t.param("a"), t.param("b")));
    });
  }
  SUBCASE("sub") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.sub(t.param("a"), t.param("b")));
    });
  }
  SUBCASE("cmul") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.cmul(t.param("a"), t.param("b")));
    });
  }
  SUBCASE("cdiv") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.cdiv(t.param("a"), t.param("b")));
    });
  }
}

TEST_CASE("elementwise unary op gradients match finite differences") {
  Rng rng(2);
  // Stay away from the relu/abs kinks so finite differences are valid.
  Mat a = random_mat(rng, 2, 5);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (std::abs(a(i)) < 0.05) a(i) = 0.1;
  }
  ParamStore store = single_param("a", a);

  SUBCASE("scale") {
    check_gradients(store, [](Tape& t) { return weighted_sum(t, t.scale(t.param("a"), -2.5)); });
  }
  SUBCASE("add_scalar") {
    check_gradients(store, [](Tape& t) { return weighted_sum(t, t.add_scalar(t.param("a"), 0.7)); });
  }
  SUBCASE("relu") {
    check_gradients(store, [](Tape& t) { return weighted_sum(t, t.relu(t.param("a"))); });
  }
  SUBCASE("sin") {
    check_gradients(store, [](Tape& t) { return weighted_sum(t, t.sin_of(t.param("a"))); });
  }
  SUBCASE("cos") {
    check_gradients(store, [](Tape& t) { return weighted_sum(t, t.cos_of(t.param("a"))); });
  }
  SUBCASE("exp") {
    check_gradients(store, [](Tape& t) { return weighted_sum(t, t.exp_of(t.param("a"))); });
  }
  SUBCASE("abs") {
    check_gradients(store, [](Tape& t) { return weighted_sum(t, t.abs_of(t.param("a"))); });
  }
  SUBCASE("logistic") {
    check_gradients(store, [](Tape& t) { return weighted_sum(t, t.logistic(t.param("a"))); });
  }
}

TEST_CASE("relu forward zeroes negatives and passes positives") {
  Tape tape;
  Mat x(1, 4);
  x << -2.0, -0.0, 0.5, 3.0;
  const Mat y = tape.value(tape.relu(tape.constant(x)));
  CHECK(y(0, 0) == 0.0);
  CHECK(y(0, 1) == 0.0);
  CHECK(y(0, 2) == 0.5);
  CHECK(y(0, 3) == 3.0);
}

TEST_CASE("scalar-node broadcast op gradients match finite differences") {
  Rng rng(3);
  ParamStore store;
  store.add("a", 3, 4);
  store.add("s", 1, 1);
  store.value("a") = random_mat(rng, 3, 4);
  store.set_scalar("s", 1.3);

  SUBCASE("mul_scalar_node") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.mul_scalar_node(t.param("a"), t.param("s")));
    });
  }
  SUBCASE("sub_scalar_node") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.sub_scalar_node(t.param("a"), t.param("s")));
    });
  }
}

TEST_CASE("matmul, transpose, and bias-add gradients match finite differences") {
  Rng rng(4);
  ParamStore store;
  store.add("W", 3, 5);
  store.add("x", 5, 2);
  store.add("b", 3, 1);
  store.value("W") = random_mat(rng, 3, 5);
  store.value("x") = random_mat(rng, 5, 2);
  store.value("b") = random_mat(rng, 3, 1);

  SUBCASE("matmul") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.matmul(t.param("W"), t.param("x")));
    });
  }
  SUBCASE("transpose") {
    check_gradients(store, [](Tape& t) { return weighted_sum(t, t.transpose(t.param("W"))); });
  }
  SUBCASE("add_col") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.add_col(t.matmul(t.param("W"), t.param("x")), t.param("b")));
    });
  }
}

TEST_CASE("slicing, stacking, and scatter gradients match finite differences") {
  Rng rng(5);
  ParamStore store;
  store.add("a", 4, 6);
  store.add("b", 2, 6);
  store.value("a") = random_mat(rng, 4, 6);
  store.value("b") = random_mat(rng, 2, 6);

  SUBCASE("rows") {
    check_gradients(store, [](Tape& t) { return weighted_sum(t, t.rows(t.param("a"), 1, 2)); });
  }
  SUBCASE("cols") {
    check_gradients(store, [](Tape& t) { return weighted_sum(t, t.cols(t.param("a"), 2, 3)); });
  }
  SUBCASE("vstack") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.vstack(t.param("a"), t.param("b")));
    });
  }
  SUBCASE("scatter_cols") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.scatter_cols(t.param("b"), {4, 0, 2, 6, 1, 7}, 9));
    });
  }
}

TEST_CASE("scatter_cols places columns and zero-fills the rest") {
  Tape tape;
  Mat a(2, 2);
  a << 1, 2, 3, 4;
  const Mat out = tape.value(tape.scatter_cols(tape.constant(a), {2, 0}, 4));
  CHECK(out.cols() == 4);
  CHECK(out(0, 2) == 1);
  CHECK(out(1, 2) == 3);
  CHECK(out(0, 0) == 2);
  CHECK(out(0, 1) == 0);
  CHECK(out(0, 3) == 0);
}

TEST_CASE("reduction and geometry op gradients match finite differences") {
  Rng rng(6);
  ParamStore store;
  store.add("a", 3, 5);
  store.add("b", 3, 5);
  store.value("a") = random_mat(rng, 3, 5, 0.2, 1.0);  // away from the norm floor
  store.value("b") = random_mat(rng, 3, 5, -1.0, -0.2);

  SUBCASE("sum") {
    check_gradients(store, [](Tape& t) { return t.sum(t.param("a")); });
  }
  SUBCASE("colnorm") {
    check_gradients(store, [](Tape& t) { return weighted_sum(t, t.colnorm(t.param("a"))); });
  }
  SUBCASE("coldot") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.coldot(t.param("a"), t.param("b")));
    });
  }
  SUBCASE("cosine_cols") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.cosine_cols(t.param("a"), t.param("b")));
    });
  }
  SUBCASE("cumsum_cols_exclusive") {
    check_gradients(store, [](Tape& t) {
      return weighted_sum(t, t.cumsum_cols_exclusive(t.param("a")));
    });
  }
}

TEST_CASE("cosine_cols forward matches the norm-floored cosine and handles zeros") {
  Tape tape;
  Mat a(3, 2), b(3, 2);
  a.col(0) = Vec3(1, 0, 0);
  b.col(0) = Vec3(-1, 0, 0);
  a.col(1) = Vec3(0, 0, 0);  // degenerate: cosine must be 0, not NaN
  b.col(1) = Vec3(0, 1, 0);
  const Mat c = tape.value(tape.cosine_cols(tape.constant(a), tape.constant(b)));
  CHECK(c(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(c(0, 1) == 0.0);
}

TEST_CASE("cumsum_cols_exclusive starts at zero and accumulates left of each column") {
  Tape tape;
  Mat a(2, 4);
  a << 1, 2, 3, 4, 10, 20, 30, 40;
  const Mat out = tape.value(tape.cumsum_cols_exclusive(tape.constant(a)));
  CHECK(out(0, 0) == 0);
  CHECK(out(0, 1) == 1);
  CHECK(out(0, 2) == 3);
  CHECK(out(0, 3) == 6);
  CHECK(out(1, 3) == 60);
}

TEST_CASE("laplace_cdf node gradients (x, mu, beta) match finite differences") {
  Rng rng(7);
  ParamStore store;
  store.add("x", 1, 6);
  store.add("mu", 1, 1);
  store.add("log_beta", 1, 1);
  Mat x = random_mat(rng, 1, 6, -2.0, 2.0);
  x(0, 0) = 0.69;  // straddle mu from both sides
  x(0, 1) = 0.71;
  store.value("x") = x;
  store.set_scalar("mu", 0.7);
  store.set_scalar("log_beta", std::log(0.5));
  check_gradients(store, [](Tape& t) {
    const NodeId beta = t.exp_of(t.param("log_beta"));
    return weighted_sum(t, t.laplace_cdf(t.param("x"), t.param("mu"), beta));
  });
}

TEST_CASE("parameter gradients accumulate across several tapes") {
  ParamStore store;
  store.add("w", 1, 1);
  store.set_scalar("w", 2.0);
  store.zero_grads();
  for (int pass = 0; pass < 3; ++pass) {
    Tape tape(&store);
    // d/dw of w^2 = 4 at w=2; three passes accumulate 12.
    const NodeId w = tape.param("w");
    tape.backward(tape.sum(tape.cmul(w, w)));
  }
  CHECK(store.grads()[0] == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("a node used twice receives gradient from both consumers") {
  ParamStore store;
  store.add("w", 1, 1);
  store.set_scalar("w", 3.0);
  store.zero_grads();
  Tape tape(&store);
  const NodeId w = tape.param("w");
  // f = w*w + 5*w -> df/dw = 2w + 5 = 11.
  const NodeId root = tape.sum(tape.add(tape.cmul(w, w), tape.scale(w, 5.0)));
  tape.backward(root);
  CHECK(store.grads()[0] == doctest::Approx(11.0).epsilon(1e-12));
}

TEST_CASE("tape rejects structural misuse") {
  ParamStore store;
  store.add("w", 2, 2);
  store.value("w") = Mat::Ones(2, 2);

  SUBCASE("non-scalar backward root") {
    Tape tape(&store);
    const NodeId w = tape.param("w");
    CHECK_THROWS_AS(tape.backward(w), std::runtime_error);
  }
  SUBCASE("second backward call") {
    Tape tape(&store);
    const NodeId root = tape.sum(tape.param("w"));
    tape.backward(root);
    CHECK_THROWS_AS(tape.backward(root), std::runtime_error);
  }
  SUBCASE("ops after backward") {
    Tape tape(&store);
    const NodeId root = tape.sum(tape.param("w"));
    tape.backward(root);
    CHECK_THROWS_AS(tape.constant(Mat::Ones(1, 1)), std::runtime_error);
  }
  SUBCASE("unknown parameter name") {
    Tape tape(&store);
    CHECK_THROWS_WITH_AS(tape.param("nope"), doctest::Contains("nope"), std::runtime_error);
  }
  SUBCASE("parameters require a store") {
    Tape tape;
    CHECK_THROWS_AS(tape.param("w"), std::runtime_error);
  }
  SUBCASE("shape mismatch names the op") {
    Tape tape(&store);
    const NodeId a = tape.param("w");
    const NodeId b = tape.constant(Mat::Ones(3, 2));
    CHECK_THROWS_WITH_AS(tape.add(a, b), doctest::Contains("add"), std::runtime_error);
  }
}

TEST_CASE("grad access before backward is rejected") {
  Tape tape;
  const NodeId a = tape.constant(Mat::Ones(1, 1));
  CHECK_THROWS_AS(tape.grad(a), std::runtime_error);
}
