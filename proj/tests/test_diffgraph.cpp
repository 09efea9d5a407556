#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "pcam/adam.hpp"
#include "pcam/errors.hpp"
#include "pcam/finite_diff.hpp"
#include "pcam/tape.hpp"
#include "test_util.hpp"

using namespace pcam;
using namespace pcam::testutil;

TEST_CASE("affine identity weights") {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor({1, 2}, {1, 2}));
  const auto w = tape.leaf(ad::Tensor({2, 2}, {1, 0, 0, 1}));
  const auto b = tape.leaf(ad::Tensor({2}, {0, 0}));
  const auto out = tape.affine(x, w, b);
  CHECK(tape.value(out)[0] == doctest::Approx(1.0));
  CHECK(tape.value(out)[1] == doctest::Approx(2.0));
}

TEST_CASE("affine hand sum") {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor({1, 2}, {1, 1}));
  const auto w = tape.leaf(ad::Tensor({2, 1}, {2, 3}));
  const auto b = tape.leaf(ad::Tensor({1}, {1}));
  const auto out = tape.affine(x, w, b);
  CHECK(tape.value(out)[0] == doctest::Approx(6.0));
}

TEST_CASE("affine shape mismatch is a contract error") {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor({1, 3}));
  const auto w = tape.leaf(ad::Tensor({2, 2}));
  const auto b = tape.leaf(ad::Tensor({2}));
  CHECK_THROWS_AS(tape.affine(x, w, b), ContractError);
}

TEST_CASE("affine backward matches finite differences to 1e-6") {
  Rng rng(7);
  const ad::Tensor x0 = random_tensor(rng, {3, 4});
  const ad::Tensor w0 = random_tensor(rng, {4, 2});
  const ad::Tensor b0 = random_tensor(rng, {2});

  // Scalarize through mean_all to get a single seed.
  auto run = [&](const ad::Tensor& x, const ad::Tensor& w, const ad::Tensor& b) {
    ad::Tape tape;
    const auto xi = tape.leaf(x);
    const auto wi = tape.leaf(w);
    const auto bi = tape.leaf(b);
    return tape.value(tape.mean_all(tape.affine(xi, wi, bi))).item();
  };

  ad::Tape tape;
  const auto xi = tape.leaf(x0);
  const auto wi = tape.leaf(w0);
  const auto bi = tape.leaf(b0);
  tape.backward(tape.mean_all(tape.affine(xi, wi, bi)));

  const auto fd_x = ad::finite_difference_gradient([&](const ad::Tensor& t) { return run(t, w0, b0); }, x0, 1e-5);
  const auto fd_w = ad::finite_difference_gradient([&](const ad::Tensor& t) { return run(x0, t, b0); }, w0, 1e-5);
  const auto fd_b = ad::finite_difference_gradient([&](const ad::Tensor& t) { return run(x0, w0, t); }, b0, 1e-5);
  CHECK(rel_err(tape.grad(xi), fd_x) < 1e-6);
  CHECK(rel_err(tape.grad(wi), fd_w) < 1e-6);
  CHECK(rel_err(tape.grad(bi), fd_b) < 1e-6);
}

TEST_CASE("relu forward and zero-gradient on negatives") {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor({3}, {-1, 0, 2}));
  const auto out = tape.relu(x);
  CHECK(tape.value(out)[0] == 0.0);
  CHECK(tape.value(out)[1] == 0.0);
  CHECK(tape.value(out)[2] == 2.0);

  ad::Tape tape2;
  const auto xn = tape2.leaf(ad::Tensor({4}, {-1, -2, -0.5, -3}));
  const auto rn = tape2.relu(xn);
  tape2.backward(tape2.mean_all(rn));
  for (int i = 0; i < 4; ++i) {
    CHECK(tape2.value(rn)[i] == 0.0);
    CHECK(tape2.grad(xn)[i] == 0.0);
  }
}

TEST_CASE("relu gradient mask equals indicator(x>0)") {
  Rng rng(11);
  const ad::Tensor x0 = random_tensor_away_from_zero(rng, {6, 5});
  ad::Tape tape;
  const auto xi = tape.leaf(x0);
  tape.backward(tape.mean_all(tape.relu(xi)));
  const int n = x0.size();
  for (int i = 0; i < n; ++i) {
    const double expected = x0[i] > 0.0 ? 1.0 / n : 0.0;
    CHECK(tape.grad(xi)[i] == doctest::Approx(expected));
  }
  const auto fd = ad::finite_difference_gradient(
      [&](const ad::Tensor& t) {
        ad::Tape tp;
        return tp.value(tp.mean_all(tp.relu(tp.leaf(t)))).item();
      },
      x0, 1e-4);
  CHECK(rel_err(tape.grad(xi), fd) < 1e-4);
}

TEST_CASE("max_reduce_points values and argmax") {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor({2, 2}, {1, 5, 3, 2}));
  const auto pooled = tape.max_reduce_points(x);
  CHECK(tape.value(pooled.values)[0] == 3.0);
  CHECK(tape.value(pooled.values)[1] == 5.0);
  CHECK(pooled.argmax[0] == 1);
  CHECK(pooled.argmax[1] == 0);
}

TEST_CASE("max_reduce_points single point is identity") {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor({1, 3}, {4, -1, 2}));
  const auto pooled = tape.max_reduce_points(x);
  for (int j = 0; j < 3; ++j) {
    CHECK(tape.value(pooled.values)[j] == tape.value(x)[j]);
    CHECK(pooled.argmax[static_cast<std::size_t>(j)] == 0);
  }
}

TEST_CASE("max pooling ties break to the lowest row") {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor({3, 1}, {2, 2, 2}));
  const auto pooled = tape.max_reduce_points(x);
  CHECK(pooled.argmax[0] == 0);
  tape.backward(tape.pick(pooled.values, 0));
  CHECK(tape.grad(x)[0] == 1.0);
  CHECK(tape.grad(x)[1] == 0.0);
  CHECK(tape.grad(x)[2] == 0.0);
}

TEST_CASE("max_reduce_points routes gradient only to argmax rows and matches finite differences") {
  Rng rng(13);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng r2 = rng.fork(seed);
    // Keep the max gaps away from the FD step.
    ad::Tensor x0 = random_tensor(r2, {8, 4}, -1.0, 1.0);
    for (int j = 0; j < 4; ++j) {
      int arg = 0;
      for (int i = 1; i < 8; ++i)
        if (x0.at(i, j) > x0.at(arg, j)) arg = i;
      x0.at(arg, j) += 0.05;
    }
    ad::Tape tape;
    const auto xi = tape.leaf(x0);
    const auto pooled = tape.max_reduce_points(xi);
    tape.backward(tape.mean_all(pooled.values));
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 8; ++i) {
        const double g = tape.grad(xi).at(i, j);
        if (i == pooled.argmax[static_cast<std::size_t>(j)])
          CHECK(g == doctest::Approx(0.25));
        else
          CHECK(g == 0.0);
      }
    const auto fd = ad::finite_difference_gradient(
        [&](const ad::Tensor& t) {
          ad::Tape tp;
          return tp.value(tp.mean_all(tp.max_reduce_points(tp.leaf(t)).values)).item();
        },
        x0, 1e-4);
    CHECK(rel_err(tape.grad(xi), fd) < 1e-4);
  }
}

TEST_CASE("max_reduce_points backward conserves gradient mass") {
  Rng rng(17);
  const ad::Tensor x0 = random_tensor(rng, {9, 6});
  ad::Tape tape;
  const auto xi = tape.leaf(x0);
  const auto pooled = tape.max_reduce_points(xi);
  const auto seed_node = tape.mean_all(pooled.values);
  tape.backward(seed_node);
  double routed = 0.0, incoming = 0.0;
  for (int i = 0; i < tape.grad(xi).size(); ++i) routed += tape.grad(xi)[i];
  for (int i = 0; i < tape.grad(pooled.values).size(); ++i) incoming += tape.grad(pooled.values)[i];
  CHECK(routed == doctest::Approx(incoming).epsilon(1e-12));
}

TEST_CASE("softmax_cross_entropy hand cases") {
  ad::Tape tape;
  const auto logits = tape.leaf(ad::Tensor({1, 2}, {0, 0}));
  CHECK(tape.value(tape.softmax_cross_entropy(logits, {0})).item() == doctest::Approx(std::log(2.0)));

  ad::Tape tape2;
  const auto big = tape2.leaf(ad::Tensor({1, 2}, {1000, 0}));
  const double loss = tape2.value(tape2.softmax_cross_entropy(big, {0})).item();
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("softmax_cross_entropy rejects out-of-range labels") {
  ad::Tape tape;
  const auto logits = tape.leaf(ad::Tensor({1, 3}));
  CHECK_THROWS_AS(tape.softmax_cross_entropy(logits, {3}), ContractError);
  ad::Tape tape2;
  const auto l2 = tape2.leaf(ad::Tensor({1, 3}));
  CHECK_THROWS_AS(tape2.softmax_cross_entropy(l2, {-1}), ContractError);
}

TEST_CASE("softmax_cross_entropy gradient equals softmax minus one-hot, matches finite differences") {
  Rng rng(23);
  const ad::Tensor l0 = random_tensor(rng, {4, 5});
  const std::vector<int> labels{1, 0, 4, 2};
  ad::Tape tape;
  const auto li = tape.leaf(l0);
  tape.backward(tape.softmax_cross_entropy(li, labels));

  for (int i = 0; i < 4; ++i) {
    double m = l0.at(i, 0);
    for (int j = 1; j < 5; ++j) m = std::max(m, l0.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < 5; ++j) sum += std::exp(l0.at(i, j) - m);
    for (int j = 0; j < 5; ++j) {
      const double p = std::exp(l0.at(i, j) - m) / sum;
      const double onehot = j == labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
      CHECK(tape.grad(li).at(i, j) == doctest::Approx((p - onehot) / 4.0));
    }
  }
  const auto fd = ad::finite_difference_gradient(
      [&](const ad::Tensor& t) {
        ad::Tape tp;
        return tp.value(tp.softmax_cross_entropy(tp.leaf(t), labels)).item();
      },
      l0, 1e-4);
  CHECK(rel_err(tape.grad(li), fd) < 1e-4);
}

TEST_CASE("backward identity and product rule") {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor::scalar(5.0));
  tape.backward(x);
  CHECK(tape.grad(x)[0] == 1.0);

  ad::Tape tape2;
  const auto a = tape2.leaf(ad::Tensor::scalar(2.0));
  const auto b = tape2.leaf(ad::Tensor::scalar(3.0));
  const auto prod = tape2.mul(a, b);
  tape2.backward(prod);
  CHECK(tape2.grad(a)[0] == 3.0);
  CHECK(tape2.grad(b)[0] == 2.0);
}

TEST_CASE("backward rejects non-scalar seeds") {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor({2}, {1, 2}));
  CHECK_THROWS_AS(tape.backward(x), ContractError);
}

TEST_CASE("backward leaves unreachable nodes at zero gradient") {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor::scalar(1.0));
  const auto unused = tape.leaf(ad::Tensor({3}, {1, 2, 3}));
  const auto y = tape.scale(x, 2.0);
  tape.backward(y);
  for (int i = 0; i < 3; ++i) CHECK(tape.grad(unused)[i] == 0.0);
  CHECK(tape.grad(x)[0] == 2.0);
}

TEST_CASE("backward is deterministic bit-for-bit") {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    const ad::Tensor x0 = random_tensor(rng, {5, 3});
    const ad::Tensor w0 = random_tensor(rng, {3, 4});
    const ad::Tensor b0 = random_tensor(rng, {4});
    ad::Tape tape;
    const auto xi = tape.leaf(x0);
    const auto wi = tape.leaf(w0);
    const auto bi = tape.leaf(b0);
    const auto h = tape.relu(tape.affine(xi, wi, bi));
    tape.backward(tape.mean_all(tape.max_reduce_points(h).values));
    return tape.grad(wi);
  };
  const auto g1 = run(99);
  const auto g2 = run(99);
  REQUIRE(g1.size() == g2.size());
  CHECK(std::memcmp(g1.data(), g2.data(), sizeof(double) * static_cast<std::size_t>(g1.size())) == 0);
}

TEST_CASE("sigmoid stays in (0,1) and matches finite differences") {
  Rng rng(31);
  const ad::Tensor x0 = random_tensor(rng, {7}, -30.0, 30.0);
  ad::Tape tape;
  const auto xi = tape.leaf(x0);
  const auto s = tape.sigmoid(xi);
  for (int i = 0; i < 7; ++i) {
    CHECK(tape.value(s)[i] > 0.0);
    CHECK(tape.value(s)[i] < 1.0);
  }
  tape.backward(tape.mean_all(s));
  const auto fd = ad::finite_difference_gradient(
      [&](const ad::Tensor& t) {
        ad::Tape tp;
        return tp.value(tp.mean_all(tp.sigmoid(tp.leaf(t)))).item();
      },
      x0, 1e-4);
  CHECK(rel_err(tape.grad(xi), fd) < 1e-4);
}

TEST_CASE("elementwise and reduction primitives match finite differences over 20 seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + seed);
    const ad::Tensor a0 = random_tensor(rng, {3, 4});
    const ad::Tensor b0 = random_tensor(rng, {3, 4});

    auto check_fd = [&](auto&& build) {
      ad::Tape tape;
      const auto ai = tape.leaf(a0);
      const auto bi = tape.leaf(b0);
      const ad::NodeId out = build(tape, ai, bi);
      tape.backward(out);
      const auto fd_a = ad::finite_difference_gradient(
          [&](const ad::Tensor& t) {
            ad::Tape tp;
            const auto a2 = tp.leaf(t);
            const auto b2 = tp.leaf(b0);
            return tp.value(build(tp, a2, b2)).item();
          },
          a0, 1e-4);
      CHECK(rel_err(tape.grad(ai), fd_a) < 1e-4);
    };

    check_fd([](ad::Tape& t, ad::NodeId a, ad::NodeId b) { return t.mean_all(t.add(a, b)); });
    check_fd([](ad::Tape& t, ad::NodeId a, ad::NodeId b) { return t.mean_all(t.sub(a, b)); });
    check_fd([](ad::Tape& t, ad::NodeId a, ad::NodeId b) { return t.mean_all(t.mul(a, b)); });
    check_fd([](ad::Tape& t, ad::NodeId a, ad::NodeId) { return t.mean_all(t.scale(a, 1.7)); });
    check_fd([](ad::Tape& t, ad::NodeId a, ad::NodeId) { return t.mean_all(t.add_const(a, 0.3)); });
    check_fd([](ad::Tape& t, ad::NodeId a, ad::NodeId b) { return t.mean_squared_error(a, b); });
    check_fd([](ad::Tape& t, ad::NodeId a, ad::NodeId) { return t.pick(t.reshape(a, {12}), 5); });
    check_fd([](ad::Tape& t, ad::NodeId a, ad::NodeId) {
      return t.mean_all(t.log(t.add_const(t.sigmoid(a), 0.5)));
    });
  }
}

TEST_CASE("chamfer_loss gradient matches finite differences on gap-guarded clouds") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(500 + seed);
    ad::Tensor a0, b0;
    // Resample until nearest-neighbor assignments are stable under the FD step.
    while (true) {
      a0 = random_tensor(rng, {6, 3});
      b0 = random_tensor(rng, {6, 3});
      bool ok = true;
      auto gap_ok = [&](const ad::Tensor& src, const ad::Tensor& dst) {
        for (int i = 0; i < src.dim(0) && ok; ++i) {
          double best = 1e300, second = 1e300;
          for (int j = 0; j < dst.dim(0); ++j) {
            double d2 = 0;
            for (int k = 0; k < 3; ++k) {
              const double d = src[i * 3 + k] - dst[j * 3 + k];
              d2 += d * d;
            }
            const double d = std::sqrt(d2);
            if (d < best) {
              second = best;
              best = d;
            } else if (d < second) {
              second = d;
            }
          }
          if (second - best < 1e-2 || best < 1e-2) ok = false;
        }
      };
      gap_ok(a0, b0);
      gap_ok(b0, a0);
      if (ok) break;
    }
    ad::Tape tape;
    const auto ai = tape.leaf(a0);
    const auto bi = tape.leaf(b0);
    tape.backward(tape.chamfer_loss(ai, bi, 1));
    const auto fd = ad::finite_difference_gradient(
        [&](const ad::Tensor& t) {
          ad::Tape tp;
          return tp.value(tp.chamfer_loss(tp.leaf(t), tp.leaf(b0), 1)).item();
        },
        a0, 1e-4);
    CHECK(rel_err(tape.grad(ai), fd) < 1e-4);
  }
}

TEST_CASE("adam first step has unit bias-corrected magnitude") {
  ad::Tensor p = ad::Tensor::scalar(1.0);
  ad::Tensor g = ad::Tensor::scalar(0.5);
  ad::Adam adam(ad::AdamConfig{0.01, 0.9, 0.999, 1e-8}, {&p});
  adam.step({&p}, {&g}, ad::Adam::Direction::Descend);
  CHECK(p.item() == doctest::Approx(1.0 - 0.01).epsilon(1e-6));
  CHECK(adam.step_count() == 1);
}

TEST_CASE("adam with zero gradient is the identity") {
  Rng rng(41);
  ad::Tensor p = random_tensor(rng, {4, 4});
  const ad::Tensor before = p;
  ad::Tensor g({4, 4});
  ad::Adam adam(ad::AdamConfig{}, {&p});
  for (int i = 0; i < 3; ++i) adam.step({&p}, {&g});
  for (int i = 0; i < p.size(); ++i) CHECK(p[i] == before[i]);
}

TEST_CASE("adam drives a quadratic to its minimum") {
  ad::Tensor x = ad::Tensor::scalar(1.0);
  ad::Adam adam(ad::AdamConfig{0.1, 0.9, 0.999, 1e-8}, {&x});
  for (int i = 0; i < 100; ++i) {
    ad::Tensor g = ad::Tensor::scalar(2.0 * x.item());
    adam.step({&x}, {&g}, ad::Adam::Direction::Descend);
  }
  CHECK(std::abs(x.item()) < 0.05);
}

TEST_CASE("finite_difference_gradient basics") {
  const ad::Tensor x = ad::Tensor::scalar(3.0);
  const auto g = ad::finite_difference_gradient([](const ad::Tensor& t) { return t.item() * t.item(); }, x, 1e-4);
  CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-6));

  Rng rng(43);
  const ad::Tensor y = random_tensor(rng, {5});
  const auto gz = ad::finite_difference_gradient([](const ad::Tensor&) { return 4.2; }, y, 1e-4);
  for (int i = 0; i < 5; ++i) CHECK(gz[i] == 0.0);

  CHECK_THROWS_AS(ad::finite_difference_gradient([](const ad::Tensor&) { return 0.0; }, y, 0.0), ContractError);
}

TEST_CASE("non-finite forward values raise numeric errors") {
  ad::Tape tape;
  const auto x = tape.leaf(ad::Tensor({1}, {-1.0}));
  CHECK_THROWS_AS(tape.log(x), NumericError);
}
