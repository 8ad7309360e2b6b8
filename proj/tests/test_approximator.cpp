#include <doctest.h>

#include <cmath>
#include <sstream>

#include "a2t/approximator.hpp"
#include "test_util.hpp"

using namespace a2t;
using namespace a2t::testutil;

namespace {

Net single_layer(int in, int out, Head head) {
  Net net;
  net.head = head;
  Layer l;
  l.in = in;
  l.out = out;
  l.w.assign(static_cast<size_t>(in) * out, 0.0);
  l.b.assign(static_cast<size_t>(out), 0.0);
  net.layers.push_back(std::move(l));
  return net;
}

}  // namespace

TEST_CASE("forward: zero linear net maps anything to zero") {
  Net net = single_layer(3, 2, Head::Linear);
  std::vector<double> out = forward(net, std::vector<double>{1.0, -2.0, 5.0});
  CHECK(out == std::vector<double>{0.0, 0.0});
}

TEST_CASE("forward: softmax head with equal logits is uniform") {
  Net net = single_layer(2, 3, Head::Softmax);
  std::vector<double> out = forward(net, std::vector<double>{0.4, 0.6});
  for (double p : out) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("forward: hand-computed 1-layer linear map") {
  Net net = single_layer(2, 2, Head::Linear);
  net.layers[0].w = {2.0, 0.0, 0.0, 3.0};
  std::vector<double> out = forward(net, std::vector<double>{1.0, 1.0});
  CHECK(out[0] == doctest::Approx(2.0));
  CHECK(out[1] == doctest::Approx(3.0));
}

TEST_CASE("forward: dimension mismatch is rejected") {
  Net net = single_layer(3, 2, Head::Linear);
  CHECK_THROWS_AS(forward(net, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("backward: zero upstream gives a zero gradient") {
  std::mt19937_64 rng(1);
  Net net = make_net({4, 6, 3}, Head::Linear, rng);
  Gradient g = backward(net, random_vector(4, rng),
                        std::vector<double>{0.0, 0.0, 0.0});
  for (double v : flatten(g)) CHECK(v == 0.0);
}

TEST_CASE("backward: single linear layer, upstream e_i") {
  Net net = single_layer(3, 2, Head::Linear);
  std::vector<double> x = {1.5, -0.5, 2.0};
  Gradient g = backward(net, x, std::vector<double>{0.0, 1.0});
  // gradient of W row 1 equals x; row 0 zero
  CHECK(g.layers[0].w[0] == 0.0);
  CHECK(g.layers[0].w[3] == doctest::Approx(1.5));
  CHECK(g.layers[0].w[4] == doctest::Approx(-0.5));
  CHECK(g.layers[0].w[5] == doctest::Approx(2.0));
  CHECK(g.layers[0].b[0] == 0.0);
  CHECK(g.layers[0].b[1] == 1.0);
}

TEST_CASE("backward matches finite differences on random nets") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    Head head = trial % 2 ? Head::Softmax : Head::Linear;
    Net net = make_net({5, 7, 4}, head, rng);
    std::vector<double> x = random_vector(5, rng);
    std::vector<double> u = random_vector(4, rng);
    Gradient g = backward(net, x, u);
    std::vector<double> fd = finite_diff(net, [&](const Net& n) {
      std::vector<double> out = forward(n, x);
      double s = 0.0;
      for (size_t i = 0; i < out.size(); ++i) s += u[i] * out[i];
      return s;
    });
    CHECK(max_rel_error(flatten(g), fd) < 1e-4);
  }
}

TEST_CASE("log_prob_grad: symmetric logits give (e_a - p) pattern") {
  Net net = single_layer(2, 2, Head::Softmax);
  std::vector<double> x = {1.0, 0.0};
  Gradient g = log_prob_grad(net, x, 0);
  // logits equal -> p = (.5,.5); dlogits = (0.5, -0.5), W grads = dlogit*x
  CHECK(g.layers[0].w[0] == doctest::Approx(0.5));
  CHECK(g.layers[0].w[1] == doctest::Approx(0.0));
  CHECK(g.layers[0].w[2] == doctest::Approx(-0.5));
  CHECK(g.layers[0].b[0] == doctest::Approx(0.5));
  CHECK(g.layers[0].b[1] == doctest::Approx(-0.5));
}

TEST_CASE("log_prob_grad matches finite differences") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Net net = make_net({4, 8, 3}, Head::Softmax, rng);
    std::vector<double> x = random_vector(4, rng);
    int action = trial % 3;
    Gradient g = log_prob_grad(net, x, action);
    std::vector<double> fd = finite_diff(net, [&](const Net& n) {
      return std::log(forward(n, x)[static_cast<size_t>(action)]);
    });
    CHECK(max_rel_error(flatten(g), fd) < 1e-4);
  }
}

TEST_CASE("log_prob_grad: saturated softmax has near-zero gradient") {
  Net net = single_layer(1, 2, Head::Softmax);
  net.layers[0].b = {50.0, -50.0};
  Gradient g = log_prob_grad(net, std::vector<double>{1.0}, 0);
  CHECK(gradient_norm(g) < 1e-9);
}

TEST_CASE("log_prob_grad rejects bad inputs") {
  std::mt19937_64 rng(3);
  Net lin = make_net({2, 2}, Head::Linear, rng);
  CHECK_THROWS(log_prob_grad(lin, std::vector<double>{0.0, 0.0}, 0));
  Net sm = make_net({2, 2}, Head::Softmax, rng);
  CHECK_THROWS_AS(log_prob_grad(sm, std::vector<double>{0.0, 0.0}, 5),
                  std::out_of_range);
}

TEST_CASE("apply_update: zero gradient and zero learning rate are identity") {
  std::mt19937_64 rng(11);
  Net net = make_net({3, 5, 2}, Head::Linear, rng);
  std::vector<double> before = flatten(net);
  Optimizer sgd = make_sgd(0.1);
  apply_update(net, zero_gradient(net), sgd, true);
  CHECK(flatten(net) == before);
  Optimizer frozen = make_rmsprop(0.0);
  Gradient g = zero_gradient(net);
  g.layers[0].w[0] = 3.0;
  apply_update(net, g, frozen, true);
  CHECK(flatten(net) == before);
}

TEST_CASE("apply_update: SGD ascent definition") {
  Net net = single_layer(1, 1, Head::Linear);
  net.layers[0].w[0] = 1.0;
  Gradient g = zero_gradient(net);
  g.layers[0].w[0] = 2.0;
  Optimizer sgd = make_sgd(0.1);
  apply_update(net, g, sgd, true);
  CHECK(net.layers[0].w[0] == doctest::Approx(1.2));
  apply_update(net, g, sgd, false);
  CHECK(net.layers[0].w[0] == doctest::Approx(1.0));
}

TEST_CASE("apply_update: RMSProp first step") {
  Net net = single_layer(1, 1, Head::Linear);
  Gradient g = zero_gradient(net);
  g.layers[0].w[0] = 1.0;
  Optimizer rms = make_rmsprop(0.0025, 0.95, 0.01);
  apply_update(net, g, rms, true);
  double expected = 0.0025 / std::sqrt(0.05 + 0.01);
  CHECK(net.layers[0].w[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(rms.cache.layers[0].w[0] == doctest::Approx(0.05));
}

TEST_CASE("flatten/unflatten round trip and counting") {
  std::mt19937_64 rng(5);
  Net net = make_net({2, 2}, Head::Linear, rng);
  std::vector<double> flat = flatten(net);
  CHECK(flat.size() == 6);  // 2x2 weights + 2 biases
  Net copy = net;
  unflatten(copy, flat);
  CHECK(net_bytes(copy) == net_bytes(net));

  // permuted parameters describe a different network
  std::vector<double> perm = flat;
  std::swap(perm[0], perm[1]);
  net.layers[0].w = {1.0, 2.0, 3.0, 4.0};
  flat = flatten(net);
  perm = flat;
  std::swap(perm[0], perm[1]);
  unflatten(copy, perm);
  CHECK(forward(copy, std::vector<double>{1.0, 0.0}) !=
        forward(net, std::vector<double>{1.0, 0.0}));

  CHECK_THROWS_AS(unflatten(copy, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("softmax properties: simplex, shift invariance") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits = random_vector(5, rng, -30.0, 30.0);
    std::vector<double> p = softmax(logits);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-6);
    std::vector<double> shifted = logits;
    for (double& v : shifted) v += 17.5;
    std::vector<double> q = softmax(shifted);
    for (size_t i = 0; i < p.size(); ++i)
      CHECK(std::abs(p[i] - q[i]) < 1e-9);
  }
}

TEST_CASE("model serialization round trips bit-exactly") {
  std::mt19937_64 rng(19);
  Net net = make_net({6, 9, 4}, Head::Softmax, rng);
  std::string bytes = net_bytes(net);
  std::istringstream is(bytes, std::ios::binary);
  Net back = load_net(is);
  CHECK(net_bytes(back) == bytes);
  CHECK(net_checksum(back) == net_checksum(net));

  SUBCASE("truncated stream is rejected") {
    std::istringstream cut(bytes.substr(0, bytes.size() / 2),
                           std::ios::binary);
    CHECK_THROWS_AS(load_net(cut), std::runtime_error);
  }
  SUBCASE("bad magic is rejected") {
    std::string bad = bytes;
    bad[0] = 'X';
    std::istringstream badis(bad, std::ios::binary);
    CHECK_THROWS_AS(load_net(badis), std::runtime_error);
  }
}

TEST_CASE("make_net is deterministic per seed") {
  std::mt19937_64 a(99), b(99), c(100);
  Net na = make_net({4, 8, 2}, Head::Linear, a);
  Net nb = make_net({4, 8, 2}, Head::Linear, b);
  Net nc = make_net({4, 8, 2}, Head::Linear, c);
  CHECK(net_bytes(na) == net_bytes(nb));
  CHECK(net_bytes(na) != net_bytes(nc));
}

TEST_CASE("squared TD-style loss gradient matches finite differences") {
  // descent gradient of 0.5*(y - out[a])^2 via backward upstream
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    Net net = make_net({3, 6, 2}, Head::Linear, rng);
    std::vector<double> x = random_vector(3, rng);
    int a = trial % 2;
    double y = 1.3;
    std::vector<double> out = forward(net, x);
    std::vector<double> upstream(2, 0.0);
    upstream[static_cast<size_t>(a)] = -(y - out[static_cast<size_t>(a)]);
    Gradient g = backward(net, x, upstream);
    std::vector<double> fd = finite_diff(net, [&](const Net& n) {
      double q = forward(n, x)[static_cast<size_t>(a)];
      return 0.5 * (y - q) * (y - q);
    });
    CHECK(max_rel_error(flatten(g), fd) < 1e-4);
  }
}
