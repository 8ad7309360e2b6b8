#include "a2t/approximator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace a2t {

namespace {

constexpr char kMagic[4] = {'A', '2', 'T', '1'};

struct ForwardCache {
  // act[0] is the input; act[k+1] is the post-activation of layer k.
  std::vector<std::vector<double>> act;
  std::vector<std::vector<double>> pre;  // pre-activation per layer
  std::vector<double> out;               // head output
};

void affine(const Layer& l, std::span<const double> x, std::vector<double>& y) {
  y.assign(l.out, 0.0);
  const double* xp = x.data();
  if (l.in >= 32) {
    // One-hot style inputs (grid observations) make the matvec mostly
    // wasted work; accumulate columns for the nonzero entries instead.
    int nz[8];
    int count = 0;
    for (int j = 0; j < l.in; ++j) {
      if (xp[j] == 0.0) continue;
      if (count == 8) {
        count = -1;
        break;
      }
      nz[count++] = j;
    }
    if (count >= 0) {
      for (int i = 0; i < l.out; ++i) y[i] = l.b[i];
      for (int k = 0; k < count; ++k) {
        const int j = nz[k];
        const double v = xp[j];
        for (int i = 0; i < l.out; ++i)
          y[i] += l.w[static_cast<size_t>(i) * l.in + j] * v;
      }
      return;
    }
  }
  for (int i = 0; i < l.out; ++i) {
    const double* row = &l.w[static_cast<size_t>(i) * l.in];
    // four partial sums so the reduction can keep multiple FMAs in flight
    double s0 = l.b[i], s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int j = 0;
    for (; j + 4 <= l.in; j += 4) {
      s0 += row[j] * xp[j];
      s1 += row[j + 1] * xp[j + 1];
      s2 += row[j + 2] * xp[j + 2];
      s3 += row[j + 3] * xp[j + 3];
    }
    for (; j < l.in; ++j) s0 += row[j] * xp[j];
    y[i] = s0 + s1 + s2 + s3;
  }
}

ForwardCache run_forward(const Net& net, std::span<const double> x) {
  if (net.layers.empty()) throw std::invalid_argument("empty network");
  if (static_cast<int>(x.size()) != net.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  ForwardCache c;
  c.act.emplace_back(x.begin(), x.end());
  for (size_t k = 0; k < net.layers.size(); ++k) {
    std::vector<double> pre;
    affine(net.layers[k], c.act.back(), pre);
    c.pre.push_back(pre);
    if (k + 1 < net.layers.size())
      for (double& v : pre) v = std::max(0.0, v);
    c.act.push_back(std::move(pre));
  }
  const std::vector<double>& logits = c.act.back();
  c.out = (net.head == Head::Softmax) ? softmax(logits) : logits;
  return c;
}

// Backprop from a gradient on the final-layer logits.
Gradient backprop(const Net& net, const ForwardCache& c,
                  std::vector<double> d) {
  Gradient g = zero_gradient(net);
  for (int k = static_cast<int>(net.layers.size()) - 1; k >= 0; --k) {
    const Layer& l = net.layers[static_cast<size_t>(k)];
    Layer& gl = g.layers[static_cast<size_t>(k)];
    const std::vector<double>& input = c.act[static_cast<size_t>(k)];
    for (int i = 0; i < l.out; ++i) {
      gl.b[i] = d[i];
      double* grow = &gl.w[static_cast<size_t>(i) * l.in];
      const double di = d[i];
      for (int j = 0; j < l.in; ++j)
        if (input[j] != 0.0) grow[j] = di * input[j];
    }
    if (k > 0) {
      std::vector<double> dprev(l.in, 0.0);
      for (int i = 0; i < l.out; ++i) {
        const double* row = &l.w[static_cast<size_t>(i) * l.in];
        for (int j = 0; j < l.in; ++j) dprev[j] += row[j] * d[i];
      }
      const std::vector<double>& pre = c.pre[static_cast<size_t>(k - 1)];
      for (int j = 0; j < l.in; ++j)
        if (pre[j] <= 0.0) dprev[j] = 0.0;
      d = std::move(dprev);
    }
  }
  return g;
}

template <typename T>
void write_raw(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("model file truncated");
  return v;
}

}  // namespace

bool same_shape(const Net& net, const Gradient& g) {
  if (net.layers.size() != g.layers.size()) return false;
  for (size_t k = 0; k < net.layers.size(); ++k)
    if (net.layers[k].in != g.layers[k].in ||
        net.layers[k].out != g.layers[k].out)
      return false;
  return true;
}

Gradient zero_gradient(const Net& net) {
  Gradient g;
  for (const Layer& l : net.layers) {
    Layer z;
    z.in = l.in;
    z.out = l.out;
    z.w.assign(l.w.size(), 0.0);
    z.b.assign(l.b.size(), 0.0);
    g.layers.push_back(std::move(z));
  }
  return g;
}

void scale_gradient(Gradient& g, double factor) {
  for (Layer& l : g.layers) {
    for (double& v : l.w) v *= factor;
    for (double& v : l.b) v *= factor;
  }
}

void add_gradient(Gradient& acc, const Gradient& g, double factor) {
  if (acc.layers.size() != g.layers.size())
    throw std::invalid_argument("add_gradient: shape mismatch");
  for (size_t k = 0; k < acc.layers.size(); ++k) {
    Layer& a = acc.layers[k];
    const Layer& b = g.layers[k];
    if (a.w.size() != b.w.size() || a.b.size() != b.b.size())
      throw std::invalid_argument("add_gradient: shape mismatch");
    for (size_t i = 0; i < a.w.size(); ++i) a.w[i] += factor * b.w[i];
    for (size_t i = 0; i < a.b.size(); ++i) a.b[i] += factor * b.b[i];
  }
}

double gradient_norm(const Gradient& g) {
  double s = 0.0;
  for (const Layer& l : g.layers) {
    for (double v : l.w) s += v * v;
    for (double v : l.b) s += v * v;
  }
  return std::sqrt(s);
}

Net make_net(const std::vector<int>& dims, Head head, std::mt19937_64& rng) {
  if (dims.size() < 2) throw std::invalid_argument("make_net: need >= 2 dims");
  Net net;
  net.head = head;
  for (size_t k = 0; k + 1 < dims.size(); ++k) {
    Layer l;
    l.in = dims[k];
    l.out = dims[k + 1];
    if (l.in <= 0 || l.out <= 0)
      throw std::invalid_argument("make_net: nonpositive dimension");
    double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
    std::uniform_real_distribution<double> u(-bound, bound);
    l.w.resize(static_cast<size_t>(l.in) * l.out);
    l.b.resize(static_cast<size_t>(l.out));
    for (double& v : l.w) v = u(rng);
    for (double& v : l.b) v = u(rng);
    net.layers.push_back(std::move(l));
  }
  return net;
}

std::vector<double> softmax(std::span<const double> logits) {
  double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> forward(const Net& net, std::span<const double> x) {
  return run_forward(net, x).out;
}

Gradient backward(const Net& net, std::span<const double> x,
                  std::span<const double> upstream) {
  ForwardCache c = run_forward(net, x);
  if (static_cast<int>(upstream.size()) != net.output_dim())
    throw std::invalid_argument("backward: upstream dimension mismatch");
  std::vector<double> d(upstream.begin(), upstream.end());
  if (net.head == Head::Softmax) {
    // d/dlogit_j of u.softmax = p_j (u_j - u.p)
    const std::vector<double>& p = c.out;
    double up = 0.0;
    for (size_t i = 0; i < p.size(); ++i) up += upstream[i] * p[i];
    for (size_t j = 0; j < p.size(); ++j) d[j] = p[j] * (upstream[j] - up);
  }
  return backprop(net, c, std::move(d));
}

Gradient backward_logits(const Net& net, std::span<const double> x,
                         std::span<const double> dlogits) {
  ForwardCache c = run_forward(net, x);
  if (static_cast<int>(dlogits.size()) != net.output_dim())
    throw std::invalid_argument("backward_logits: dimension mismatch");
  return backprop(net, c, std::vector<double>(dlogits.begin(), dlogits.end()));
}

Gradient log_prob_grad(const Net& net, std::span<const double> x, int action) {
  if (net.head != Head::Softmax)
    throw std::invalid_argument("log_prob_grad: softmax head required");
  if (action < 0 || action >= net.output_dim())
    throw std::out_of_range("log_prob_grad: action out of range");
  ForwardCache c = run_forward(net, x);
  const std::vector<double>& p = c.out;
  std::vector<double> d(p.size());
  for (size_t j = 0; j < p.size(); ++j)
    d[j] = (static_cast<int>(j) == action ? 1.0 : 0.0) - p[j];
  return backprop(net, c, std::move(d));
}

Optimizer make_sgd(double learning_rate) {
  Optimizer o;
  o.kind = OptKind::SGD;
  o.learning_rate = learning_rate;
  return o;
}

Optimizer make_rmsprop(double learning_rate, double decay, double epsilon) {
  Optimizer o;
  o.kind = OptKind::RMSProp;
  o.learning_rate = learning_rate;
  o.decay = decay;
  o.epsilon = epsilon;
  return o;
}

void apply_update(Net& net, const Gradient& g, Optimizer& opt, bool ascent) {
  if (!same_shape(net, g))
    throw std::invalid_argument("apply_update: shape mismatch");
  double sign = ascent ? 1.0 : -1.0;
  if (opt.kind == OptKind::SGD) {
    for (size_t k = 0; k < net.layers.size(); ++k) {
      Layer& l = net.layers[k];
      const Layer& gl = g.layers[k];
      for (size_t i = 0; i < l.w.size(); ++i)
        l.w[i] += sign * opt.learning_rate * gl.w[i];
      for (size_t i = 0; i < l.b.size(); ++i)
        l.b[i] += sign * opt.learning_rate * gl.b[i];
    }
    return;
  }
  if (opt.cache.layers.empty()) opt.cache = zero_gradient(net);
  if (!same_shape(net, opt.cache))
    throw std::invalid_argument("apply_update: optimizer cache shape mismatch");
  for (size_t k = 0; k < net.layers.size(); ++k) {
    Layer& l = net.layers[k];
    const Layer& gl = g.layers[k];
    Layer& cl = opt.cache.layers[k];
    for (size_t i = 0; i < l.w.size(); ++i) {
      cl.w[i] = opt.decay * cl.w[i] + (1.0 - opt.decay) * gl.w[i] * gl.w[i];
      l.w[i] += sign * opt.learning_rate * gl.w[i] /
                std::sqrt(cl.w[i] + opt.epsilon);
    }
    for (size_t i = 0; i < l.b.size(); ++i) {
      cl.b[i] = opt.decay * cl.b[i] + (1.0 - opt.decay) * gl.b[i] * gl.b[i];
      l.b[i] += sign * opt.learning_rate * gl.b[i] /
                std::sqrt(cl.b[i] + opt.epsilon);
    }
  }
}

namespace {
template <typename Layered>
std::vector<double> flatten_layers(const Layered& n) {
  std::vector<double> v;
  for (const Layer& l : n.layers) {
    v.insert(v.end(), l.w.begin(), l.w.end());
    v.insert(v.end(), l.b.begin(), l.b.end());
  }
  return v;
}

template <typename Layered>
void unflatten_layers(Layered& n, std::span<const double> v) {
  size_t pos = 0;
  for (Layer& l : n.layers) {
    if (pos + l.w.size() + l.b.size() > v.size())
      throw std::invalid_argument("unflatten: vector too short");
    std::copy(v.begin() + pos, v.begin() + pos + l.w.size(), l.w.begin());
    pos += l.w.size();
    std::copy(v.begin() + pos, v.begin() + pos + l.b.size(), l.b.begin());
    pos += l.b.size();
  }
  if (pos != v.size())
    throw std::invalid_argument("unflatten: vector length mismatch");
}
}  // namespace

std::vector<double> flatten(const Net& net) { return flatten_layers(net); }
void unflatten(Net& net, std::span<const double> v) {
  unflatten_layers(net, v);
}
std::vector<double> flatten(const Gradient& g) { return flatten_layers(g); }
void unflatten(Gradient& g, std::span<const double> v) {
  unflatten_layers(g, v);
}

void save_net(const Net& net, std::ostream& os) {
  os.write(kMagic, 4);
  write_raw<uint8_t>(os, net.head == Head::Softmax ? 1 : 0);
  write_raw<uint32_t>(os, static_cast<uint32_t>(net.layers.size()));
  for (const Layer& l : net.layers) {
    write_raw<uint32_t>(os, static_cast<uint32_t>(l.in));
    write_raw<uint32_t>(os, static_cast<uint32_t>(l.out));
  }
  for (const Layer& l : net.layers) {
    os.write(reinterpret_cast<const char*>(l.w.data()),
             static_cast<std::streamsize>(l.w.size() * sizeof(double)));
    os.write(reinterpret_cast<const char*>(l.b.data()),
             static_cast<std::streamsize>(l.b.size() * sizeof(double)));
  }
}

Net load_net(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("bad model file: missing A2T1 magic");
  Net net;
  net.head = read_raw<uint8_t>(is) ? Head::Softmax : Head::Linear;
  uint32_t count = read_raw<uint32_t>(is);
  if (count == 0 || count > 64)
    throw std::runtime_error("bad model file: layer count");
  for (uint32_t k = 0; k < count; ++k) {
    Layer l;
    l.in = static_cast<int>(read_raw<uint32_t>(is));
    l.out = static_cast<int>(read_raw<uint32_t>(is));
    if (l.in <= 0 || l.out <= 0 || l.in > 1 << 20 || l.out > 1 << 20)
      throw std::runtime_error("bad model file: layer dims");
    l.w.resize(static_cast<size_t>(l.in) * l.out);
    l.b.resize(static_cast<size_t>(l.out));
    net.layers.push_back(std::move(l));
  }
  for (Layer& l : net.layers) {
    is.read(reinterpret_cast<char*>(l.w.data()),
            static_cast<std::streamsize>(l.w.size() * sizeof(double)));
    is.read(reinterpret_cast<char*>(l.b.data()),
            static_cast<std::streamsize>(l.b.size() * sizeof(double)));
    if (!is) throw std::runtime_error("model file truncated");
  }
  return net;
}

void save_net_file(const Net& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  save_net(net, os);
}

Net load_net_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open model file: " + path);
  return load_net(is);
}

std::string net_bytes(const Net& net) {
  std::ostringstream os(std::ios::binary);
  save_net(net, os);
  return os.str();
}

uint64_t checksum_bytes(const std::string& bytes) {
  // FNV-1a 64-bit
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

uint64_t net_checksum(const Net& net) { return checksum_bytes(net_bytes(net)); }

}  // namespace a2t
