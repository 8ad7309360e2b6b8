#ifndef A2T_APPROXIMATOR_HPP
#define A2T_APPROXIMATOR_HPP

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace a2t {

enum class Head { Linear, Softmax };

/// One dense layer. Weights are row-major [out][in].
struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> w;
  std::vector<double> b;
};

/// Dense feedforward network: ReLU hidden layers, linear or softmax head.
struct Net {
  std::vector<Layer> layers;
  Head head = Head::Linear;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
};

/// Per-parameter partials, shape-congruent with a Net.
struct Gradient {
  std::vector<Layer> layers;
};

bool same_shape(const Net& net, const Gradient& g);
Gradient zero_gradient(const Net& net);
void scale_gradient(Gradient& g, double factor);
void add_gradient(Gradient& acc, const Gradient& g, double factor = 1.0);
double gradient_norm(const Gradient& g);

/// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Net make_net(const std::vector<int>& dims, Head head, std::mt19937_64& rng);

std::vector<double> softmax(std::span<const double> logits);

std::vector<double> forward(const Net& net, std::span<const double> x);

/// Gradient of upstream . output w.r.t. all parameters.
Gradient backward(const Net& net, std::span<const double> x,
                  std::span<const double> upstream);

/// Gradient of dlogits . logits w.r.t. parameters, bypassing the head
/// nonlinearity (callers that have already folded the head Jacobian).
Gradient backward_logits(const Net& net, std::span<const double> x,
                         std::span<const double> dlogits);

/// Gradient of log softmax(logits)[action]. Requires a softmax head.
Gradient log_prob_grad(const Net& net, std::span<const double> x, int action);

enum class OptKind { SGD, RMSProp };

struct Optimizer {
  OptKind kind = OptKind::SGD;
  double learning_rate = 0.01;
  double decay = 0.95;      // RMSProp only
  double epsilon = 0.01;    // RMSProp only
  Gradient cache;           // accumulated squared gradients
};

Optimizer make_sgd(double learning_rate);
Optimizer make_rmsprop(double learning_rate, double decay = 0.95,
                       double epsilon = 0.01);

/// SGD: p <- p +- lr*g. RMSProp: cache <- decay*cache + (1-decay)*g^2,
/// p <- p +- lr*g/sqrt(cache+eps). ascent=true adds, false subtracts.
void apply_update(Net& net, const Gradient& g, Optimizer& opt, bool ascent);

std::vector<double> flatten(const Net& net);
void unflatten(Net& net, std::span<const double> v);

std::vector<double> flatten(const Gradient& g);
void unflatten(Gradient& g, std::span<const double> v);

// Versioned binary model format: magic "A2T1", head tag, layer dims,
// then row-major little-endian doubles.
void save_net(const Net& net, std::ostream& os);
Net load_net(std::istream& is);
void save_net_file(const Net& net, const std::string& path);
Net load_net_file(const std::string& path);
std::string net_bytes(const Net& net);

uint64_t checksum_bytes(const std::string& bytes);
uint64_t net_checksum(const Net& net);

}  // namespace a2t

#endif
