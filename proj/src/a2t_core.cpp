#include "a2t/a2t_core.hpp"

#include <cmath>
#include <stdexcept>

namespace a2t {

Ensemble::Ensemble(Mode mode, std::vector<ExpertSlot> experts,
                   std::optional<Net> base, Net attention)
    : mode_(mode),
      experts_(std::move(experts)),
      base_(std::move(base)),
      attention_(std::move(attention)) {
  if (member_count() < 1)
    throw std::invalid_argument("ensemble needs at least one member");
  if (attention_.head != Head::Softmax)
    throw std::invalid_argument("attention network must have a softmax head");
  if (attention_.output_dim() != member_count())
    throw std::invalid_argument("attention width must equal member count");
  Head want = (mode_ == Mode::Policy) ? Head::Softmax : Head::Linear;
  int actions = -1, inputs = attention_.input_dim();
  auto check_member = [&](const Net& n, const char* what) {
    if (n.head != want)
      throw std::invalid_argument(std::string(what) + ": head/mode mismatch");
    if (actions == -1) actions = n.output_dim();
    if (n.output_dim() != actions || n.input_dim() != inputs)
      throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  };
  for (ExpertSlot& e : experts_) {
    check_member(e.net, "expert");
    e.checksum = net_checksum(e.net);
  }
  if (base_) check_member(*base_, "base");
}

Ensemble Ensemble::make(Mode mode, std::vector<ExpertSlot> experts,
                        bool with_base, int input_dim, int action_count,
                        int hidden, std::mt19937_64& rng) {
  Head member_head = (mode == Mode::Policy) ? Head::Softmax : Head::Linear;
  std::optional<Net> base;
  if (with_base)
    base = make_net({input_dim, hidden, action_count}, member_head, rng);
  int width = static_cast<int>(experts.size()) + (with_base ? 1 : 0);
  Net attention = make_net({input_dim, hidden, width}, Head::Softmax, rng);
  return Ensemble(mode, std::move(experts), std::move(base),
                  std::move(attention));
}

int Ensemble::action_count() const {
  return base_ ? base_->output_dim() : experts_.front().net.output_dim();
}

int Ensemble::input_dim() const { return attention_.input_dim(); }

const Net& Ensemble::base() const {
  if (!base_) throw std::logic_error("ensemble has no base network");
  return *base_;
}

Net& Ensemble::mutable_base() {
  if (!base_) throw std::logic_error("ensemble has no base network");
  return *base_;
}

std::vector<double> Ensemble::expert_view(int i,
                                          std::span<const double> s) const {
  const ExpertSlot& e = experts_.at(static_cast<size_t>(i));
  if (e.mask == MaskRegion::None)
    return forward(e.net, s);
  std::vector<double> view(s.begin(), s.end());
  apply_mask(view, e.mask, e.mask_rows, e.mask_cols);
  return forward(e.net, view);
}

std::vector<double> Ensemble::attend(std::span<const double> s) const {
  return forward(attention_, s);
}

CombineResult Ensemble::combine(std::span<const double> s) const {
  return combine_with(attention_, base_ ? &*base_ : nullptr, s);
}

CombineResult Ensemble::combine_with(const Net& attention, const Net* base,
                                     std::span<const double> s) const {
  CombineResult res;
  res.weights = forward(attention, s);
  for (size_t i = 0; i < experts_.size(); ++i)
    res.member_outputs.push_back(expert_view(static_cast<int>(i), s));
  if (base_) {
    if (base == nullptr)
      throw std::invalid_argument("combine_with: base parameters required");
    res.member_outputs.push_back(forward(*base, s));
  }
  res.output.assign(static_cast<size_t>(action_count()), 0.0);
  for (size_t i = 0; i < res.member_outputs.size(); ++i)
    for (size_t a = 0; a < res.output.size(); ++a)
      res.output[a] += res.weights[i] * res.member_outputs[i][a];
  return res;
}

Gradient Ensemble::grad_attention_logpi(std::span<const double> s,
                                        int a) const {
  if (mode_ != Mode::Policy)
    throw std::logic_error("grad_attention_logpi: policy mode required");
  if (a < 0 || a >= action_count())
    throw std::out_of_range("action out of range");
  CombineResult c = combine(s);
  double pi = c.output[static_cast<size_t>(a)];
  // d log pi_T / de_j = w_j (K_j(s,a)/pi_T(s,a) - 1)
  std::vector<double> dlogits(c.weights.size());
  for (size_t j = 0; j < c.weights.size(); ++j)
    dlogits[j] =
        c.weights[j] * (c.member_outputs[j][static_cast<size_t>(a)] / pi - 1.0);
  return backward_logits(attention_, s, dlogits);
}

Gradient Ensemble::grad_attention_qloss(std::span<const double> s, int a,
                                        double y) const {
  if (mode_ != Mode::Value)
    throw std::logic_error("grad_attention_qloss: value mode required");
  if (a < 0 || a >= action_count())
    throw std::out_of_range("action out of range");
  CombineResult c = combine(s);
  double q = c.output[static_cast<size_t>(a)];
  double residual = y - q;
  // dQ_T/de_j = w_j (K_j(s,a) - Q_T(s,a)); loss gradient = -residual * dQ_T.
  std::vector<double> dlogits(c.weights.size());
  for (size_t j = 0; j < c.weights.size(); ++j)
    dlogits[j] = -residual * c.weights[j] *
                 (c.member_outputs[j][static_cast<size_t>(a)] - q);
  return backward_logits(attention_, s, dlogits);
}

std::optional<int> Ensemble::freeze_check() const {
  for (size_t i = 0; i < experts_.size(); ++i)
    if (net_checksum(experts_[i].net) != experts_[i].checksum)
      return static_cast<int>(i);
  return std::nullopt;
}

}  // namespace a2t
