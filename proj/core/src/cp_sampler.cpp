#include "fairmdp/cp_sampler.hpp"

#include <cmath>
#include <string>

#include "fairmdp/error.hpp"
#include "fairmdp/model.hpp"

namespace fairmdp {
namespace {

class SamplerState {
 public:
  SamplerState(const CountState& x, const PolicyOutput& out, std::span<const double> budgets,
               std::span<const double> consumption)
      : S_(out.num_states),
        A_(out.num_actions),
        K_(static_cast<int>(budgets.size())),
        consumption_(consumption),
        remaining_(x.counts),
        budget_(K_),
        forbidden_(static_cast<std::size_t>(S_) * A_, 0),
        action_(S_, A_) {
    require(x.size() == S_, ErrorCode::kLengthMismatch, "count state and priority matrix disagree on S");
    require(out.priorities.size() == static_cast<std::size_t>(S_) * A_, ErrorCode::kLengthMismatch,
            "priority matrix has wrong size");
    require(static_cast<int>(out.resource_use.size()) == K_, ErrorCode::kLengthMismatch,
            "resource_use must have one entry per resource");
    require(consumption.size() == static_cast<std::size_t>(K_) * A_, ErrorCode::kLengthMismatch,
            "consumption must be K x A");
    for (int k = 0; k < K_; ++k) {
      const double p = out.resource_use[k];
      require(p >= 0.0 && p <= 1.0, ErrorCode::kConfigInvalid, "resource_use entries must lie in [0,1]");
      budget_[k] = budgets[k] * p;
    }
    for (int s = 0; s < S_; ++s) {
      require(remaining_[s] >= 0, ErrorCode::kInvalidModel, "negative count");
      if (remaining_[s] == 0) forbid_row(s);
    }
    for (int s = 0; s < S_; ++s)
      for (int a = 0; a < A_; ++a) {
        const double u = out.priority(s, a);
        require(forbidden(s, a) || (std::isfinite(u) && u > 0.0), ErrorCode::kDegeneratePriorities,
                "priority entries of occupied states must be positive and finite");
      }
  }

  bool done() const { return num_forbidden_ == S_ * A_; }
  int num_forbidden() const { return num_forbidden_; }
  bool forbidden(int s, int a) const { return forbidden_[static_cast<std::size_t>(s) * A_ + a] != 0; }

  double available_mass(const PolicyOutput& out) const {
    double total = 0.0;
    for (int s = 0; s < S_; ++s)
      for (int a = 0; a < A_; ++a)
        if (!forbidden(s, a)) total += out.priority(s, a);
    return total;
  }

  SamplePair draw(const PolicyOutput& out, double total, Rng& rng) const {
    const double target = uniform01(rng) * total;
    double acc = 0.0;
    SamplePair last{-1, -1};
    for (int s = 0; s < S_; ++s)
      for (int a = 0; a < A_; ++a) {
        if (forbidden(s, a)) continue;
        acc += out.priority(s, a);
        last = {s, a};
        if (target < acc) return last;
      }
    return last;
  }

  void apply(SamplePair p) {
    bool affordable = true;
    for (int k = 0; k < K_; ++k)
      if (consumption_[static_cast<std::size_t>(k) * A_ + p.action] > budget_[k] + kBudgetEps) affordable = false;
    if (affordable) {
      action_.at(p.state, p.action) += 1;
      remaining_[p.state] -= 1;
      for (int k = 0; k < K_; ++k) budget_[k] -= consumption_[static_cast<std::size_t>(k) * A_ + p.action];
      if (remaining_[p.state] == 0) forbid_row(p.state);
    } else {
      forbid(p.state, p.action);
    }
  }

  CountAction& action() { return action_; }

 private:
  void forbid(int s, int a) {
    auto& f = forbidden_[static_cast<std::size_t>(s) * A_ + a];
    if (!f) {
      f = 1;
      ++num_forbidden_;
    }
  }
  void forbid_row(int s) {
    for (int a = 0; a < A_; ++a) forbid(s, a);
  }

  int S_, A_, K_;
  std::span<const double> consumption_;
  std::vector<int> remaining_;
  std::vector<double> budget_;
  std::vector<char> forbidden_;
  int num_forbidden_ = 0;
  CountAction action_;
};

}  // namespace

SampleTrace sample_count_action(const CountState& x, const PolicyOutput& out, std::span<const double> budgets,
                                std::span<const double> consumption, Rng& rng) {
  SamplerState state(x, out, budgets, consumption);
  SampleTrace trace;
  trace.forbidden_initial = state.num_forbidden();
  while (!state.done()) {
    const double total = state.available_mass(out);
    const SamplePair p = state.draw(out, total, rng);
    trace.logprob += std::log(out.priority(p.state, p.action)) - std::log(total);
    trace.chosen_pairs.push_back(p);
    state.apply(p);
    trace.forbidden_history.push_back(state.num_forbidden());
    ++trace.iterations;
  }
  trace.action = std::move(state.action());
  return trace;
}

double logprob_of(const CountState& x, const PolicyOutput& out, std::span<const double> budgets,
                  std::span<const double> consumption, const SampleTrace& trace, std::vector<double>* grad) {
  SamplerState state(x, out, budgets, consumption);
  if (grad) grad->assign(out.priorities.size(), 0.0);
  double logprob = 0.0;
  for (std::size_t t = 0; t < trace.chosen_pairs.size(); ++t) {
    const SamplePair p = trace.chosen_pairs[t];
    require(!state.done() && p.state >= 0 && p.state < out.num_states && p.action >= 0 &&
                p.action < out.num_actions && !state.forbidden(p.state, p.action),
            ErrorCode::kTraceMismatch, "trace draw " + std::to_string(t) + " is not available on replay");
    const double total = state.available_mass(out);
    logprob += std::log(out.priority(p.state, p.action)) - std::log(total);
    if (grad) {
      for (int s = 0; s < out.num_states; ++s)
        for (int a = 0; a < out.num_actions; ++a)
          if (!state.forbidden(s, a)) (*grad)[static_cast<std::size_t>(s) * out.num_actions + a] -= 1.0 / total;
      (*grad)[static_cast<std::size_t>(p.state) * out.num_actions + p.action] += 1.0 / out.priority(p.state, p.action);
    }
    state.apply(p);
  }
  require(state.done(), ErrorCode::kTraceMismatch, "trace ends before the forbidden set is full");
  require(state.action() == trace.action, ErrorCode::kTraceMismatch, "replayed action differs from the trace");
  return logprob;
}

}  // namespace fairmdp
