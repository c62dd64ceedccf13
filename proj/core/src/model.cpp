#include "fairmdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace fairmdp {

namespace {

constexpr double kRowSumTol = 1e-12;

void check_distribution(std::span<const double> p, const std::string& what) {
  double total = 0.0;
  for (double v : p) {
    require(std::isfinite(v) && v >= 0.0 && v <= 1.0, ErrorCode::kInvalidModel,
            what + " has an entry outside [0,1]");
    total += v;
  }
  require(std::abs(total - 1.0) <= kRowSumTol, ErrorCode::kInvalidModel,
          what + " does not sum to 1 (sum=" + std::to_string(total) + ")");
}

bool close(std::span<const double> a, std::span<const double> b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

// Checked integer power; returns 0 on overflow past `cap`.
std::size_t checked_pow(std::size_t base, int exp, std::size_t cap) {
  std::size_t result = 1;
  for (int i = 0; i < exp; ++i) {
    if (result > cap / std::max<std::size_t>(base, 1)) return 0;
    result *= base;
  }
  return result;
}

}  // namespace

SubMdp::SubMdp(int num_states, int num_actions, std::vector<double> transition,
               std::vector<double> reward, std::vector<double> initial)
    : num_states_(num_states),
      num_actions_(num_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      initial_(std::move(initial)) {
  require(num_states_ > 0 && num_actions_ > 0, ErrorCode::kInvalidModel,
          "sub-MDP needs at least one state and one action");
  const auto s = static_cast<std::size_t>(num_states_);
  const auto a = static_cast<std::size_t>(num_actions_);
  require(transition_.size() == s * a * s, ErrorCode::kInvalidModel, "transition table has wrong size");
  require(reward_.size() == s * a, ErrorCode::kInvalidModel, "reward table has wrong size");
  require(initial_.size() == s, ErrorCode::kInvalidModel, "initial distribution has wrong size");
  for (int st = 0; st < num_states_; ++st)
    for (int ac = 0; ac < num_actions_; ++ac)
      check_distribution(transition_row(st, ac),
                         "transition row (" + std::to_string(st) + "," + std::to_string(ac) + ")");
  for (double r : reward_)
    require(std::isfinite(r), ErrorCode::kInvalidModel, "reward must be finite");
  check_distribution(initial_, "initial distribution");
}

double SubMdp::max_abs_reward() const noexcept {
  double m = 0.0;
  for (double r : reward_) m = std::max(m, std::abs(r));
  return m;
}

bool SubMdp::approx_equal(const SubMdp& other, double tol) const {
  return num_states_ == other.num_states_ && num_actions_ == other.num_actions_ &&
         close(transition_, other.transition_, tol) && close(reward_, other.reward_, tol) &&
         close(initial_, other.initial_, tol);
}

WcmdpSpec::WcmdpSpec(std::vector<SubMdp> sub_mdps, std::vector<double> consumption,
                     std::vector<double> budgets, double discount)
    : sub_mdps_(std::move(sub_mdps)),
      consumption_(std::move(consumption)),
      budgets_(std::move(budgets)),
      discount_(discount) {
  require(!sub_mdps_.empty(), ErrorCode::kInvalidModel, "a WCMDP needs at least one sub-MDP");
  require(discount_ >= 0.0 && discount_ < 1.0, ErrorCode::kInvalidModel, "discount must lie in [0,1)");
  for (const auto& sub : sub_mdps_) {
    require(sub.num_states() == num_states() && sub.num_actions() == num_actions(),
            ErrorCode::kInvalidModel, "all sub-MDPs must share S and A");
  }
  const auto n = static_cast<std::size_t>(num_submdps());
  const auto a = static_cast<std::size_t>(num_actions());
  require(consumption_.size() == budgets_.size() * n * a, ErrorCode::kInvalidModel,
          "consumption table must have K*N*A entries");
  for (double d : consumption_)
    require(std::isfinite(d) && d >= 0.0, ErrorCode::kInvalidModel, "consumption must be >= 0");
  for (double b : budgets_)
    require(std::isfinite(b) && b >= 0.0, ErrorCode::kInvalidModel, "budgets must be >= 0");

  idle_actions_.assign(n, -1);
  for (int sub = 0; sub < num_submdps(); ++sub) {
    for (int ac = 0; ac < num_actions() && idle_actions_[sub] < 0; ++ac) {
      bool idle = true;
      for (int k = 0; k < num_resources(); ++k) idle = idle && this->consumption(k, sub, ac) == 0.0;
      if (idle) idle_actions_[sub] = ac;
    }
    require(idle_actions_[sub] >= 0, ErrorCode::kInvalidModel,
            "sub-MDP " + std::to_string(sub) + " has no idle action");
  }
}

WcmdpSpec WcmdpSpec::replicated(const SubMdp& sub, int num_submdps,
                                std::span<const double> consumption_per_action,
                                std::vector<double> budgets, double discount) {
  require(num_submdps >= 1, ErrorCode::kInvalidModel, "N must be >= 1");
  const int a = sub.num_actions();
  const auto k_count = budgets.size();
  require(consumption_per_action.size() == k_count * static_cast<std::size_t>(a),
          ErrorCode::kInvalidModel, "per-action consumption must have K*A entries");
  std::vector<double> consumption;
  consumption.reserve(k_count * num_submdps * a);
  for (std::size_t k = 0; k < k_count; ++k)
    for (int n = 0; n < num_submdps; ++n)
      for (int ac = 0; ac < a; ++ac) consumption.push_back(consumption_per_action[k * a + ac]);
  return WcmdpSpec(std::vector<SubMdp>(num_submdps, sub), std::move(consumption), std::move(budgets),
                   discount);
}

std::vector<double> WcmdpSpec::shared_consumption() const {
  std::vector<double> d(static_cast<std::size_t>(num_resources()) * num_actions());
  for (int k = 0; k < num_resources(); ++k)
    for (int a = 0; a < num_actions(); ++a) d[k * num_actions() + a] = consumption(k, 0, a);
  return d;
}

bool WcmdpSpec::is_feasible(std::span<const int> joint_action) const {
  if (joint_action.size() != sub_mdps_.size()) return false;
  for (int k = 0; k < num_resources(); ++k) {
    double used = 0.0;
    for (int n = 0; n < num_submdps(); ++n) {
      const int a = joint_action[n];
      if (a < 0 || a >= num_actions()) return false;
      used += consumption(k, n, a);
    }
    if (used > budgets_[k] + kBudgetEps) return false;
  }
  return true;
}

WcmdpSpec WcmdpSpec::resized(int num_submdps, std::vector<double> budgets) const {
  require(is_symmetric(*this), ErrorCode::kNotSymmetric, "resized() needs a symmetric spec");
  require(budgets.size() == budgets_.size(), ErrorCode::kLengthMismatch, "budget count changed");
  const auto d = shared_consumption();
  return replicated(sub_mdps_.front(), num_submdps, d, std::move(budgets), discount_);
}

bool is_symmetric(const WcmdpSpec& spec, double tol) {
  const SubMdp& first = spec.sub_mdp(0);
  for (int n = 1; n < spec.num_submdps(); ++n) {
    if (!first.approx_equal(spec.sub_mdp(n), tol)) return false;
    for (int k = 0; k < spec.num_resources(); ++k)
      for (int a = 0; a < spec.num_actions(); ++a)
        if (std::abs(spec.consumption(k, n, a) - spec.consumption(k, 0, a)) > tol) return false;
  }
  return true;
}

Permutation::Permutation(std::vector<int> sigma) : sigma_(std::move(sigma)) {
  std::vector<char> seen(sigma_.size(), 0);
  for (int v : sigma_) {
    require(v >= 0 && static_cast<std::size_t>(v) < sigma_.size() && !seen[v], ErrorCode::kBadPermutation,
            "sigma is not a bijection on [N]");
    seen[v] = 1;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<int> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0);
  return Permutation(std::move(sigma));
}

Permutation Permutation::from_one_based(std::span<const int> sigma) {
  std::vector<int> zero_based(sigma.begin(), sigma.end());
  for (int& v : zero_based) --v;
  return Permutation(std::move(zero_based));
}

std::vector<Permutation> Permutation::all(int n) {
  std::vector<int> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 0);
  std::vector<Permutation> out;
  do {
    out.emplace_back(sigma);
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  return out;
}

Permutation Permutation::inverse() const {
  std::vector<int> inv(sigma_.size());
  for (std::size_t n = 0; n < sigma_.size(); ++n) inv[sigma_[n]] = static_cast<int>(n);
  return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& other) const {
  require(other.size() == size(), ErrorCode::kBadPermutation, "composing permutations of different sizes");
  // this.apply(other.apply(v))[n] = other.apply(v)[sigma[n]] = v[other[sigma[n]]]
  std::vector<int> out(sigma_.size());
  for (std::size_t n = 0; n < sigma_.size(); ++n) out[n] = other.sigma_[sigma_[n]];
  return Permutation(std::move(out));
}

int JointModel::action_index(std::span<const int> tuple) const {
  if (tuple.size() != static_cast<std::size_t>(num_submdps_)) return -1;
  std::size_t code = 0;
  for (int a : tuple) {
    if (a < 0 || a >= sub_actions_) return -1;
    code = code * sub_actions_ + a;
  }
  return action_lookup_[code];
}

std::vector<int> JointModel::decode_state(std::int64_t index) const {
  std::vector<int> tuple(num_submdps_);
  for (int n = num_submdps_ - 1; n >= 0; --n) {
    tuple[n] = static_cast<int>(index % sub_states_);
    index /= sub_states_;
  }
  return tuple;
}

std::int64_t JointModel::encode_state(std::span<const int> tuple) const {
  std::int64_t index = 0;
  for (int s : tuple) index = index * sub_states_ + s;
  return index;
}

double JointModel::transition(std::int64_t s, int a, std::int64_t next) const {
  const auto row = transitions(s, a);
  const auto it = std::lower_bound(row.begin(), row.end(), next,
                                   [](const JointTransition& t, std::int64_t v) { return t.next_state < v; });
  return (it != row.end() && it->next_state == next) ? it->prob : 0.0;
}

JointModel expand_joint(const WcmdpSpec& spec, const JointOptions& options) {
  const int n_sub = spec.num_submdps();
  const int s_count = spec.num_states();
  const int a_count = spec.num_actions();
  const std::size_t cap = options.max_table_entries;

  const std::size_t num_states = checked_pow(s_count, n_sub, cap);
  require(num_states != 0, ErrorCode::kCapExceeded, "S^N exceeds the joint table cap");
  const std::size_t num_tuples = checked_pow(a_count, n_sub, cap);
  require(num_tuples != 0, ErrorCode::kCapExceeded, "A^N exceeds the joint table cap");

  JointModel joint;
  joint.num_submdps_ = n_sub;
  joint.sub_states_ = s_count;
  joint.sub_actions_ = a_count;
  joint.num_states_ = static_cast<std::int64_t>(num_states);
  joint.discount_ = spec.discount();

  // Feasible joint actions, lexicographic with a_1 most significant.
  joint.action_lookup_.assign(num_tuples, -1);
  std::vector<int> tuple(n_sub);
  for (std::size_t code = 0; code < num_tuples; ++code) {
    std::size_t c = code;
    for (int n = n_sub - 1; n >= 0; --n) {
      tuple[n] = static_cast<int>(c % a_count);
      c /= a_count;
    }
    if (!spec.is_feasible(tuple)) continue;
    joint.action_lookup_[code] = static_cast<int>(joint.action_tuples_.size() / n_sub);
    joint.action_tuples_.insert(joint.action_tuples_.end(), tuple.begin(), tuple.end());
  }
  const int num_actions = joint.num_actions();
  require(num_actions > 0, ErrorCode::kInfeasibleModel, "no feasible joint action");
  require(num_states <= cap / static_cast<std::size_t>(num_actions), ErrorCode::kCapExceeded,
          "S^N * |feasible actions| = " + std::to_string(num_states) + "*" + std::to_string(num_actions) +
              " exceeds the cap of " + std::to_string(cap));
  std::vector<int> idle(n_sub);
  for (int n = 0; n < n_sub; ++n) idle[n] = spec.idle_action(n);
  joint.idle_action_index_ = joint.action_index(idle);
  require(joint.idle_action_index_ >= 0, ErrorCode::kInfeasibleModel, "all-idle action is infeasible");

  // Sparse support of every sub-MDP row, sorted by next state.
  struct Entry {
    int next;
    double prob;
  };
  std::vector<std::vector<std::vector<Entry>>> support(n_sub);
  for (int n = 0; n < n_sub; ++n) {
    const SubMdp& sub = spec.sub_mdp(n);
    support[n].resize(static_cast<std::size_t>(s_count) * a_count);
    for (int s = 0; s < s_count; ++s)
      for (int a = 0; a < a_count; ++a)
        for (int next = 0; next < s_count; ++next)
          if (const double p = sub.transition(s, a, next); p > 0.0)
            support[n][static_cast<std::size_t>(s) * a_count + a].push_back({next, p});
  }

  joint.row_offsets_.reserve(num_states * num_actions + 1);
  joint.row_offsets_.push_back(0);
  joint.rewards_.reserve(num_states * num_actions * n_sub);

  std::vector<JointTransition> current;
  std::vector<JointTransition> scratch;
  for (std::size_t s = 0; s < num_states; ++s) {
    const auto state = joint.decode_state(static_cast<std::int64_t>(s));
    for (int ai = 0; ai < num_actions; ++ai) {
      const auto act = joint.action(ai);
      current.assign(1, {0, 1.0});
      for (int n = 0; n < n_sub; ++n) {
        const auto& entries = support[n][static_cast<std::size_t>(state[n]) * a_count + act[n]];
        scratch.clear();
        for (const auto& partial : current)
          for (const auto& e : entries)
            scratch.push_back({partial.next_state * s_count + e.next, partial.prob * e.prob});
        current.swap(scratch);
      }
      joint.transitions_.insert(joint.transitions_.end(), current.begin(), current.end());
      joint.row_offsets_.push_back(joint.transitions_.size());
      for (int n = 0; n < n_sub; ++n) joint.rewards_.push_back(spec.sub_mdp(n).reward(state[n], act[n]));
    }
  }

  joint.initial_.resize(num_states);
  for (std::size_t s = 0; s < num_states; ++s) {
    const auto state = joint.decode_state(static_cast<std::int64_t>(s));
    double p = 1.0;
    for (int n = 0; n < n_sub; ++n) p *= spec.sub_mdp(n).initial(state[n]);
    joint.initial_[s] = p;
  }
  return joint;
}

}  // namespace fairmdp
