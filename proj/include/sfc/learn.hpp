#pragma once

// Deep Q-learning: a tanh multilayer perceptron trained by backpropagation,
// uniform replay memory, and an Eval-Net / Target-Net pair.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sfc/error.hpp"
#include "sfc/rng.hpp"

namespace sfc {

struct DqnConfig {
  double learning_rate = 0.001;
  double gamma = 0.5;
  int update_period = 5;         // transitions per agent between learn steps
  int target_sync_period = 200;  // learn steps between eval -> target copies
  int batch_size = 32;
  int warmup = 2000;
  int replay_capacity = 20000;
  int hidden_width = 256;
  int hidden_layers = 4;  // 4 hidden + 1 output = 5 fully connected layers
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  int epsilon_decay_episodes = 300;
  double reward_scale = 100.0;
  std::uint64_t seed = 7;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("dqn.learning_rate must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("dqn.gamma must lie in [0,1]");
    if (update_period < 1 || target_sync_period < 1 || batch_size < 1 || warmup < 0 || replay_capacity < 1)
      throw ConfigError("dqn periods, batch size and capacity must be positive");
    if (hidden_width < 1 || hidden_layers < 0) throw ConfigError("dqn network shape is invalid");
    if (!(reward_scale > 0.0)) throw ConfigError("dqn.reward_scale must be positive");
    if (epsilon_decay_episodes < 0) throw ConfigError("dqn.epsilon_decay_episodes must be >= 0");
  }

  double epsilon(int episode) const {
    if (episode >= epsilon_decay_episodes) return epsilon_end;
    const double frac = std::min(1.0, static_cast<double>(episode) / epsilon_decay_episodes);
    return epsilon_start + (epsilon_end - epsilon_start) * frac;
  }
};

inline std::vector<int> layer_sizes(int inputs, int outputs, const DqnConfig& cfg) {
  std::vector<int> sizes{inputs};
  for (int i = 0; i < cfg.hidden_layers; ++i) sizes.push_back(cfg.hidden_width);
  sizes.push_back(outputs);
  return sizes;
}

/// Fully connected network: tanh on hidden layers, linear output head.
class QNetwork {
 public:
  struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
  };

  QNetwork() = default;

  explicit QNetwork(std::vector<int> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.size() < 2) throw ShapeError("a network needs at least an input and an output layer");
    for (int s : sizes_)
      if (s < 1) throw ShapeError("layer sizes must be positive");
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
      weights_.push_back(Eigen::MatrixXd::Zero(sizes_[l], sizes_[l - 1]));
      biases_.push_back(Eigen::VectorXd::Zero(sizes_[l]));
    }
  }

  /// Uniform in +-sqrt(6 / (fan_in + fan_out)); biases zero.
  void initialize(Rng& rng) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const double limit = std::sqrt(6.0 / (weights_[l].rows() + weights_[l].cols()));
      for (Eigen::Index i = 0; i < weights_[l].rows(); ++i)
        for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) weights_[l](i, j) = rng.uniform(-limit, limit);
      biases_[l].setZero();
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int inputs() const { return sizes_.front(); }
  int outputs() const { return sizes_.back(); }
  std::size_t layer_count() const { return weights_.size(); }
  const Eigen::MatrixXd& weight(std::size_t l) const { return weights_.at(l); }
  const Eigen::VectorXd& bias(std::size_t l) const { return biases_.at(l); }
  Eigen::MatrixXd& weight(std::size_t l) { return weights_.at(l); }
  Eigen::VectorXd& bias(std::size_t l) { return biases_.at(l); }

  std::vector<double> forward(std::span<const double> state) const {
    if (state.size() != static_cast<std::size_t>(inputs()))
      throw ShapeError("state has " + std::to_string(state.size()) + " values, network expects " +
                       std::to_string(inputs()));
    Eigen::MatrixXd x = Eigen::Map<const Eigen::VectorXd>(state.data(), static_cast<Eigen::Index>(state.size()));
    Eigen::MatrixXd q = forward_batch(x);
    return {q.data(), q.data() + q.size()};
  }

  /// Columns of `x` are states.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Eigen::MatrixXd z = weights_[l] * a;
      z.colwise() += biases_[l];
      a = (l + 1 < weights_.size()) ? Eigen::MatrixXd(z.array().tanh()) : z;
    }
    return a;
  }

  /// Mean over the batch of (Q(s_b, a_b) - y_b)^2 and its gradient. Only
  /// the taken action's output contributes.
  std::pair<double, Gradients> loss_and_gradient(const Eigen::MatrixXd& x, const std::vector<int>& actions,
                                                 const std::vector<double>& targets) const {
    const auto batch = x.cols();
    if (x.rows() != inputs()) throw ShapeError("batch state size mismatch");
    if (static_cast<Eigen::Index>(actions.size()) != batch || static_cast<Eigen::Index>(targets.size()) != batch)
      throw ShapeError("batch actions/targets size mismatch");

    std::vector<Eigen::MatrixXd> acts{x};
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Eigen::MatrixXd z = weights_[l] * acts.back();
      z.colwise() += biases_[l];
      acts.push_back((l + 1 < weights_.size()) ? Eigen::MatrixXd(z.array().tanh()) : z);
    }
    const Eigen::MatrixXd& q = acts.back();
    Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    double loss = 0.0;
    for (Eigen::Index b = 0; b < batch; ++b) {
      const int a = actions[static_cast<std::size_t>(b)];
      if (a < 0 || a >= outputs()) throw ShapeError("action index out of range");
      const double err = q(a, b) - targets[static_cast<std::size_t>(b)];
      loss += err * err;
      delta(a, b) = 2.0 * err / static_cast<double>(batch);
    }
    loss /= static_cast<double>(batch);

    Gradients g;
    g.weights.resize(weights_.size());
    g.biases.resize(weights_.size());
    for (std::size_t l = weights_.size(); l-- > 0;) {
      g.weights[l] = delta * acts[l].transpose();
      g.biases[l] = delta.rowwise().sum();
      if (l > 0) {
        Eigen::MatrixXd back = weights_[l].transpose() * delta;
        delta = back.array() * (1.0 - acts[l].array().square());
      }
    }
    return {loss, std::move(g)};
  }

  void apply(const Gradients& g, double learning_rate) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      weights_[l] -= learning_rate * g.weights[l];
      biases_[l] -= learning_rate * g.biases[l];
    }
  }

  /// Parameters in checkpoint order: per layer, weights row-major then bias.
  std::vector<double> parameters() const {
    std::vector<double> p;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (Eigen::Index i = 0; i < weights_[l].rows(); ++i)
        for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) p.push_back(weights_[l](i, j));
      for (Eigen::Index i = 0; i < biases_[l].size(); ++i) p.push_back(biases_[l](i));
    }
    return p;
  }

  void set_parameters(std::span<const double> p) {
    if (p.size() != parameter_count()) throw ShapeError("parameter vector has the wrong length");
    std::size_t k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      for (Eigen::Index i = 0; i < weights_[l].rows(); ++i)
        for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) weights_[l](i, j) = p[k++];
      for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l](i) = p[k++];
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
  }

  bool all_finite() const {
    for (std::size_t l = 0; l < weights_.size(); ++l)
      if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
    return true;
  }

  bool operator==(const QNetwork& o) const {
    if (sizes_ != o.sizes_) return false;
    for (std::size_t l = 0; l < weights_.size(); ++l)
      if (weights_[l] != o.weights_[l] || biases_[l] != o.biases_[l]) return false;
    return true;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

/// One flag per action, nonzero = allowed. Empty allows every action.
using ActionMask = std::vector<std::uint8_t>;

inline bool allowed(const ActionMask& mask, std::size_t a) { return mask.empty() || (a < mask.size() && mask[a]); }

/// Mask allowing the first `valid` of `actions` actions.
inline ActionMask prefix_mask(std::size_t actions, std::size_t valid) {
  ActionMask m(actions, 0);
  for (std::size_t a = 0; a < std::min(actions, valid); ++a) m[a] = 1;
  return m;
}

struct Transition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
  bool terminal = false;
  ActionMask next_mask;  // actions allowed in next_state
};

class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw ConfigError("replay capacity must be positive");
  }

  void push(Transition t) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[head_] = std::move(t);
    }
    head_ = (head_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& operator[](std::size_t i) const { return items_.at(i); }

  /// Uniform sampling with replacement.
  std::vector<const Transition*> sample(std::size_t n, Rng& rng) const {
    if (items_.empty()) throw NotReadyError("cannot sample an empty replay memory");
    std::vector<const Transition*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(&items_[rng.index(items_.size())]);
    return out;
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> items_;
};

/// y = r for terminal samples, r + gamma * max_a Q_target(s', a) otherwise,
/// the max running over the actions allowed in s'.
inline std::vector<double> td_target(const std::vector<const Transition*>& batch, const QNetwork& target, double gamma) {
  if (batch.empty()) throw DomainError("td_target needs a nonempty batch");
  std::vector<double> y(batch.size());
  std::vector<std::size_t> live;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    y[b] = batch[b]->reward;
    if (!batch[b]->terminal) live.push_back(b);
  }
  if (live.empty() || gamma == 0.0) return y;
  Eigen::MatrixXd next(target.inputs(), static_cast<Eigen::Index>(live.size()));
  for (std::size_t i = 0; i < live.size(); ++i) {
    const auto& s = batch[live[i]]->next_state;
    if (s.size() != static_cast<std::size_t>(target.inputs())) throw ShapeError("next state size mismatch");
    next.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  }
  const Eigen::MatrixXd q = target.forward_batch(next);
  for (std::size_t i = 0; i < live.size(); ++i) {
    const ActionMask& mask = batch[live[i]]->next_mask;
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < q.rows(); ++a)
      if (allowed(mask, static_cast<std::size_t>(a))) best = std::max(best, q(a, static_cast<Eigen::Index>(i)));
    if (std::isfinite(best)) y[live[i]] += gamma * best;
  }
  return y;
}

/// Highest-valued allowed action, ties to the lowest index. Throws
/// DomainError when the mask allows nothing.
inline std::size_t argmax(std::span<const double> q, const ActionMask& mask = {}) {
  std::optional<std::size_t> best;
  for (std::size_t a = 0; a < q.size(); ++a)
    if (allowed(mask, a) && (!best || q[a] > q[*best])) best = a;
  if (!best) throw DomainError("no allowed action");
  return *best;
}

/// Epsilon-greedy over the allowed actions; epsilon = 0 is greedy with ties
/// resolved to the lowest index.
inline std::size_t select_action(const QNetwork& net, std::span<const double> state, double epsilon, Rng& rng,
                                 const ActionMask& mask = {}) {
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    std::vector<std::size_t> options;
    for (std::size_t a = 0; a < static_cast<std::size_t>(net.outputs()); ++a)
      if (allowed(mask, a)) options.push_back(a);
    if (options.empty()) throw DomainError("no allowed action");
    return options[rng.index(options.size())];
  }
  const auto q = net.forward(state);
  return argmax(q, mask);
}

/// One gradient step on a uniformly sampled batch. Copies eval -> target
/// every `target_sync_period` calls (counted by `learn_steps`).
inline double learn_step(QNetwork& eval, QNetwork& target, const ReplayMemory& memory, const DqnConfig& cfg, Rng& rng,
                         std::int64_t& learn_steps) {
  if (memory.size() < static_cast<std::size_t>(std::max(cfg.warmup, 1)))
    throw NotReadyError("replay memory holds " + std::to_string(memory.size()) + " of " + std::to_string(cfg.warmup) +
                        " warmup transitions");
  const auto batch = memory.sample(static_cast<std::size_t>(cfg.batch_size), rng);
  const auto y = td_target(batch, target, cfg.gamma);
  Eigen::MatrixXd x(eval.inputs(), static_cast<Eigen::Index>(batch.size()));
  std::vector<int> actions;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& s = batch[b]->state;
    if (s.size() != static_cast<std::size_t>(eval.inputs())) throw ShapeError("state size mismatch");
    x.col(static_cast<Eigen::Index>(b)) = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    actions.push_back(batch[b]->action);
  }
  auto [loss, grad] = eval.loss_and_gradient(x, actions, y);
  eval.apply(grad, cfg.learning_rate);
  ++learn_steps;
  if (learn_steps % cfg.target_sync_period == 0) target = eval;
  return loss;
}

// ---------------------------------------------------------------------------
// Checkpoints: little-endian header then parameters as float64.

struct CheckpointHeader {
  std::uint32_t version = 1;
  std::string agent_id;
  std::vector<int> sizes;
  std::uint64_t layout_hash = 0;
  std::string action_space;
  bool operator==(const CheckpointHeader&) const = default;
};

namespace detail {
inline constexpr char kCheckpointMagic[8] = {'S', 'F', 'C', 'Q', 'N', 'E', 'T', '\0'};

inline void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
inline std::uint64_t get_uint(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == EOF) throw CheckpointError("checkpoint is truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}
inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string get_string(std::istream& in) {
  const auto n = get_uint(in, 4);
  if (n > (1u << 20)) throw CheckpointError("checkpoint string is implausibly long");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw CheckpointError("checkpoint is truncated");
  return s;
}
}  // namespace detail

inline void write_checkpoint(const std::filesystem::path& file, const CheckpointHeader& header, const QNetwork& net) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint '" + file.string() + "'");
  out.write(detail::kCheckpointMagic, sizeof detail::kCheckpointMagic);
  detail::put_u32(out, header.version);
  detail::put_string(out, header.agent_id);
  detail::put_u32(out, static_cast<std::uint32_t>(header.sizes.size()));
  for (int s : header.sizes) detail::put_u32(out, static_cast<std::uint32_t>(s));
  detail::put_u64(out, header.layout_hash);
  detail::put_string(out, header.action_space);
  for (double p : net.parameters()) detail::put_u64(out, std::bit_cast<std::uint64_t>(p));
  if (!out) throw CheckpointError("failed writing checkpoint '" + file.string() + "'");
}

/// Loads weights into a network whose header must match `expected` exactly.
inline QNetwork read_checkpoint(const std::filesystem::path& file, const CheckpointHeader& expected) {
  if (!std::filesystem::exists(file)) throw CheckpointMissingError("checkpoint '" + file.string() + "' not found");
  std::ifstream in(file, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + file.string() + "'");
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + 8, detail::kCheckpointMagic))
    throw CheckpointError("'" + file.string() + "' is not a checkpoint");
  CheckpointHeader h;
  h.version = static_cast<std::uint32_t>(detail::get_uint(in, 4));
  h.agent_id = detail::get_string(in);
  const auto layers = detail::get_uint(in, 4);
  if (layers > 64) throw CheckpointError("checkpoint layer count is implausible");
  for (std::uint64_t i = 0; i < layers; ++i) h.sizes.push_back(static_cast<int>(detail::get_uint(in, 4)));
  h.layout_hash = detail::get_uint(in, 8);
  h.action_space = detail::get_string(in);
  auto mismatch = [&](const std::string& what) {
    return CheckpointError("checkpoint '" + file.string() + "' " + what + " does not match");
  };
  if (h.version != expected.version) throw mismatch("format version");
  if (h.agent_id != expected.agent_id) throw mismatch("agent id");
  if (h.sizes != expected.sizes) throw mismatch("layer shapes");
  if (h.layout_hash != expected.layout_hash) throw mismatch("encoding layout");
  if (h.action_space != expected.action_space) throw mismatch("action space");
  QNetwork net(h.sizes);
  std::vector<double> params(net.parameter_count());
  for (double& p : params) p = std::bit_cast<double>(detail::get_uint(in, 8));
  if (in.peek() != EOF) throw CheckpointError("checkpoint '" + file.string() + "' has trailing bytes");
  net.set_parameters(params);
  return net;
}

// ---------------------------------------------------------------------------

/// An RL agent owning its Eval-Net, Target-Net, replay memory and RNG.
class DqnAgent {
 public:
  DqnAgent(std::string id, std::string action_space, std::uint64_t layout_hash, int inputs, int actions,
           const DqnConfig& cfg)
      : cfg_(cfg),
        header_{1, std::move(id), layer_sizes(inputs, actions, cfg), layout_hash, std::move(action_space)},
        eval_(header_.sizes),
        memory_(static_cast<std::size_t>(cfg.replay_capacity)),
        rng_(0) {
    cfg_.validate();
    std::uint64_t h = cfg.seed;
    for (unsigned char c : header_.agent_id) h = mix_seed(h, c);
    rng_ = Rng(h);
    eval_.initialize(rng_);
    target_ = eval_;
  }

  const std::string& id() const { return header_.agent_id; }
  const CheckpointHeader& header() const { return header_; }
  const DqnConfig& config() const { return cfg_; }
  const QNetwork& eval_net() const { return eval_; }
  const QNetwork& target_net() const { return target_; }
  const ReplayMemory& memory() const { return memory_; }
  std::int64_t learn_steps() const { return learn_steps_; }
  std::int64_t transitions_seen() const { return transitions_; }

  std::size_t act(std::span<const double> state, double epsilon, const ActionMask& mask = {}) {
    return select_action(eval_, state, epsilon, rng_, mask);
  }

  /// Greedy action; does not touch the RNG.
  std::size_t greedy(std::span<const double> state, const ActionMask& mask = {}) const {
    return argmax(eval_.forward(state), mask);
  }

  /// Stores a transition (reward in unscaled profit units) and runs a learn
  /// step every `update_period` transitions once warmup is reached.
  std::optional<double> remember(Transition t) {
    t.reward /= cfg_.reward_scale;
    memory_.push(std::move(t));
    ++transitions_;
    if (memory_.size() < static_cast<std::size_t>(std::max(cfg_.warmup, 1))) return std::nullopt;
    if (transitions_ % cfg_.update_period != 0) return std::nullopt;
    return learn_step(eval_, target_, memory_, cfg_, rng_, learn_steps_);
  }

  void save(const std::filesystem::path& file) const { write_checkpoint(file, header_, eval_); }

  void load(const std::filesystem::path& file) {
    eval_ = read_checkpoint(file, header_);
    target_ = eval_;
  }

 private:
  DqnConfig cfg_;
  CheckpointHeader header_;
  QNetwork eval_;
  QNetwork target_;
  ReplayMemory memory_;
  Rng rng_;
  std::int64_t transitions_ = 0;
  std::int64_t learn_steps_ = 0;
};

}  // namespace sfc
