#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lanerl/net.hpp"
#include "lanerl/replay.hpp"
#include "lanerl/rng.hpp"

namespace lanerl::rl {

/// Training hyperparameters. Defaults are the shipped configuration.
struct SACConfig {
  double gamma = 0.99;
  double lr = 3e-4;
  int batch = 256;
  double target_tau = 0.02;        // soft target smoothing factor
  double target_entropy = -2.0;
  double utd = 0.5;                // gradient updates per environment step
  double init_temperature = 0.2;
  std::size_t buffer_capacity = 1'000'000;
  int warmup_steps = 2000;         // uniform-random action steps before updates
  double temperature_lr = -1.0;    // < 0: use lr; 0: temperature frozen

  double effective_temperature_lr() const { return temperature_lr < 0.0 ? lr : temperature_lr; }
  void validate() const;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;

  void init(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
    t = 0;
  }
  /// One bias-corrected step: params -= lr * m_hat / (sqrt(v_hat) + eps).
  void step(std::vector<double>& params, const std::vector<double>& grad, double lr);
};

/// Actor, twin critics, their targets, temperature and optimizer moments.
struct LearnerState {
  nn::NetSpec spec;
  nn::ParamVector actor;
  nn::ParamVector critic1;
  nn::ParamVector critic2;
  nn::ParamVector target1;
  nn::ParamVector target2;
  double log_temperature = 0.0;
  AdamState actor_opt;
  AdamState critic1_opt;
  AdamState critic2_opt;
  std::int64_t updates = 0;
  std::uint64_t param_version = 0;

  double temperature() const;
  bool finite() const;
  std::uint64_t digest() const;  // over every parameter vector and the temperature
};

/// Fresh learner with seeded initialization; targets start equal to critics.
LearnerState make_learner(const nn::NetSpec& spec, const SACConfig& cfg, std::uint64_t seed);

/// A sampled batch plus the reparameterization noise consumed by the update.
/// Keeping the noise explicit makes updates pure functions of (learner, draw),
/// which the distributed equivalence tests rely on.
struct BatchDraw {
  std::vector<Transition> batch;
  nn::Tensor noise_pi;       // (B, A) for the actor objective on s
  nn::Tensor noise_pi_next;  // (B, A) for fresh next actions in the targets
};
BatchDraw draw_batch(const ReplayBuffer& buffer, std::size_t n, int action_dim, Rng& rng);
/// Concatenation in argument order (oracle helper for data-parallel tests).
BatchDraw concat_draws(const BatchDraw& a, const BatchDraw& b);

/// Soft Bellman backup targets, one per sample:
///   r + gamma * (1 - done) * (min_i Q_target_i(s', a') - temperature * log pi(a'|s')).
/// Next actions a' are sampled fresh from the current policy; no gradient
/// flows through any of it.
std::vector<double> critic_targets(const LearnerState& learner, const BatchDraw& draw,
                                   const SACConfig& cfg);

struct UpdateStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  double mean_log_pi = 0.0;
  double mean_q = 0.0;
};

struct Gradients {
  std::vector<double> actor;
  std::vector<double> critic1;
  std::vector<double> critic2;
  double log_temperature = 0.0;  // d(objective)/d(log temperature)
  UpdateStats stats;
};

/// Critic, actor and temperature gradients for one draw. Critic loss is the
/// mean squared residual summed over both critics; the actor objective is
/// mean(temperature * log pi - min_i Q_i) with reparameterized actions; the
/// temperature gradient is mean(-log pi - target_entropy).
Gradients compute_gradients(const LearnerState& learner, const BatchDraw& draw,
                            const SACConfig& cfg);

/// Adam steps on actor and critics, a plain gradient step on the log
/// temperature, then the soft target update. Throws if any parameter turns
/// non-finite.
void apply_gradients(LearnerState& learner, const Gradients& grads, const SACConfig& cfg);

/// target <- (1 - tau) * target + tau * live, elementwise.
void soft_update(LearnerState& learner, double tau);

/// draw + compute + apply. Returns the stats, or nullopt (no-op) when the
/// buffer holds fewer than `cfg.batch` transitions.
std::optional<UpdateStats> train_step(LearnerState& learner, const ReplayBuffer& buffer,
                                      Rng& rng, const SACConfig& cfg);

enum class ActionMode { kStochastic, kDeterministic };
/// Policy evaluation; rng is required for stochastic mode.
std::vector<double> select_action(const LearnerState& learner, const Observation& obs,
                                  ActionMode mode, Rng* rng);

/// Update-to-data pacing: fractional updates accumulate per environment step.
class UpdateScheduler {
 public:
  explicit UpdateScheduler(double utd) : utd_(utd) {}
  /// Number of updates due after one more environment step.
  int on_env_step() {
    due_ += utd_;
    int n = static_cast<int>(due_);
    due_ -= n;
    return n;
  }

 private:
  double utd_;
  double due_ = 0.0;
};

}  // namespace lanerl::rl
