#include "lanerl/sac.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace lanerl::rl {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kLog2 = 0.69314718055994530941723212145818;

struct SplitObs {
  std::vector<Observation> s;
  std::vector<Observation> s2;
};

SplitObs split_obs(const std::vector<Transition>& batch) {
  SplitObs out;
  out.s.reserve(batch.size());
  out.s2.reserve(batch.size());
  for (const Transition& t : batch) {
    out.s.push_back(t.s);
    out.s2.push_back(t.s2);
  }
  return out;
}

nn::Tensor actions_tensor(const std::vector<Transition>& batch, int action_dim) {
  nn::Tensor a({static_cast<int>(batch.size()), action_dim});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (static_cast<int>(batch[i].action.size()) != action_dim) {
      throw std::invalid_argument("sac: transition action dimension mismatch");
    }
    for (int j = 0; j < action_dim; ++j) a[i * action_dim + j] = batch[i].action[j];
  }
  return a;
}

/// Squashed-Gaussian machinery on the tape. Returns the tanh actions and the
/// per-sample log densities; gradients flow through mean and log_std.
struct PolicySample {
  nn::Var action;   // (B, A)
  nn::Var log_pi;   // (B, 1)
};

PolicySample policy_sample(nn::Tape& t, const nn::ActorVars& head, const nn::Tensor& noise) {
  using namespace nn;
  Var eps = t.input(noise, false);
  Var sigma = exp_op(t, head.log_std);
  Var u = add(t, head.mean, mul(t, sigma, eps));
  Var act = tanh_op(t, u);

  // log pi = sum_d [ -eps^2/2 - log sigma - log(2 pi)/2 - log(1 - tanh(u)^2) ]
  // with log(1 - tanh(u)^2) = 2 (log 2 - u - softplus(-2u)).
  const Tensor& nval = noise;
  Tensor consts(nval.shape());
  for (std::size_t i = 0; i < consts.numel(); ++i) {
    consts[i] = -0.5 * nval[i] * nval[i] - 0.5 * kLog2Pi - 2.0 * kLog2;
  }
  Var fixed = t.input(std::move(consts), false);
  Var tanh_corr = add(t, mul_scalar(t, u, 2.0),
                      mul_scalar(t, softplus(t, mul_scalar(t, u, -2.0)), 2.0));
  Var elem = add(t, add(t, neg(t, head.log_std), fixed), tanh_corr);
  return PolicySample{act, sum_rows(t, elem)};
}

}  // namespace

void SACConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("SACConfig: gamma outside (0, 1)");
  if (!(target_tau > 0.0 && target_tau <= 1.0)) {
    throw std::invalid_argument("SACConfig: target_tau outside (0, 1]");
  }
  if (batch <= 0) throw std::invalid_argument("SACConfig: batch must be positive");
  if (static_cast<std::size_t>(batch) > buffer_capacity) {
    throw std::invalid_argument("SACConfig: batch exceeds buffer capacity");
  }
  if (lr <= 0.0) throw std::invalid_argument("SACConfig: lr must be positive");
  if (utd < 0.0) throw std::invalid_argument("SACConfig: utd must be non-negative");
  if (init_temperature <= 0.0) {
    throw std::invalid_argument("SACConfig: init_temperature must be positive");
  }
}

void AdamState::step(std::vector<double>& params, const std::vector<double>& grad, double lr) {
  if (params.size() != grad.size() || params.size() != m.size()) {
    throw std::invalid_argument("adam: size mismatch");
  }
  ++t;
  double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * grad[i];
    v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * grad[i] * grad[i];
    params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kAdamEps);
  }
}

double LearnerState::temperature() const { return std::exp(log_temperature); }

bool LearnerState::finite() const {
  return actor.finite() && critic1.finite() && critic2.finite() && target1.finite() &&
         target2.finite() && std::isfinite(log_temperature);
}

std::uint64_t LearnerState::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mixin = [&h](const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  for (const nn::ParamVector* pv : {&actor, &critic1, &critic2, &target1, &target2}) {
    mixin(pv->values.data(), pv->values.size() * sizeof(double));
  }
  mixin(&log_temperature, sizeof(log_temperature));
  return h;
}

LearnerState make_learner(const nn::NetSpec& spec, const SACConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  spec.validate();
  LearnerState learner;
  learner.spec = spec;
  learner.actor = nn::actor_layout(spec);
  learner.critic1 = nn::critic_layout(spec);
  learner.critic2 = nn::critic_layout(spec);
  Rng actor_rng(derive_seed(seed, "init-actor"));
  Rng c1_rng(derive_seed(seed, "init-critic1"));
  Rng c2_rng(derive_seed(seed, "init-critic2"));
  nn::init_params(learner.actor, actor_rng);
  nn::init_params(learner.critic1, c1_rng);
  nn::init_params(learner.critic2, c2_rng);
  learner.target1 = learner.critic1;
  learner.target2 = learner.critic2;
  learner.log_temperature = std::log(cfg.init_temperature);
  learner.actor_opt.init(learner.actor.size());
  learner.critic1_opt.init(learner.critic1.size());
  learner.critic2_opt.init(learner.critic2.size());
  return learner;
}

BatchDraw draw_batch(const ReplayBuffer& buffer, std::size_t n, int action_dim, Rng& rng) {
  BatchDraw draw;
  draw.batch = buffer.gather(buffer.sample_indices(n, rng));
  draw.noise_pi = nn::Tensor({static_cast<int>(n), action_dim});
  draw.noise_pi_next = nn::Tensor({static_cast<int>(n), action_dim});
  for (std::size_t i = 0; i < draw.noise_pi.numel(); ++i) draw.noise_pi[i] = rng.gaussian();
  for (std::size_t i = 0; i < draw.noise_pi_next.numel(); ++i) {
    draw.noise_pi_next[i] = rng.gaussian();
  }
  return draw;
}

BatchDraw concat_draws(const BatchDraw& a, const BatchDraw& b) {
  BatchDraw out;
  out.batch = a.batch;
  out.batch.insert(out.batch.end(), b.batch.begin(), b.batch.end());
  int dim = a.noise_pi.dim(1);
  int n = static_cast<int>(out.batch.size());
  out.noise_pi = nn::Tensor({n, dim});
  out.noise_pi_next = nn::Tensor({n, dim});
  std::memcpy(out.noise_pi.data(), a.noise_pi.data(), a.noise_pi.numel() * sizeof(double));
  std::memcpy(out.noise_pi.data() + a.noise_pi.numel(), b.noise_pi.data(),
              b.noise_pi.numel() * sizeof(double));
  std::memcpy(out.noise_pi_next.data(), a.noise_pi_next.data(),
              a.noise_pi_next.numel() * sizeof(double));
  std::memcpy(out.noise_pi_next.data() + a.noise_pi_next.numel(), b.noise_pi_next.data(),
              b.noise_pi_next.numel() * sizeof(double));
  return out;
}

std::vector<double> critic_targets(const LearnerState& learner, const BatchDraw& draw,
                                   const SACConfig& cfg) {
  using namespace nn;
  if (draw.batch.empty()) throw std::invalid_argument("critic_targets: empty batch");
  SplitObs obs = split_obs(draw.batch);
  ObsBatch next = make_obs_batch(learner.spec, obs.s2);

  Tape t;  // evaluation only; nothing requires gradients
  BoundParams actor_b = bind_params(t, learner.actor, false);
  ActorVars head = actor_forward(t, learner.spec, actor_b, next);
  PolicySample pi = policy_sample(t, head, draw.noise_pi_next);
  BoundParams t1_b = bind_params(t, learner.target1, false);
  BoundParams t2_b = bind_params(t, learner.target2, false);
  Var q1 = critic_forward(t, learner.spec, t1_b, next, pi.action);
  Var q2 = critic_forward(t, learner.spec, t2_b, next, pi.action);
  Var qmin = min_elem(t, q1, q2);

  const Tensor& qv = t.value(qmin);
  const Tensor& lp = t.value(pi.log_pi);
  double lambda = learner.temperature();
  std::vector<double> targets(draw.batch.size());
  for (std::size_t i = 0; i < draw.batch.size(); ++i) {
    const Transition& tr = draw.batch[i];
    double cont = tr.done ? 0.0 : cfg.gamma * (qv[i] - lambda * lp[i]);
    targets[i] = tr.reward + cont;
  }
  return targets;
}

Gradients compute_gradients(const LearnerState& learner, const BatchDraw& draw,
                            const SACConfig& cfg) {
  using namespace nn;
  const int n = static_cast<int>(draw.batch.size());
  if (n == 0) throw std::invalid_argument("compute_gradients: empty batch");
  const int adim = learner.spec.action_dim;
  Gradients out;

  std::vector<double> targets = critic_targets(learner, draw, cfg);
  SplitObs obs = split_obs(draw.batch);
  ObsBatch cur = make_obs_batch(learner.spec, obs.s);

  {  // critic update: residual against the fixed targets
    Tape t;
    BoundParams c1_b = bind_params(t, learner.critic1, true);
    BoundParams c2_b = bind_params(t, learner.critic2, true);
    Var acts = t.input(actions_tensor(draw.batch, adim), false);
    Var q1 = critic_forward(t, learner.spec, c1_b, cur, acts);
    Var q2 = critic_forward(t, learner.spec, c2_b, cur, acts);
    Tensor y({n, 1});
    for (int i = 0; i < n; ++i) y[i] = targets[i];
    Var yv = t.input(std::move(y), false);
    Var loss = add(t, mean_all(t, square(t, sub(t, q1, yv))),
                   mean_all(t, square(t, sub(t, q2, yv))));
    t.backward(loss);
    out.critic1 = collect_grads(t, c1_b);
    out.critic2 = collect_grads(t, c2_b);
    out.stats.critic_loss = t.value(loss)[0];
  }

  {  // actor update: fresh reparameterized actions through frozen critics
    Tape t;
    BoundParams actor_b = bind_params(t, learner.actor, true);
    ActorVars head = actor_forward(t, learner.spec, actor_b, cur);
    PolicySample pi = policy_sample(t, head, draw.noise_pi);
    BoundParams c1_b = bind_params(t, learner.critic1, false);
    BoundParams c2_b = bind_params(t, learner.critic2, false);
    Var q1 = critic_forward(t, learner.spec, c1_b, cur, pi.action);
    Var q2 = critic_forward(t, learner.spec, c2_b, cur, pi.action);
    Var qmin = min_elem(t, q1, q2);
    double lambda = learner.temperature();
    Var loss = mean_all(t, sub(t, mul_scalar(t, pi.log_pi, lambda), qmin));
    t.backward(loss);
    out.actor = collect_grads(t, actor_b);
    out.stats.actor_loss = t.value(loss)[0];

    const Tensor& lp = t.value(pi.log_pi);
    const Tensor& qv = t.value(qmin);
    double lp_mean = 0.0, q_mean = 0.0;
    for (int i = 0; i < n; ++i) {
      lp_mean += lp[i];
      q_mean += qv[i];
    }
    out.stats.mean_log_pi = lp_mean / n;
    out.stats.mean_q = q_mean / n;
  }

  // Temperature: drive E[-log pi] toward the target entropy.
  out.log_temperature = -out.stats.mean_log_pi - cfg.target_entropy;
  return out;
}

void apply_gradients(LearnerState& learner, const Gradients& grads, const SACConfig& cfg) {
  learner.critic1_opt.step(learner.critic1.values, grads.critic1, cfg.lr);
  learner.critic2_opt.step(learner.critic2.values, grads.critic2, cfg.lr);
  learner.actor_opt.step(learner.actor.values, grads.actor, cfg.lr);
  learner.log_temperature -= cfg.effective_temperature_lr() * grads.log_temperature;
  soft_update(learner, cfg.target_tau);
  ++learner.updates;
  ++learner.param_version;
  if (!learner.finite()) {
    throw std::runtime_error("sac: parameters turned non-finite after an update");
  }
}

void soft_update(LearnerState& learner, double tau) {
  auto blend = [tau](nn::ParamVector& target, const nn::ParamVector& live) {
    for (std::size_t i = 0; i < target.values.size(); ++i) {
      target.values[i] = (1.0 - tau) * target.values[i] + tau * live.values[i];
    }
  };
  blend(learner.target1, learner.critic1);
  blend(learner.target2, learner.critic2);
}

std::optional<UpdateStats> train_step(LearnerState& learner, const ReplayBuffer& buffer,
                                      Rng& rng, const SACConfig& cfg) {
  if (buffer.size() < static_cast<std::size_t>(cfg.batch)) return std::nullopt;
  BatchDraw draw = draw_batch(buffer, cfg.batch, learner.spec.action_dim, rng);
  Gradients grads = compute_gradients(learner, draw, cfg);
  apply_gradients(learner, grads, cfg);
  return grads.stats;
}

std::vector<double> select_action(const LearnerState& learner, const Observation& obs,
                                  ActionMode mode, Rng* rng) {
  nn::ActorEval eval = nn::eval_actor(learner.spec, learner.actor, obs);
  if (mode == ActionMode::kDeterministic) {
    std::vector<double> a(eval.mean.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::tanh(eval.mean[i]);
    return a;
  }
  if (!rng) throw std::invalid_argument("select_action: stochastic mode needs an rng");
  return nn::sample_squashed(eval.mean, eval.log_std, *rng).action;
}

}  // namespace lanerl::rl
