#include "lanerl/net.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace lanerl::nn {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Var apply_act(Tape& t, Activation a, Var x) {
  return a == Activation::kRelu ? relu(t, x) : tanh_op(t, x);
}

void push_segment(ParamVector& pv, std::string name, std::vector<int> shape) {
  ParamSegment seg;
  seg.name = std::move(name);
  seg.shape = std::move(shape);
  seg.offset = pv.values.size();
  pv.values.resize(pv.values.size() + seg.numel(), 0.0);
  pv.segments.push_back(std::move(seg));
}

/// Trunk and head segments in forward-pass order. `head_extra` is the width
/// of the feature columns appended after the trunk (speed, action).
void build_layout(ParamVector& pv, const NetSpec& spec, int head_extra, int out_dim) {
  int feat;
  if (spec.input == InputKind::kGrid) {
    int in_ch = spec.grid_classes;
    for (std::size_t i = 0; i < spec.channels.size(); ++i) {
      int ch = spec.channels[i];
      std::string stage = "trunk.stage" + std::to_string(i);
      push_segment(pv, stage + ".conv.w", {ch, in_ch, 3, 3});
      push_segment(pv, stage + ".conv.b", {ch});
      for (int j = 0; j < spec.blocks_per_stage; ++j) {
        std::string block = stage + ".block" + std::to_string(j);
        push_segment(pv, block + ".c1.w", {ch, ch, 3, 3});
        push_segment(pv, block + ".c1.b", {ch});
        push_segment(pv, block + ".c2.w", {ch, ch, 3, 3});
        push_segment(pv, block + ".c2.b", {ch});
      }
      in_ch = ch;
    }
    feat = in_ch;
  } else {
    int in = spec.vec_dim;
    for (std::size_t i = 0; i < spec.channels.size(); ++i) {
      int h = spec.channels[i];
      std::string name = "trunk.fc" + std::to_string(i);
      push_segment(pv, name + ".w", {h, in});
      push_segment(pv, name + ".b", {h});
      in = h;
    }
    feat = in;
  }
  int in = feat + head_extra;
  for (std::size_t i = 0; i < spec.head_hidden.size(); ++i) {
    int h = spec.head_hidden[i];
    std::string name = "head.fc" + std::to_string(i);
    push_segment(pv, name + ".w", {h, in});
    push_segment(pv, name + ".b", {h});
    in = h;
  }
  push_segment(pv, "head.out.w", {out_dim, in});
  push_segment(pv, "head.out.b", {out_dim});
}

int head_extra_actor(const NetSpec& spec) {
  return spec.input == InputKind::kGrid ? 1 : 0;  // speed column
}
int head_extra_critic(const NetSpec& spec) {
  return head_extra_actor(spec) + spec.action_dim;
}

struct Cursor {
  const BoundParams& bound;
  std::size_t i = 0;
  Var next() { return bound.vars[i++]; }
};

/// Shared trunk: stride-2 conv stages with residual blocks, then global
/// average pooling; or an MLP for vector input. Returns (N, feat).
Var trunk_forward(Tape& t, const NetSpec& spec, Cursor& cur, const ObsBatch& obs) {
  if (spec.input == InputKind::kGrid) {
    Var x = t.input(obs.grid, false);
    for (std::size_t i = 0; i < spec.channels.size(); ++i) {
      Var w = cur.next(), b = cur.next();
      x = apply_act(t, spec.activation, conv2d(t, x, w, b, /*stride=*/2, /*pad=*/1));
      for (int j = 0; j < spec.blocks_per_stage; ++j) {
        Var w1 = cur.next(), b1 = cur.next(), w2 = cur.next(), b2 = cur.next();
        Var y = apply_act(t, spec.activation, conv2d(t, x, w1, b1, 1, 1));
        y = conv2d(t, y, w2, b2, 1, 1);
        x = apply_act(t, spec.activation, add(t, x, y));
      }
    }
    return global_avg_pool(t, x);
  }
  Var h = t.input(obs.vec, false);
  for (std::size_t i = 0; i < spec.channels.size(); ++i) {
    Var w = cur.next(), b = cur.next();
    h = apply_act(t, spec.activation, fc(t, h, w, b));
  }
  return h;
}

Var head_forward(Tape& t, const NetSpec& spec, Cursor& cur, Var h) {
  for (std::size_t i = 0; i < spec.head_hidden.size(); ++i) {
    Var w = cur.next(), b = cur.next();
    h = apply_act(t, spec.activation, fc(t, h, w, b));
  }
  Var w = cur.next(), b = cur.next();
  return fc(t, h, w, b);
}

void check_obs(const NetSpec& spec, const ObsBatch& obs) {
  if (spec.input == InputKind::kGrid) {
    if (obs.grid.rank() != 4 || obs.grid.dim(1) != spec.grid_classes ||
        obs.grid.dim(2) != spec.grid_h || obs.grid.dim(3) != spec.grid_w) {
      throw std::invalid_argument("net: observation grid does not match NetSpec");
    }
  } else if (obs.vec.rank() != 2 || obs.vec.dim(1) != spec.vec_dim) {
    throw std::invalid_argument("net: observation vector does not match NetSpec");
  }
}

}  // namespace

std::string NetSpec::canonical() const {
  std::ostringstream os;
  if (input == InputKind::kGrid) {
    os << "grid:" << grid_classes << "x" << grid_h << "x" << grid_w;
  } else {
    os << "vec:" << vec_dim;
  }
  os << "|ch:";
  for (std::size_t i = 0; i < channels.size(); ++i) os << (i ? "," : "") << channels[i];
  os << "|blk:" << blocks_per_stage << "|head:";
  for (std::size_t i = 0; i < head_hidden.size(); ++i) os << (i ? "," : "") << head_hidden[i];
  os << "|a:" << action_dim << "|" << (activation == Activation::kRelu ? "relu" : "tanh");
  os << "|ls:" << log_std_min << "," << log_std_max;
  return os.str();
}

std::uint64_t NetSpec::digest() const { return hash_tag(canonical()); }

void NetSpec::validate() const {
  if (input == InputKind::kGrid) {
    if (grid_h <= 0 || grid_w <= 0 || grid_classes <= 0) {
      throw std::invalid_argument("NetSpec: grid dimensions must be positive");
    }
    if (channels.empty()) throw std::invalid_argument("NetSpec: grid trunk needs >= 1 stage");
    int min_side = std::min(grid_h, grid_w);
    if (min_side >> channels.size() < 1) {
      throw std::invalid_argument("NetSpec: too many stride-2 stages for the grid size");
    }
  } else if (vec_dim <= 0) {
    throw std::invalid_argument("NetSpec: vector input needs vec_dim > 0");
  }
  for (int c : channels) {
    if (c <= 0) throw std::invalid_argument("NetSpec: channel widths must be positive");
  }
  for (int h : head_hidden) {
    if (h <= 0) throw std::invalid_argument("NetSpec: head widths must be positive");
  }
  if (blocks_per_stage < 0) throw std::invalid_argument("NetSpec: blocks_per_stage < 0");
  if (action_dim <= 0) throw std::invalid_argument("NetSpec: action_dim must be positive");
  if (!(log_std_min < log_std_max)) {
    throw std::invalid_argument("NetSpec: log_std clamp range is empty");
  }
}

bool ParamVector::finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::uint64_t ParamVector::value_digest() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const unsigned char* p = reinterpret_cast<const unsigned char*>(values.data());
  std::size_t n = values.size() * sizeof(double);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

ParamVector actor_layout(const NetSpec& spec) {
  spec.validate();
  ParamVector pv;
  build_layout(pv, spec, head_extra_actor(spec), 2 * spec.action_dim);
  return pv;
}

ParamVector critic_layout(const NetSpec& spec) {
  spec.validate();
  ParamVector pv;
  build_layout(pv, spec, head_extra_critic(spec), 1);
  return pv;
}

void init_params(ParamVector& params, Rng& rng) {
  for (const ParamSegment& seg : params.segments) {
    double* p = params.values.data() + seg.offset;
    bool is_bias = seg.shape.size() == 1;
    if (seg.name == "head.out.w" || seg.name == "head.out.b") {
      for (std::size_t i = 0; i < seg.numel(); ++i) p[i] = rng.uniform(-3e-3, 3e-3);
    } else if (is_bias) {
      for (std::size_t i = 0; i < seg.numel(); ++i) p[i] = 0.0;
    } else {
      std::size_t fan_in = 1;
      for (std::size_t d = 1; d < seg.shape.size(); ++d) fan_in *= seg.shape[d];
      double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (std::size_t i = 0; i < seg.numel(); ++i) p[i] = rng.gaussian(0.0, stddev);
    }
  }
}

ParamCensus census(const ParamVector& params) {
  ParamCensus c;
  for (const ParamSegment& seg : params.segments) {
    c.total += seg.numel();
    bool is_conv = seg.shape.size() == 4;
    if (!is_conv) c.fully_connected += seg.numel();
  }
  return c;
}

ObsBatch make_obs_batch(const NetSpec& spec, std::span<const Observation> obs) {
  ObsBatch batch;
  batch.n = static_cast<int>(obs.size());
  if (spec.input == InputKind::kGrid) {
    int h = spec.grid_h, w = spec.grid_w, c = spec.grid_classes;
    batch.grid = Tensor({batch.n, c, h, w});
    batch.speed = Tensor({batch.n, 1});
    std::size_t im = static_cast<std::size_t>(h) * w;
    for (int i = 0; i < batch.n; ++i) {
      const Observation& ob = obs[i];
      if (ob.grid.h != h || ob.grid.w != w) {
        throw std::invalid_argument("net: observation grid does not match NetSpec");
      }
      double* base = batch.grid.data() + static_cast<std::size_t>(i) * c * im;
      for (std::size_t k = 0; k < im; ++k) {
        std::uint8_t cls = ob.grid.cells[k];
        if (cls >= c) throw std::invalid_argument("net: semantic class out of range");
        base[cls * im + k] = 1.0;
      }
      batch.speed[i] = ob.speed;
    }
  } else {
    batch.vec = Tensor({batch.n, spec.vec_dim});
    for (int i = 0; i < batch.n; ++i) {
      const Observation& ob = obs[i];
      if (static_cast<int>(ob.vec.size()) != spec.vec_dim) {
        throw std::invalid_argument("net: observation vector does not match NetSpec");
      }
      for (int j = 0; j < spec.vec_dim; ++j) batch.vec[i * spec.vec_dim + j] = ob.vec[j];
    }
  }
  return batch;
}

BoundParams bind_params(Tape& t, const ParamVector& params, bool requires_grad) {
  BoundParams bound;
  bound.source = &params;
  bound.vars.reserve(params.segments.size());
  for (const ParamSegment& seg : params.segments) {
    Tensor value(seg.shape);
    std::memcpy(value.data(), params.values.data() + seg.offset, seg.numel() * sizeof(double));
    bound.vars.push_back(t.input(std::move(value), requires_grad));
  }
  return bound;
}

std::vector<double> collect_grads(const Tape& t, const BoundParams& bound) {
  const ParamVector& pv = *bound.source;
  std::vector<double> out(pv.size(), 0.0);
  for (std::size_t s = 0; s < pv.segments.size(); ++s) {
    const ParamSegment& seg = pv.segments[s];
    const Tensor& g = t.grad(bound.vars[s]);
    std::memcpy(out.data() + seg.offset, g.data(), seg.numel() * sizeof(double));
  }
  return out;
}

ActorVars actor_forward(Tape& t, const NetSpec& spec, const BoundParams& bound,
                        const ObsBatch& obs) {
  check_obs(spec, obs);
  Cursor cur{bound};
  Var feat = trunk_forward(t, spec, cur, obs);
  Var h = feat;
  if (spec.input == InputKind::kGrid) {
    Var speed = t.input(obs.speed, false);
    h = concat_cols(t, {feat, speed});
  }
  Var out = head_forward(t, spec, cur, h);
  int a = spec.action_dim;
  ActorVars v;
  v.mean = slice_cols(t, out, 0, a);
  v.log_std = clamp(t, slice_cols(t, out, a, 2 * a), spec.log_std_min, spec.log_std_max);
  return v;
}

Var critic_forward(Tape& t, const NetSpec& spec, const BoundParams& bound,
                   const ObsBatch& obs, Var action) {
  check_obs(spec, obs);
  if (t.value(action).rank() != 2 || t.value(action).dim(1) != spec.action_dim) {
    throw std::invalid_argument("net: action shape does not match NetSpec");
  }
  Cursor cur{bound};
  Var feat = trunk_forward(t, spec, cur, obs);
  std::vector<Var> parts{feat};
  if (spec.input == InputKind::kGrid) parts.push_back(t.input(obs.speed, false));
  parts.push_back(action);
  Var h = concat_cols(t, parts);
  return head_forward(t, spec, cur, h);
}

ActorEval eval_actor(const NetSpec& spec, const ParamVector& params, const Observation& obs) {
  Tape t;
  ObsBatch batch = make_obs_batch(spec, std::span<const Observation>(&obs, 1));
  BoundParams bound = bind_params(t, params, false);
  ActorVars vars = actor_forward(t, spec, bound, batch);
  const Tensor& mean = t.value(vars.mean);
  const Tensor& log_std = t.value(vars.log_std);
  ActorEval out;
  out.mean.assign(mean.data(), mean.data() + spec.action_dim);
  out.log_std.assign(log_std.data(), log_std.data() + spec.action_dim);
  return out;
}

double eval_critic(const NetSpec& spec, const ParamVector& params, const Observation& obs,
                   std::span<const double> action) {
  Tape t;
  ObsBatch batch = make_obs_batch(spec, std::span<const Observation>(&obs, 1));
  BoundParams bound = bind_params(t, params, false);
  Tensor a({1, spec.action_dim});
  for (int i = 0; i < spec.action_dim; ++i) a[i] = action[i];
  Var q = critic_forward(t, spec, bound, batch, t.input(std::move(a), false));
  return t.value(q)[0];
}

namespace {

double softplus_stable(double x) {
  return x > 30.0 ? x : std::log1p(std::exp(std::min(x, 30.0)));
}

/// log(1 - tanh(u)^2) without cancellation.
double log1m_tanh2(double u) {
  return 2.0 * (std::log(2.0) - u - softplus_stable(-2.0 * u));
}

}  // namespace

SquashedSample sample_squashed(std::span<const double> mean, std::span<const double> log_std,
                               Rng& rng) {
  SquashedSample s;
  s.action.resize(mean.size());
  s.log_prob = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    double eps = rng.gaussian();
    double sigma = std::exp(log_std[i]);
    double u = mean[i] + sigma * eps;
    s.action[i] = std::tanh(u);
    s.log_prob += -0.5 * eps * eps - log_std[i] - 0.5 * kLog2Pi - log1m_tanh2(u);
  }
  return s;
}

double squashed_log_prob_from_noise(std::span<const double> noise,
                                    std::span<const double> log_std,
                                    std::span<const double> pre_tanh) {
  double lp = 0.0;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    lp += -0.5 * noise[i] * noise[i] - log_std[i] - 0.5 * kLog2Pi - log1m_tanh2(pre_tanh[i]);
  }
  return lp;
}

}  // namespace lanerl::nn
