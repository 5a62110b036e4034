#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lanerl/observation.hpp"
#include "lanerl/rng.hpp"
#include "lanerl/tape.hpp"
#include "lanerl/tensor.hpp"

namespace lanerl::nn {

enum class InputKind { kGrid, kVector };
enum class Activation { kRelu, kTanh };

/// Architecture description shared by the actor and the critics: a
/// convolutional trunk of stride-2 stages with residual blocks, global
/// average pooling, and small fully-connected heads. Vector-input tasks use
/// `channels` as hidden widths of a plain MLP trunk instead.
struct NetSpec {
  InputKind input = InputKind::kGrid;
  int grid_h = 64;
  int grid_w = 64;
  int grid_classes = 3;
  int vec_dim = 0;
  std::vector<int> channels = {8, 16, 32};
  int blocks_per_stage = 1;
  std::vector<int> head_hidden = {32};
  int action_dim = 2;
  Activation activation = Activation::kRelu;
  double log_std_min = -20.0;
  double log_std_max = 2.0;

  std::string canonical() const;
  std::uint64_t digest() const;
  void validate() const;  // throws std::invalid_argument with the offending field
};

struct ParamSegment {
  std::string name;
  std::size_t offset = 0;
  std::vector<int> shape;
  std::size_t numel() const { return Tensor::numel_of(shape); }
};

/// Flat f64 parameter storage with a named segment index.
struct ParamVector {
  std::vector<ParamSegment> segments;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool finite() const;
  std::uint64_t value_digest() const;  // FNV-1a over the raw bytes
};

/// Segment layouts for the two network roles. The layout order is the
/// contract between the layout builder and the forward pass.
ParamVector actor_layout(const NetSpec& spec);
ParamVector critic_layout(const NetSpec& spec);

/// He-style initialization; output layers start near zero.
void init_params(ParamVector& params, Rng& rng);

struct ParamCensus {
  std::size_t total = 0;
  std::size_t fully_connected = 0;  // head and MLP-trunk parameters
};
ParamCensus census(const ParamVector& params);

/// Input batch in network form: one-hot grid plus speed column, or a plain
/// feature matrix for vector tasks.
struct ObsBatch {
  Tensor grid;   // (N, classes, H, W); empty for vector input
  Tensor speed;  // (N, 1); empty for vector input
  Tensor vec;    // (N, D); empty for grid input
  int n = 0;
};
ObsBatch make_obs_batch(const NetSpec& spec, std::span<const Observation> obs);

/// Parameters copied onto a tape, one leaf Var per segment.
struct BoundParams {
  std::vector<Var> vars;
  const ParamVector* source = nullptr;
};
BoundParams bind_params(Tape& t, const ParamVector& params, bool requires_grad);
/// Gathers d(loss)/d(segment) into a flat vector aligned with the layout.
std::vector<double> collect_grads(const Tape& t, const BoundParams& bound);

struct ActorVars {
  Var mean;     // (N, A)
  Var log_std;  // (N, A), clamped to [log_std_min, log_std_max]
};
ActorVars actor_forward(Tape& t, const NetSpec& spec, const BoundParams& bound,
                        const ObsBatch& obs);
/// Q value column (N, 1). `action` is an (N, A) tape var.
Var critic_forward(Tape& t, const NetSpec& spec, const BoundParams& bound,
                   const ObsBatch& obs, Var action);

/// Convenience single-observation evaluation (no gradients).
struct ActorEval {
  std::vector<double> mean;
  std::vector<double> log_std;
};
ActorEval eval_actor(const NetSpec& spec, const ParamVector& params, const Observation& obs);
double eval_critic(const NetSpec& spec, const ParamVector& params, const Observation& obs,
                   std::span<const double> action);

/// Tanh-squashed Gaussian sample with its log density (change of variables
/// included). Deterministic given the rng state.
struct SquashedSample {
  std::vector<double> action;
  double log_prob = 0.0;
};
SquashedSample sample_squashed(std::span<const double> mean, std::span<const double> log_std,
                               Rng& rng);
/// Log density terms for an already-drawn standard normal noise vector.
double squashed_log_prob_from_noise(std::span<const double> noise,
                                    std::span<const double> log_std,
                                    std::span<const double> pre_tanh);

}  // namespace lanerl::nn
