#pragma once

#include <cstdint>
#include <vector>

#include "bitfloat/bitfloat.hpp"
#include "blueprints/segment.hpp"

// Reference network: the same binarized model the net computes, expressed as
// plain arithmetic over integers and weight bit patterns. PnExact mode drives
// weight updates through the shared bit-level pipeline so a lockstep run can
// demand bit equality; NativeFloat mode uses ordinary float subtraction with
// round-to-nearest for divergence studies.

namespace refbnn {

enum class Mode { PnExact, NativeFloat };

struct BnnState {
  std::vector<bitfloat::Fp32Bits> real_weights;  // F*H input-hidden, then H
  std::vector<int> binary_weights;               // sign per weight, +/-1
  int rate_tenths = 6;                           // eta numerator over 10

  static BnnState make(const std::vector<bitfloat::Fp32Bits>& weights, int rate_tenths);
};

// sign with sign(+-0) = +1, matching the binarization rule
int binarize(bitfloat::Fp32Bits w);

// 1 iff |value| <= 1 (exponent below 127, or 127 with a zero mantissa)
int ste_indicator(bitfloat::Fp32Bits w);

// Everything one cycle computes, in the value domains the net encodes.
// Weight-indexed vectors follow weight_name() order. J is recorded as signed
// tenths; the register snapshots are the pre- and post-update bit patterns.
struct StepMetrics {
  std::uint32_t epoch = 0;
  std::uint32_t vector_index = 0;
  std::vector<int> features;
  int y_true = 0;
  std::vector<int> pre_activations;   // s per hidden neuron
  std::vector<int> activations;       // x per hidden neuron
  std::vector<int> neuron_outputs;    // o per hidden neuron
  int output_sum = 0;                 // z
  int prediction = 0;
  int loss = 0;
  int dldz = 0;
  std::vector<int> binary_weights;    // W_b in effect this cycle
  std::vector<int> binary_grad;
  std::vector<int> ste;
  std::vector<int> real_grad;
  std::vector<int> j_tenths;
  std::vector<bitfloat::Fp32Bits> initial_bits;
  std::vector<bitfloat::Fp32Bits> updated_bits;

  bool operator==(const StepMetrics&) const = default;
};

struct Forward {
  std::vector<int> s, x, o;
  int z = 0;
  int prediction = 0;
};

Forward forward(const BnnState& state, const blueprints::NetworkSpec& spec,
                const std::vector<int>& features);

// hinge loss L = max(0, 1 - y*z) and its subgradient in z
struct LossPair {
  int loss = 0;
  int dldz = 0;
};
LossPair loss(int y_true, int z);

struct Gradients {
  std::vector<int> binary;  // dL/dW_b
  std::vector<int> ste;
  std::vector<int> real;    // dL/dW_r
};
Gradients backward(const BnnState& state, const blueprints::NetworkSpec& spec,
                   const std::vector<int>& features, const Forward& fwd, int dldz);

// One full cycle on one data row: forward, loss, backward, weight update,
// rebinarize. Returns the successor state and the cycle's metrics (epoch and
// vector_index are left 0 for the caller to fill).
StepMetrics step(BnnState& state, const blueprints::NetworkSpec& spec,
                 const std::vector<int>& features, int y_true, Mode mode);

struct TrainResult {
  std::vector<StepMetrics> metrics;
  std::vector<double> running_avg_loss;  // cumulative mean of L / (1 + H)
  BnnState final_state;
};

TrainResult train(const blueprints::NetworkSpec& spec, std::uint32_t epochs, Mode mode);

}  // namespace refbnn
