#include "refbnn/refbnn.hpp"

#include <bit>
#include <stdexcept>

namespace refbnn {

using bitfloat::Fp32Bits;
using util::Rational;

BnnState BnnState::make(const std::vector<Fp32Bits>& weights, int rate_tenths) {
  if (rate_tenths < 1 || rate_tenths > 9)
    throw std::invalid_argument("learning rate outside {0.1..0.9}");
  BnnState s;
  s.real_weights = weights;
  s.rate_tenths = rate_tenths;
  for (Fp32Bits w : weights) {
    bitfloat::validate(w);
    s.binary_weights.push_back(binarize(w));
  }
  return s;
}

int binarize(Fp32Bits w) { return sign_bit(w) && !is_zero(w) ? -1 : 1; }

int ste_indicator(Fp32Bits w) {
  std::uint32_t e = exponent_field(w);
  return e < 127 || (e == 127 && mantissa_field(w) == 0) ? 1 : 0;
}

Forward forward(const BnnState& state, const blueprints::NetworkSpec& spec,
                const std::vector<int>& features) {
  const std::size_t f = spec.features, h = spec.hidden;
  if (features.size() != f) throw std::invalid_argument("feature count mismatch");
  Forward out;
  for (std::size_t i = 0; i < h; ++i) {
    int s = 0;
    for (std::size_t j = 0; j < f; ++j)
      s += features[j] * state.binary_weights[i * f + j];
    int t = s > 1 ? 1 : (s < -1 ? -1 : s);  // hardtanh on integers
    int x = t >= 0 ? 1 : -1;
    out.s.push_back(s);
    out.x.push_back(x);
    out.o.push_back(x * state.binary_weights[f * h + i]);
    out.z += out.o.back();
  }
  out.prediction = out.z >= 0 ? 1 : -1;
  return out;
}

LossPair loss(int y_true, int z) {
  int m = y_true * z;
  return {m < 1 ? 1 - m : 0, m < 1 ? -y_true : 0};
}

Gradients backward(const BnnState& state, const blueprints::NetworkSpec& spec,
                   const std::vector<int>& features, const Forward& fwd, int dldz) {
  const std::size_t f = spec.features, h = spec.hidden;
  Gradients g;
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < f; ++j)
      g.binary.push_back(dldz * state.binary_weights[f * h + i] * features[j]);
  for (std::size_t i = 0; i < h; ++i) g.binary.push_back(dldz * fwd.x[i]);
  for (std::size_t w = 0; w < state.real_weights.size(); ++w) {
    g.ste.push_back(ste_indicator(state.real_weights[w]));
    g.real.push_back(g.binary[w] * g.ste.back());
  }
  return g;
}

namespace {

Fp32Bits native_update(Fp32Bits w, int j_tenths) {
  float wf = std::bit_cast<float>(w.word);
  float jf = float(j_tenths) / 10.0f;
  return {std::bit_cast<std::uint32_t>(wf - jf)};
}

}  // namespace

StepMetrics step(BnnState& state, const blueprints::NetworkSpec& spec,
                 const std::vector<int>& features, int y_true, Mode mode) {
  StepMetrics m;
  m.features = features;
  m.y_true = y_true;
  m.binary_weights = state.binary_weights;

  Forward fwd = forward(state, spec, features);
  m.pre_activations = fwd.s;
  m.activations = fwd.x;
  m.neuron_outputs = fwd.o;
  m.output_sum = fwd.z;
  m.prediction = fwd.prediction;

  LossPair lp = loss(y_true, fwd.z);
  m.loss = lp.loss;
  m.dldz = lp.dldz;

  Gradients g = backward(state, spec, features, fwd, lp.dldz);
  m.binary_grad = g.binary;
  m.ste = g.ste;
  m.real_grad = g.real;

  m.initial_bits = state.real_weights;
  for (std::size_t w = 0; w < state.real_weights.size(); ++w) {
    int jt = state.rate_tenths * g.real[w];
    m.j_tenths.push_back(jt);
    Fp32Bits& bits = state.real_weights[w];
    if (jt != 0) {
      if (mode == Mode::PnExact)
        bits = bitfloat::update_weight(bits, Rational::tenths(jt)).result;
      else
        bits = native_update(bits, jt);
    }
    state.binary_weights[w] = binarize(bits);
  }
  m.updated_bits = state.real_weights;
  return m;
}

TrainResult train(const blueprints::NetworkSpec& spec, std::uint32_t epochs, Mode mode) {
  spec.validate();
  if (spec.learning_rate_tenths.size() != 1)
    throw std::invalid_argument("training needs a single learning rate");

  TrainResult result;
  result.final_state =
      BnnState::make(blueprints::initial_weights(spec), spec.learning_rate_tenths[0]);
  BnnState& state = result.final_state;

  const std::size_t rows = spec.dataset.size();
  double sum = 0.0;
  const double max_loss = 1.0 + double(spec.hidden);
  std::uint32_t cycle = 0;
  for (std::uint32_t e = 0; e < epochs; ++e)
    for (std::size_t k = 0; k < rows; ++k, ++cycle) {
      const auto& row = spec.dataset[k];
      StepMetrics m = step(state, spec, row.bits, row.label, mode);
      m.epoch = (cycle + 1) / std::uint32_t(rows);
      m.vector_index = std::uint32_t(k);
      sum += double(m.loss) / max_loss;
      result.running_avg_loss.push_back(sum / double(cycle + 1));
      result.metrics.push_back(std::move(m));
    }
  return result;
}

}  // namespace refbnn
