#include "engine/engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace engine {

using bitfloat::Fp32Bits;
using blueprints::ComposedModel;
using petri::Marking;
using petri::Net;
using petri::PlaceId;
using petri::TransitionId;

Simulator::Simulator(const Net& net, Marking initial)
    : net_(net), marking_(std::move(initial)) {
  pos_.assign(net.num_transitions(), petri::kNoIndex);
  stamp_.assign(net.num_transitions(), 0);
  for (TransitionId t = 0; t < net.num_transitions(); ++t) refresh(t);
}

void Simulator::refresh(TransitionId t) {
  bool en = petri::enabled(net_, marking_, t);
  std::uint32_t& p = pos_[t];
  if (en && p == petri::kNoIndex) {
    p = std::uint32_t(list_.size());
    list_.push_back(t);
  } else if (!en && p != petri::kNoIndex) {
    TransitionId last = list_.back();
    list_[p] = last;
    pos_[last] = p;
    list_.pop_back();
    p = petri::kNoIndex;
  }
}

std::optional<petri::SafetyViolation> Simulator::fire(TransitionId t) {
  if (auto viol = petri::fire_in_place(net_, marking_, t)) return viol;
  ++epoch_;
  auto touch = [&](PlaceId p) {
    for (TransitionId u : net_.consumers_of(p))
      if (stamp_[u] != epoch_) {
        stamp_[u] = epoch_;
        refresh(u);
      }
    for (TransitionId u : net_.readers_of(p))
      if (stamp_[u] != epoch_) {
        stamp_[u] = epoch_;
        refresh(u);
      }
  };
  for (PlaceId p : net_.consumed(t)) touch(p);
  for (PlaceId p : net_.produced(t)) touch(p);
  return std::nullopt;
}

namespace {

RunReport run_impl(const Net& net, const Marking& initial, SchedulePolicy policy,
                   const StopCondition& stop, bool record_trace,
                   const ComposedModel* model) {
  RunReport report;
  Simulator sim(net, initial);
  std::mt19937_64 rng(policy.seed);

  TransitionId boundary =
      model ? net.transition_checked(model->t_next_vector) : petri::kNoIndex;
  TransitionId marker =
      stop.cycle_marker != petri::kNoIndex ? stop.cycle_marker : boundary;

  for (;;) {
    const auto& en = sim.enabled_list();
    if (en.empty()) {
      report.terminal = Terminal::Quiescent;
      break;
    }
    if (report.firings >= stop.step_limit) {
      report.terminal = Terminal::StepLimit;
      break;
    }
    TransitionId pick;
    if (policy.kind == SchedulePolicy::Kind::UniformRandom) {
      pick = en[rng() % en.size()];
    } else {
      pick = *std::min_element(en.begin(), en.end());
    }
    if (auto viol = sim.fire(pick)) {
      report.terminal = Terminal::SafetyViolation;
      report.violation = viol;
      report.final_marking = sim.marking();
      return report;
    }
    if (record_trace)
      report.trace.steps.push_back({report.firings, pick, sim.marking().hash()});
    ++report.firings;
    if (model && pick == boundary && !model->vector_rec.places.empty())
      report.metrics_series.push_back(decode_instrument(*model, sim.marking()));
    if (marker != petri::kNoIndex && pick == marker) {
      ++report.cycles_completed;
      if (stop.kind == StopCondition::Kind::CycleCount &&
          report.cycles_completed >= stop.cycles) {
        report.terminal = Terminal::CycleLimit;
        break;
      }
    }
  }
  report.final_marking = sim.marking();
  return report;
}

}  // namespace

RunReport run(const Net& net, const Marking& initial, SchedulePolicy policy,
              const StopCondition& stop, bool record_trace) {
  return run_impl(net, initial, policy, stop, record_trace, nullptr);
}

RunReport run_model(const ComposedModel& model, SchedulePolicy policy,
                    const StopCondition& stop, bool record_trace) {
  return run_impl(model.net, model.net.initial_marking(), policy, stop, record_trace,
                  &model);
}

namespace {

// index of the single marked place in a one-hot group
std::size_t read_group_index(const Net& net, const Marking& m,
                             const blueprints::ValueGroup& g, const char* what) {
  std::size_t found = g.places.size();
  for (std::size_t i = 0; i < g.places.size(); ++i) {
    if (net.has_token(m, net.place_checked(g.places[i]))) {
      if (found != g.places.size())
        throw InstrumentError(std::string(what) + ": one-hot group doubly marked (" +
                              g.places[found] + ", " + g.places[i] + ")");
      found = i;
    }
  }
  if (found == g.places.size())
    throw InstrumentError(std::string(what) + ": one-hot group has no marked place");
  return found;
}

int read_group_int(const Net& net, const Marking& m, const blueprints::ValueGroup& g,
                   const char* what) {
  const util::Rational& v = g.values[read_group_index(net, m, g, what)];
  if (v.den() == 1) return int(v.num());
  throw InstrumentError(std::string(what) + ": non-integer recorder value");
}

int read_group_tenths(const Net& net, const Marking& m, const blueprints::ValueGroup& g,
                      const char* what) {
  const util::Rational& v = g.values[read_group_index(net, m, g, what)];
  util::Rational t = v * util::Rational(10);
  if (t.den() == 1) return int(t.num());
  throw InstrumentError(std::string(what) + ": recorder value not in tenths");
}

Fp32Bits read_bits(const Net& net, const Marking& m, const blueprints::RegisterBits& rb,
                   const char* what) {
  std::uint32_t word = 0;
  for (int b = 0; b < 32; ++b) {
    bool zero = net.has_token(m, net.place_checked(rb.place[b][0]));
    bool one = net.has_token(m, net.place_checked(rb.place[b][1]));
    if (zero == one)
      throw InstrumentError(std::string(what) + ": bit pair " + rb.place[b][0] +
                            (zero ? " doubly marked" : " unmarked"));
    if (one) word |= 1u << (31 - b);
  }
  return {word};
}

}  // namespace

refbnn::StepMetrics decode_instrument(const ComposedModel& model, const Marking& m) {
  const Net& net = model.net;
  if (model.vector_rec.places.empty())
    throw InstrumentError("model was composed without the instrument");
  refbnn::StepMetrics out;

  out.vector_index =
      std::uint32_t(read_group_int(net, m, model.vector_rec, "vector recorder"));
  if (out.vector_index >= model.spec.dataset.size())
    throw InstrumentError("vector recorder index out of range");
  out.features = model.spec.dataset[out.vector_index].bits;
  out.y_true = read_group_int(net, m, model.ytrue_rec, "label recorder");
  for (std::size_t i = 0; i < model.spec.hidden; ++i) {
    out.pre_activations.push_back(read_group_int(net, m, model.s_rec[i], "s recorder"));
    out.activations.push_back(read_group_int(net, m, model.x_rec[i], "x recorder"));
    out.neuron_outputs.push_back(read_group_int(net, m, model.o_rec[i], "o recorder"));
  }
  out.output_sum = read_group_int(net, m, model.z_rec, "z recorder");
  out.prediction = read_group_int(net, m, model.ypred_rec, "prediction recorder");
  out.loss = read_group_int(net, m, model.loss_rec, "loss recorder");
  out.dldz = read_group_int(net, m, model.dldz_rec, "dldz recorder");
  for (std::size_t w = 0; w < model.weight_names.size(); ++w) {
    out.binary_weights.push_back(read_group_int(net, m, model.wb_rec[w], "wb recorder"));
    out.binary_grad.push_back(read_group_int(net, m, model.gb_rec[w], "gb recorder"));
    out.ste.push_back(read_group_int(net, m, model.ste_rec[w], "ste recorder"));
    out.real_grad.push_back(read_group_int(net, m, model.gr_rec[w], "gr recorder"));
    out.j_tenths.push_back(read_group_tenths(net, m, model.j_rec[w], "J recorder"));
    out.initial_bits.push_back(
        read_bits(net, m, model.init_bits_rec[w], "initial-bits recorder"));
    out.updated_bits.push_back(
        read_bits(net, m, model.upd_bits_rec[w], "updated-bits recorder"));
  }
  PlaceId epoch = net.place_checked(model.epoch_counter);
  out.epoch = m.count(net.counter_slot(epoch));
  return out;
}

std::optional<int> marked_rate(const ComposedModel& model, const Marking& m) {
  std::optional<int> found;
  for (const auto& [tenths, place] : model.rate_place)
    if (model.net.has_token(m, model.net.place_checked(place))) {
      if (found) throw InstrumentError("multiple learning-rate places marked");
      found = tenths;
    }
  return found;
}

std::vector<Fp32Bits> read_registers(const ComposedModel& model, const Marking& m) {
  std::vector<Fp32Bits> out;
  for (const auto& rb : model.register_bits)
    out.push_back(read_bits(model.net, m, rb, "register"));
  return out;
}

namespace {

std::string fmt_int(int v) { return std::to_string(v); }

template <class T, class Fmt>
void compare_vec(std::vector<Mismatch>& out, std::uint64_t cycle, const char* field,
                 const std::vector<T>& a, const std::vector<T>& b, Fmt&& fmt) {
  if (a.size() != b.size()) {
    out.push_back({cycle, 0, std::string(field) + ".size", std::to_string(a.size()),
                   std::to_string(b.size())});
    return;
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i] == b[i])) out.push_back({cycle, i, field, fmt(a[i]), fmt(b[i])});
}

}  // namespace

std::vector<Mismatch> compare_metrics(const refbnn::StepMetrics& n,
                                      const refbnn::StepMetrics& r, std::uint64_t cycle) {
  std::vector<Mismatch> out;
  auto scalar = [&](const char* field, auto a, auto b) {
    if (!(a == b))
      out.push_back({cycle, 0, field, std::to_string(a), std::to_string(b)});
  };
  scalar("epoch", n.epoch, r.epoch);
  scalar("vector_index", n.vector_index, r.vector_index);
  compare_vec(out, cycle, "features", n.features, r.features, fmt_int);
  scalar("y_true", n.y_true, r.y_true);
  compare_vec(out, cycle, "pre_activations", n.pre_activations, r.pre_activations, fmt_int);
  compare_vec(out, cycle, "activations", n.activations, r.activations, fmt_int);
  compare_vec(out, cycle, "neuron_outputs", n.neuron_outputs, r.neuron_outputs, fmt_int);
  scalar("output_sum", n.output_sum, r.output_sum);
  scalar("prediction", n.prediction, r.prediction);
  scalar("loss", n.loss, r.loss);
  scalar("dldz", n.dldz, r.dldz);
  compare_vec(out, cycle, "binary_weights", n.binary_weights, r.binary_weights, fmt_int);
  compare_vec(out, cycle, "binary_grad", n.binary_grad, r.binary_grad, fmt_int);
  compare_vec(out, cycle, "ste", n.ste, r.ste, fmt_int);
  compare_vec(out, cycle, "real_grad", n.real_grad, r.real_grad, fmt_int);
  compare_vec(out, cycle, "j_tenths", n.j_tenths, r.j_tenths, fmt_int);
  auto fmt_bits = [](Fp32Bits b) { return bitfloat::to_hex(b); };
  compare_vec(out, cycle, "initial_bits", n.initial_bits, r.initial_bits, fmt_bits);
  compare_vec(out, cycle, "updated_bits", n.updated_bits, r.updated_bits, fmt_bits);
  return out;
}

LockstepReport lockstep(const blueprints::NetworkSpec& spec, std::uint32_t epochs,
                        const std::vector<std::uint64_t>& seeds) {
  blueprints::NetworkSpec run_spec = spec;
  run_spec.instrument = true;
  run_spec.epoch_budget = epochs;
  ComposedModel model = blueprints::compose_bnn(run_spec);

  const std::uint64_t want_cycles = std::uint64_t(epochs) * spec.dataset.size();
  LockstepReport report;
  for (std::uint64_t seed : seeds) {
    LockstepSeedResult sr;
    sr.seed = seed;
    RunReport rr = run_model(model, SchedulePolicy::uniform(seed),
                             StopCondition::quiescence());
    sr.cycles = rr.cycles_completed;
    sr.firings = rr.firings;
    if (rr.terminal != Terminal::Quiescent)
      sr.mismatches.push_back({0, 0, "terminal", "did not quiesce", "quiescent"});
    if (rr.cycles_completed != want_cycles)
      sr.mismatches.push_back({0, 0, "cycles", std::to_string(rr.cycles_completed),
                               std::to_string(want_cycles)});

    std::optional<int> rate = marked_rate(model, rr.final_marking);
    if (!rate) {
      sr.mismatches.push_back({0, 0, "rate", "none selected", "one rate"});
    } else {
      blueprints::NetworkSpec ref_spec = spec;
      ref_spec.learning_rate_tenths = {*rate};
      refbnn::TrainResult ref = refbnn::train(ref_spec, epochs, refbnn::Mode::PnExact);
      std::size_t common = std::min(ref.metrics.size(), rr.metrics_series.size());
      for (std::size_t c = 0; c < common; ++c) {
        auto mm = compare_metrics(rr.metrics_series[c], ref.metrics[c], c);
        sr.mismatches.insert(sr.mismatches.end(), mm.begin(), mm.end());
      }
    }
    if (!sr.mismatches.empty()) report.ok = false;
    report.seeds.push_back(std::move(sr));
  }
  return report;
}

}  // namespace engine
