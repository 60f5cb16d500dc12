#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "blueprints/segment.hpp"
#include "petri/net.hpp"
#include "refbnn/refbnn.hpp"

// Token-game scheduler. A run repeatedly picks one enabled transition per the
// policy and fires it, keeping the enabled set incrementally up to date (only
// transitions adjacent to a changed place are re-checked).

namespace engine {

struct SchedulePolicy {
  enum class Kind { UniformRandom, PriorityOrder };
  Kind kind = Kind::UniformRandom;
  std::uint64_t seed = 1;

  static SchedulePolicy uniform(std::uint64_t seed) {
    return {Kind::UniformRandom, seed};
  }
  // lowest transition id first; fully deterministic, useful when bisecting
  static SchedulePolicy priority() { return {Kind::PriorityOrder, 0}; }
};

struct StopCondition {
  enum class Kind { Quiescence, StepLimit, CycleCount };
  Kind kind = Kind::Quiescence;
  std::uint64_t step_limit = 100'000'000;  // hard cap in every mode
  std::uint64_t cycles = 0;                // CycleCount: marker firings wanted
  petri::TransitionId cycle_marker = petri::kNoIndex;

  static StopCondition quiescence(std::uint64_t cap = 100'000'000) {
    StopCondition c;
    c.step_limit = cap;
    return c;
  }
  static StopCondition steps(std::uint64_t n) {
    return {Kind::StepLimit, n, 0, petri::kNoIndex};
  }
  static StopCondition cycle_count(petri::TransitionId marker, std::uint64_t n,
                                   std::uint64_t cap = 100'000'000) {
    return {Kind::CycleCount, cap, n, marker};
  }
};

enum class Terminal { Quiescent, StepLimit, CycleLimit, SafetyViolation };

struct RunReport {
  petri::Trace trace;  // filled only when record_trace was set
  std::uint64_t firings = 0;
  std::uint64_t cycles_completed = 0;  // firings of the cycle marker
  Terminal terminal = Terminal::Quiescent;
  std::optional<petri::SafetyViolation> violation;
  std::vector<refbnn::StepMetrics> metrics_series;
  petri::Marking final_marking;
};

// Enabled-set bookkeeping around a marking. fire() refuses nothing: callers
// pick from enabled_list().
class Simulator {
 public:
  Simulator(const petri::Net& net, petri::Marking initial);

  const petri::Marking& marking() const { return marking_; }
  const std::vector<petri::TransitionId>& enabled_list() const { return list_; }
  std::optional<petri::SafetyViolation> fire(petri::TransitionId t);

 private:
  void refresh(petri::TransitionId t);

  const petri::Net& net_;
  petri::Marking marking_;
  std::vector<petri::TransitionId> list_;
  std::vector<std::uint32_t> pos_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

RunReport run(const petri::Net& net, const petri::Marking& initial,
              SchedulePolicy policy, const StopCondition& stop,
              bool record_trace = false);

// Same scheduler over a composed model: decodes a StepMetrics at every firing
// of the cycle-boundary transition (recorders are full there and the flush
// has not run yet) and appends it to the report.
RunReport run_model(const blueprints::ComposedModel& model, SchedulePolicy policy,
                    const StopCondition& stop, bool record_trace = false);

struct InstrumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reads the recorder groups of an instrumented model out of a marking.
// A one-hot group with zero or multiple marked places throws InstrumentError.
refbnn::StepMetrics decode_instrument(const blueprints::ComposedModel& model,
                                      const petri::Marking& marking);

// Learning-rate place currently marked, as tenths; nullopt before the free
// choice has fired.
std::optional<int> marked_rate(const blueprints::ComposedModel& model,
                               const petri::Marking& marking);

// Register contents decoded from the live bit places.
std::vector<bitfloat::Fp32Bits> read_registers(const blueprints::ComposedModel& model,
                                               const petri::Marking& marking);

struct Mismatch {
  std::uint64_t cycle = 0;
  std::size_t weight = 0;  // meaningful for per-weight fields
  std::string field;
  std::string net_value;
  std::string ref_value;
};

struct LockstepSeedResult {
  std::uint64_t seed = 0;
  std::uint64_t cycles = 0;
  std::uint64_t firings = 0;
  std::vector<Mismatch> mismatches;
};

struct LockstepReport {
  std::vector<LockstepSeedResult> seeds;
  bool ok = true;
};

// Runs the instrumented, budgeted net to quiescence under each seed, then
// replays the reference network with the learning rate the net selected and
// the same initial weights, comparing every StepMetrics field of every cycle.
LockstepReport lockstep(const blueprints::NetworkSpec& spec, std::uint32_t epochs,
                        const std::vector<std::uint64_t>& seeds);

// Field-by-field comparison used by lockstep; exposed for tests.
std::vector<Mismatch> compare_metrics(const refbnn::StepMetrics& net_side,
                                      const refbnn::StepMetrics& ref_side,
                                      std::uint64_t cycle);

}  // namespace engine
