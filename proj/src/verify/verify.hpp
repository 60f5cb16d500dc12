#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "petri/net.hpp"

// Explicit-state verification: breadth-first construction of the reachable
// marking graph under 1-safe semantics, plus the property checks run over it
// (or over recorded traces where exhaustive exploration is out of reach).

namespace verify {

struct StateGraph {
  struct Edge {
    std::uint32_t from = 0;
    petri::TransitionId transition = petri::kNoIndex;
    std::uint32_t to = 0;
  };

  std::vector<petri::Marking> states;  // states[0] is the initial marking
  std::vector<Edge> edges;
  bool exhausted = false;  // false when the state budget cut exploration short

  // breadth-first spanning tree, for witness reconstruction
  std::vector<std::uint32_t> parent;
  std::vector<petri::TransitionId> parent_edge;

  // first firing that would have violated safety, if any; the offending
  // transition fires from states[violation_state]
  std::optional<petri::SafetyViolation> violation;
  std::uint32_t violation_state = 0;

  // firing sequence from the initial marking to states[index]
  std::vector<petri::TransitionId> path_to(std::uint32_t index) const;
};

StateGraph explore(const petri::Net& net, std::size_t max_states);

enum class Verdict { Holds, Violated, Inconclusive };

const char* verdict_name(Verdict v);

struct PropertyReport {
  std::string property;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<petri::Trace> witness;  // replayable firing sequence
  std::size_t states_explored = 0;
  std::string detail;
};

// Replays a witness from the initial marking; returns the final marking, or
// the safety violation the witness runs into. Throws if a step is disabled.
std::variant<petri::Marking, petri::SafetyViolation> replay(
    const petri::Net& net, const petri::Trace& witness);

// no reachable firing overflows a standard place or a counter bound
PropertyReport check_1safe(const petri::Net& net, const StateGraph& graph);
PropertyReport check_1safe(const petri::Net& net, const petri::Trace& trace);

// no reachable marking disables every transition, except markings the model
// declares terminal (a budgeted net quiescing is by design, not a fault)
using TerminalPredicate = std::function<bool(const petri::Marking&)>;
PropertyReport check_deadlock_free(const petri::Net& net, const StateGraph& graph,
                                   const TerminalPredicate& allowed_terminal = {});

// target: (place, tokens) constraints; exact requires equality on the listed
// places, coverable requires at least the listed count
enum class ReachMode { Exact, Coverable };
using Submarking = std::vector<std::pair<petri::PlaceId, std::uint32_t>>;
PropertyReport check_reachable(const petri::Net& net, const StateGraph& graph,
                               const Submarking& target, ReachMode mode);

// at most one of the listed places is marked in any reachable state
PropertyReport check_mutex(const petri::Net& net, const StateGraph& graph,
                           const std::vector<petri::PlaceId>& places);

// within every window delimited by firings of `reset`, each firing of an
// `after` transition is preceded by some firing of a `before` transition;
// the check on `reset` itself happens before its window closes
PropertyReport check_precedence(const petri::Net& net, const petri::Trace& trace,
                                const std::vector<petri::TransitionId>& before,
                                const std::vector<petri::TransitionId>& after,
                                petri::TransitionId reset);

// firings of the listed transitions appear in strict cyclic order, starting
// from cycle[0]; transitions outside the list are ignored
PropertyReport check_cyclic_order(const petri::Net& net, const petri::Trace& trace,
                                  const std::vector<petri::TransitionId>& cycle);

// token count of one place never exceeds k
PropertyReport check_bounded(const petri::Net& net, const StateGraph& graph,
                             petri::PlaceId place, std::uint32_t k);
PropertyReport check_bounded(const petri::Net& net, const petri::Trace& trace,
                             petri::PlaceId place, std::uint32_t k);

// the initial marking is reachable from every reachable marking
PropertyReport check_reversibility(const petri::Net& net, const StateGraph& graph);

// Structural reversibility refutation for nets too large to explore: an
// initially marked place with consumers but no producers can never be
// refilled, so any trace consuming it leaves the initial marking unreachable.
// Holds is never returned; absent such a place and trace, inconclusive.
PropertyReport check_irreversible_sink(const petri::Net& net, const petri::Trace& trace);

}  // namespace verify
