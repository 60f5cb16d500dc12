#include "verify/verify.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace verify {

using petri::Marking;
using petri::Net;
using petri::PlaceId;
using petri::Trace;
using petri::TransitionId;

std::vector<TransitionId> StateGraph::path_to(std::uint32_t index) const {
  std::vector<TransitionId> rev;
  for (std::uint32_t s = index; s != 0; s = parent[s]) rev.push_back(parent_edge[s]);
  return {rev.rbegin(), rev.rend()};
}

namespace {

Trace to_trace(const std::vector<TransitionId>& firings, const Net& net,
               const Marking& initial) {
  Trace tr;
  Marking m = initial;
  for (std::size_t i = 0; i < firings.size(); ++i) {
    auto viol = petri::fire_in_place(net, m, firings[i]);
    std::uint64_t digest = viol ? 0 : m.hash();
    tr.steps.push_back({i, firings[i], digest});
    if (viol) break;  // the violating firing is the last recorded step
  }
  return tr;
}

Trace witness_path(const StateGraph& g, const Net& net, std::uint32_t state,
                   TransitionId extra = petri::kNoIndex) {
  std::vector<TransitionId> firings = g.path_to(state);
  if (extra != petri::kNoIndex) firings.push_back(extra);
  return to_trace(firings, net, g.states[0]);
}

PropertyReport report(std::string property, Verdict verdict, std::size_t states,
                      std::string detail = "", std::optional<Trace> witness = {}) {
  PropertyReport r;
  r.property = std::move(property);
  r.verdict = verdict;
  r.states_explored = states;
  r.detail = std::move(detail);
  r.witness = std::move(witness);
  return r;
}

}  // namespace

StateGraph explore(const Net& net, std::size_t max_states) {
  StateGraph g;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> index;

  auto intern = [&](const Marking& m) -> std::pair<std::uint32_t, bool> {
    auto& bucket = index[m.hash()];
    for (std::uint32_t i : bucket)
      if (g.states[i] == m) return {i, false};
    std::uint32_t id = std::uint32_t(g.states.size());
    g.states.push_back(m);
    bucket.push_back(id);
    return {id, true};
  };

  intern(net.initial_marking());
  g.parent.push_back(0);
  g.parent_edge.push_back(petri::kNoIndex);

  std::deque<std::uint32_t> frontier{0};
  bool truncated = false;
  while (!frontier.empty()) {
    std::uint32_t from = frontier.front();
    frontier.pop_front();
    for (TransitionId t = 0; t < net.num_transitions(); ++t) {
      if (!petri::enabled(net, g.states[from], t)) continue;
      auto next = petri::fire(net, g.states[from], t);
      if (auto* viol = std::get_if<petri::SafetyViolation>(&next)) {
        if (!g.violation) {
          g.violation = *viol;
          g.violation_state = from;
        }
        continue;
      }
      auto [to, fresh] = intern(std::get<Marking>(next));
      if (fresh && g.states.size() > max_states) {
        // over budget: drop the state just interned, finish this node, stop
        truncated = true;
        index[g.states.back().hash()].pop_back();
        g.states.pop_back();
        continue;
      }
      if (fresh) {
        g.parent.push_back(from);
        g.parent_edge.push_back(t);
        frontier.push_back(to);
      }
      g.edges.push_back({from, t, to});
    }
    if (truncated) break;
  }
  g.exhausted = !truncated;
  return g;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Violated: return "violated";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

std::variant<Marking, petri::SafetyViolation> replay(const Net& net,
                                                     const Trace& witness) {
  Marking m = net.initial_marking();
  for (const auto& step : witness.steps) {
    if (!petri::enabled(net, m, step.transition))
      throw std::logic_error("witness step " + std::to_string(step.index) +
                             " is not enabled: " +
                             net.transition(step.transition).name);
    if (auto viol = petri::fire_in_place(net, m, step.transition)) return *viol;
  }
  return m;
}

PropertyReport check_1safe(const Net& net, const StateGraph& graph) {
  if (!graph.violation) {
    Verdict v = graph.exhausted ? Verdict::Holds : Verdict::Inconclusive;
    return report("1-safe", v, graph.states.size(),
                  graph.exhausted ? "" : "state budget reached without a violation");
  }
  const auto& viol = *graph.violation;
  return report("1-safe", Verdict::Violated, graph.states.size(),
                "firing " + net.transition(viol.transition).name + " overflows " +
                    net.place(viol.place).name,
                witness_path(graph, net, graph.violation_state, viol.transition));
}

PropertyReport check_1safe(const Net& net, const Trace& trace) {
  Marking m = net.initial_marking();
  Trace prefix;
  for (const auto& step : trace.steps) {
    prefix.steps.push_back(step);
    if (auto viol = petri::fire_in_place(net, m, step.transition))
      return report("1-safe", Verdict::Violated, 0,
                    "firing " + net.transition(viol->transition).name +
                        " overflows " + net.place(viol->place).name,
                    prefix);
  }
  return report("1-safe", Verdict::Inconclusive, 0,
                "no violation along one trace of " +
                    std::to_string(trace.steps.size()) + " firings");
}

PropertyReport check_deadlock_free(const Net& net, const StateGraph& graph,
                                   const TerminalPredicate& allowed_terminal) {
  if (!graph.exhausted)
    return report("deadlock-free", Verdict::Inconclusive, graph.states.size(),
                  "exploration not exhausted");
  for (std::uint32_t s = 0; s < graph.states.size(); ++s) {
    bool any = false;
    for (TransitionId t = 0; t < net.num_transitions() && !any; ++t)
      any = petri::enabled(net, graph.states[s], t);
    if (any) continue;
    if (allowed_terminal && allowed_terminal(graph.states[s])) continue;
    return report("deadlock-free", Verdict::Violated, graph.states.size(),
                  "dead marking reached", witness_path(graph, net, s));
  }
  return report("deadlock-free", Verdict::Holds, graph.states.size());
}

PropertyReport check_reachable(const Net& net, const StateGraph& graph,
                               const Submarking& target, ReachMode mode) {
  auto tokens = [&](const Marking& m, PlaceId p) -> std::uint32_t {
    if (net.place(p).kind == petri::PlaceKind::Counter)
      return m.count(net.counter_slot(p));
    return net.has_token(m, p) ? 1 : 0;
  };
  for (std::uint32_t s = 0; s < graph.states.size(); ++s) {
    bool match = true;
    for (const auto& [p, want] : target) {
      std::uint32_t have = tokens(graph.states[s], p);
      if (mode == ReachMode::Exact ? have != want : have < want) {
        match = false;
        break;
      }
    }
    if (match)
      return report("reachable", Verdict::Holds, graph.states.size(), "",
                    witness_path(graph, net, s));
  }
  return report("reachable",
                graph.exhausted ? Verdict::Violated : Verdict::Inconclusive,
                graph.states.size(),
                graph.exhausted ? "target matches no reachable marking"
                                : "target not found within the state budget");
}

PropertyReport check_mutex(const Net& net, const StateGraph& graph,
                           const std::vector<PlaceId>& places) {
  for (std::uint32_t s = 0; s < graph.states.size(); ++s) {
    PlaceId first = petri::kNoIndex;
    for (PlaceId p : places) {
      if (!net.has_token(graph.states[s], p)) continue;
      if (first == petri::kNoIndex) {
        first = p;
        continue;
      }
      return report("mutex", Verdict::Violated, graph.states.size(),
                    net.place(first).name + " and " + net.place(p).name +
                        " marked together",
                    witness_path(graph, net, s));
    }
  }
  return report("mutex", graph.exhausted ? Verdict::Holds : Verdict::Inconclusive,
                graph.states.size());
}

PropertyReport check_precedence(const Net& net, const Trace& trace,
                                const std::vector<TransitionId>& before,
                                const std::vector<TransitionId>& after,
                                TransitionId reset) {
  std::unordered_set<TransitionId> before_set(before.begin(), before.end());
  std::unordered_set<TransitionId> after_set(after.begin(), after.end());
  bool armed = false;
  Trace prefix;
  for (const auto& step : trace.steps) {
    prefix.steps.push_back(step);
    if (before_set.count(step.transition)) armed = true;
    if (after_set.count(step.transition) && !armed)
      return report("precedence", Verdict::Violated, 0,
                    net.transition(step.transition).name +
                        " fired before any of its prerequisites",
                    prefix);
    if (step.transition == reset) armed = false;
  }
  return report("precedence", Verdict::Holds, 0,
                std::to_string(trace.steps.size()) + " firings checked");
}

PropertyReport check_cyclic_order(const Net& net, const Trace& trace,
                                  const std::vector<TransitionId>& cycle) {
  std::unordered_map<TransitionId, std::size_t> position;
  for (std::size_t i = 0; i < cycle.size(); ++i) position[cycle[i]] = i;
  std::size_t expected = 0, seen = 0;
  Trace prefix;
  for (const auto& step : trace.steps) {
    prefix.steps.push_back(step);
    auto at = position.find(step.transition);
    if (at == position.end()) continue;
    if (at->second != expected)
      return report("cyclic-order", Verdict::Violated, 0,
                    net.transition(step.transition).name + " fired out of turn (slot " +
                        std::to_string(at->second) + ", expected " +
                        std::to_string(expected) + ")",
                    prefix);
    expected = (expected + 1) % cycle.size();
    ++seen;
  }
  return report("cyclic-order", Verdict::Holds, 0,
                std::to_string(seen) + " group firings in order");
}

namespace {

PropertyReport bounded_report(const Net& net, PlaceId place, std::uint32_t k,
                              std::uint32_t worst, std::size_t states,
                              std::optional<Trace> witness) {
  if (worst <= k)
    return report("bounded", Verdict::Holds, states,
                  net.place(place).name + " peaks at " + std::to_string(worst));
  return report("bounded", Verdict::Violated, states,
                net.place(place).name + " reaches " + std::to_string(worst) +
                    " > " + std::to_string(k),
                std::move(witness));
}

}  // namespace

PropertyReport check_bounded(const Net& net, const StateGraph& graph, PlaceId place,
                             std::uint32_t k) {
  bool counter = net.place(place).kind == petri::PlaceKind::Counter;
  std::uint32_t worst = 0, at = 0;
  for (std::uint32_t s = 0; s < graph.states.size(); ++s) {
    std::uint32_t c = counter ? graph.states[s].count(net.counter_slot(place))
                              : (net.has_token(graph.states[s], place) ? 1 : 0);
    if (c > worst) {
      worst = c;
      at = s;
    }
  }
  std::optional<Trace> witness;
  if (worst > k) witness = witness_path(graph, net, at);
  return bounded_report(net, place, k, worst, graph.states.size(), std::move(witness));
}

PropertyReport check_bounded(const Net& net, const Trace& trace, PlaceId place,
                             std::uint32_t k) {
  bool counter = net.place(place).kind == petri::PlaceKind::Counter;
  Marking m = net.initial_marking();
  std::uint32_t worst = counter ? m.count(net.counter_slot(place))
                                : (net.has_token(m, place) ? 1 : 0);
  Trace prefix;
  for (const auto& step : trace.steps) {
    prefix.steps.push_back(step);
    if (petri::fire_in_place(net, m, step.transition)) break;
    std::uint32_t c = counter ? m.count(net.counter_slot(place))
                              : (net.has_token(m, place) ? 1 : 0);
    if (c > worst) {
      worst = c;
      if (worst > k) return bounded_report(net, place, k, worst, 0, prefix);
    }
  }
  return bounded_report(net, place, k, worst, 0, {});
}

PropertyReport check_reversibility(const Net& net, const StateGraph& graph) {
  if (!graph.exhausted)
    return report("reversibility", Verdict::Inconclusive, graph.states.size(),
                  "exploration not exhausted");
  // backward reachability from the initial state over reversed edges
  std::vector<std::vector<std::uint32_t>> rev(graph.states.size());
  for (const auto& e : graph.edges) rev[e.to].push_back(e.from);
  std::vector<bool> can_return(graph.states.size(), false);
  std::deque<std::uint32_t> queue{0};
  can_return[0] = true;
  while (!queue.empty()) {
    std::uint32_t s = queue.front();
    queue.pop_front();
    for (std::uint32_t p : rev[s])
      if (!can_return[p]) {
        can_return[p] = true;
        queue.push_back(p);
      }
  }
  for (std::uint32_t s = 0; s < graph.states.size(); ++s)
    if (!can_return[s])
      return report("reversibility", Verdict::Violated, graph.states.size(),
                    "marking with no path back to the initial marking",
                    witness_path(graph, net, s));
  return report("reversibility", Verdict::Holds, graph.states.size());
}

PropertyReport check_irreversible_sink(const Net& net, const Trace& trace) {
  for (PlaceId p = 0; p < net.num_places(); ++p) {
    if (!net.producers_of(p).empty() || net.consumers_of(p).empty()) continue;
    bool counter = net.place(p).kind == petri::PlaceKind::Counter;
    std::uint32_t initial = counter
                                ? net.initial_marking().count(net.counter_slot(p))
                                : (net.has_token(net.initial_marking(), p) ? 1 : 0);
    if (initial == 0) continue;
    // find the first firing that consumes from p; from then on its count
    // stays strictly below the initial value, so no later marking is initial
    Trace prefix;
    for (const auto& step : trace.steps) {
      prefix.steps.push_back(step);
      const auto& consumed = net.consumed(step.transition);
      if (std::find(consumed.begin(), consumed.end(), p) != consumed.end())
        return report("reversibility", Verdict::Violated, 0,
                      net.place(p).name +
                          " has no producer; once consumed the initial marking "
                          "is unreachable",
                      prefix);
    }
  }
  return report("reversibility", Verdict::Inconclusive, 0,
                "no consumed producer-free place found along the trace");
}

}  // namespace verify
