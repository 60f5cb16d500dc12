#include "analyze/analyze.hpp"

#include <map>
#include <set>
#include <stdexcept>

namespace analyze {

using util::Rational;

SizeRow segment_row(const blueprints::Segment& seg) {
  SizeRow row;
  row.name = seg.name;
  row.places = seg.owned_places();
  row.transitions = seg.owned_transitions();
  row.arcs = seg.owned_arcs();
  return row;
}

SizeRow net_row(const petri::Net& net, const std::string& name) {
  SizeRow row;
  row.name = name;
  row.places = net.num_places();
  row.transitions = net.num_transitions();
  row.arcs = net.num_arcs();
  return row;
}

namespace {

std::size_t match_prefix(const std::string& name,
                         const std::vector<std::string>& prefixes) {
  for (std::size_t i = 0; i < prefixes.size(); ++i)
    if (name.rfind(prefixes[i], 0) == 0) return i;
  return prefixes.size();
}

}  // namespace

std::vector<SizeRow> grouped_report(const petri::Net& net,
                                    const std::vector<std::string>& prefixes) {
  std::vector<SizeRow> rows(prefixes.size() + 1);
  for (std::size_t i = 0; i < prefixes.size(); ++i) rows[i].name = prefixes[i];
  rows.back().name = "(other)";

  for (const auto& p : net.places())
    ++rows[match_prefix(p.name, prefixes)].places;
  std::vector<std::size_t> group_of_transition;
  for (const auto& t : net.transitions()) {
    std::size_t g = match_prefix(t.name, prefixes);
    group_of_transition.push_back(g);
    ++rows[g].transitions;
  }
  for (const auto& a : net.arcs()) {
    petri::TransitionId t = a.source.type == petri::NodeType::Transition
                                ? a.source.index
                                : a.target.index;
    ++rows[group_of_transition[t]].arcs;
  }

  std::vector<SizeRow> kept;
  for (auto& r : rows)
    if (r.places || r.transitions || r.arcs || r.name != "(other)")
      kept.push_back(std::move(r));
  return kept;
}

UnitSizes unit_sizes(const SizeRow& full_model, std::size_t features,
                     std::size_t hidden) {
  if (features == 0 || hidden == 0)
    throw std::invalid_argument("unit sizes need a nonzero feature and neuron count");
  Rational n(std::int64_t(features) * std::int64_t(hidden));
  UnitSizes u;
  u.places = Rational(std::int64_t(full_model.places)) / n;
  u.transitions = Rational(std::int64_t(full_model.transitions)) / n;
  u.arcs = Rational(std::int64_t(full_model.arcs)) / n;
  return u;
}

UnitSizes calibration_unit_sizes() {
  return {Rational(8243, 4), Rational(12598, 4), Rational(71370, 4)};
}

std::size_t ArchitectureSpec::neuron_count() const {
  std::size_t n = 0;
  for (std::size_t l : layers) n += l;
  return n;
}

void ArchitectureSpec::validate() const {
  if (input_features == 0) throw std::invalid_argument("architecture needs inputs");
  if (layers.empty()) throw std::invalid_argument("architecture needs layers");
  for (std::size_t l : layers)
    if (l == 0) throw std::invalid_argument("empty layer in architecture");
}

std::size_t unit_count(const ArchitectureSpec& arch) {
  arch.validate();
  std::size_t units = 0, fan_in = arch.input_features;
  for (std::size_t layer : arch.layers) {
    units += fan_in * layer;
    fan_in = layer;
  }
  return units;
}

EstimateRow estimate(const ArchitectureSpec& arch, const UnitSizes& unit) {
  EstimateRow row;
  row.name = arch.name;
  row.units = unit_count(arch);
  Rational n(std::int64_t(row.units));
  row.places = n * unit.places;
  row.transitions = n * unit.transitions;
  row.arcs = n * unit.arcs;
  return row;
}

std::vector<ArchitectureSpec> architecture_presets() {
  std::vector<ArchitectureSpec> out;
  const std::vector<std::vector<std::size_t>> stacks = {{128}, {256}, {256, 128}};
  struct Base {
    const char* name;
    std::size_t inputs, classes;
  };
  const Base bases[] = {{"KWS6", 377, 6}, {"CIFAR2", 1024, 2}, {"MNIST", 784, 10}};
  for (const auto& stack : stacks)
    for (const auto& base : bases) {
      ArchitectureSpec a;
      a.name = base.name;
      for (std::size_t h : stack) a.name += (a.name == base.name ? " " : "+") + std::to_string(h);
      a.input_features = base.inputs;
      a.layers = stack;
      a.layers.push_back(base.classes);
      out.push_back(std::move(a));
    }
  return out;
}

}  // namespace analyze
