#pragma once

#include <string>
#include <vector>

#include "blueprints/segment.hpp"
#include "petri/net.hpp"
#include "util/rational.hpp"

// Size accounting for segments and composed nets, plus the analytical
// estimator that projects the per-feature-per-neuron cost onto larger
// architectures. Read arcs count as one arc throughout.

namespace analyze {

struct SizeRow {
  std::string name;
  std::size_t places = 0;
  std::size_t transitions = 0;
  std::size_t arcs = 0;

  std::size_t total() const { return places + transitions + arcs; }
};

// Owned counts of one segment: boundary-port places belong to a neighbour
// and are excluded; transitions and arcs always count in full.
SizeRow segment_row(const blueprints::Segment& seg);

// Whole-net counts.
SizeRow net_row(const petri::Net& net, const std::string& name);

// Whole-net counts grouped by place/transition name prefix (the composed
// model names every element "<segment>.<detail>"). Rows are ordered by first
// appearance; elements matching no requested prefix land in a "(other)" row.
// Arcs are charged to the transition's group so the column sums match the
// net totals exactly.
std::vector<SizeRow> grouped_report(const petri::Net& net,
                                    const std::vector<std::string>& prefixes);

struct UnitSizes {
  util::Rational places, transitions, arcs;

  util::Rational total() const { return places + transitions + arcs; }
};

// Per-feature-per-neuron cost: the full-model row divided by F*H.
UnitSizes unit_sizes(const SizeRow& full_model, std::size_t features,
                     std::size_t hidden);

// Frozen calibration constants the projections are quoted against: the
// four-weight model measured with its metric instrument attached, divided
// by its four units.
UnitSizes calibration_unit_sizes();

struct ArchitectureSpec {
  std::string name;
  std::size_t input_features = 0;
  std::vector<std::size_t> layers;  // hidden layer sizes, then output neurons

  std::size_t neuron_count() const;  // sum of layers
  void validate() const;             // throws std::invalid_argument
};

// Weight-matrix entries: sum over consecutive layer pairs of fanIn*fanOut,
// with the input features feeding the first layer.
std::size_t unit_count(const ArchitectureSpec& arch);

struct EstimateRow {
  std::string name;
  std::size_t units = 0;
  util::Rational places, transitions, arcs;

  util::Rational total() const { return places + transitions + arcs; }
};

EstimateRow estimate(const ArchitectureSpec& arch, const UnitSizes& unit);

// The nine architecture presets the estimator is validated against: keyword
// spotting (377 inputs, 6 classes), CIFAR two-class (1024 inputs), MNIST
// (784 inputs, 10 classes), each with layer stacks 128, 256 and 256+128.
std::vector<ArchitectureSpec> architecture_presets();

}  // namespace analyze
