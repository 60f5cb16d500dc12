#pragma once

#include <string>
#include <vector>

#include "blueprints/segment.hpp"
#include "petri/net.hpp"
#include "refbnn/refbnn.hpp"
#include "util/rational.hpp"

// Serialization: a diff-friendly native text format (lossless round trip,
// including ports when a segment is being saved), PNML for interchange, DOT
// for inspection, and CSV/JSON metric dumps with exact bit patterns.

namespace io {

// exact decimals ("-0.3", "2") and fraction form ("1/3")
util::Rational parse_rational(const std::string& text);

// inverse of bitfloat::to_hex: "0x" followed by 8 hex digits
bitfloat::Fp32Bits parse_hex_bits(const std::string& text);

struct NetDocument {
  petri::Net net;
  std::vector<blueprints::Port> ports;
};

// Sections: PLACES, TRANSITIONS, ARCS, MARKING, PORTS (ports only when
// present). Names are whitespace-free by construction; labels are quoted.
std::string to_native(const petri::Net& net,
                      const std::vector<blueprints::Port>& ports = {});
NetDocument from_native(const std::string& text);

// Standard PT-net PNML. Read arcs are lowered to a consume+produce pair,
// both tagged with a toolspecific annotation; counter bounds ride the same
// channel. from_pnml understands exactly this dialect and restores both.
std::string to_pnml(const petri::Net& net);
petri::Net from_pnml(const std::string& text);

// Graphviz: places as circles (token dot when marked), transitions as boxes,
// read arcs dashed with a round tail.
std::string to_dot(const petri::Net& net);

// One row per cycle, exact integer fields, weight bits as 8-digit hex; the
// trailing column is the running average of L/(1+H).
std::string metrics_csv(const blueprints::NetworkSpec& spec,
                        const std::vector<refbnn::StepMetrics>& series);
// JSON mirror of the same series.
std::string metrics_json(const blueprints::NetworkSpec& spec,
                         const std::vector<refbnn::StepMetrics>& series);

}  // namespace io
