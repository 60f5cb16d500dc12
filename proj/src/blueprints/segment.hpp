#pragma once

// Blueprint segments: small Petri net fragments with typed ports, generated
// from finite-domain function tables and composed into the full BNN model.
//
// Value encoding is one-hot: a variable over a finite rational domain becomes
// one place per value, with at most one of them marked. Where a value has
// several consumers, the producing transition emits one copy per consumer so
// that every token is consumed exactly once per data-vector cycle; read arcs
// are reserved for genuinely persistent state (weight bits, the learning
// rate, and interlock places inside the weight-update pipeline).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bitfloat/bitfloat.hpp"
#include "petri/net.hpp"
#include "util/rational.hpp"

namespace blueprints {

// Ordered set of exact rationals; the index of a value doubles as the index
// of its place within a value port.
struct ValueDomain {
  std::vector<util::Rational> values;

  ValueDomain() = default;
  explicit ValueDomain(std::vector<util::Rational> vs);

  std::size_t size() const { return values.size(); }
  std::size_t index_of(const util::Rational& v) const;  // throws if absent
  bool contains(const util::Rational& v) const;

  static ValueDomain integers(int lo, int hi);  // {lo, lo+1, .., hi}
};

enum class PortRole { ValueIn, ValueOut, Control, Done };

// A port names the places through which a segment connects to its neighbours.
// Boundary ports reference places that logically belong to another segment;
// they are excluded from this segment's size accounting and are fused away
// during composition.
struct Port {
  std::string name;
  PortRole role = PortRole::Control;
  bool boundary = false;
  std::vector<util::Rational> values;  // parallel to places; empty for control/done
  std::vector<std::string> places;
};

struct Segment {
  std::string name;
  std::string category;  // "inference", "training" or "infrastructure"
  petri::Net net;
  std::vector<Port> ports;

  const Port& port(const std::string& port_name) const;
  const Port* find_port(const std::string& port_name) const;

  // Size accounting: owned places exclude boundary-port places; transitions
  // and arcs always count in full.
  std::size_t owned_places() const;
  std::size_t owned_transitions() const { return net.num_transitions(); }
  std::size_t owned_arcs() const { return net.num_arcs(); }
};

// Total mapping from input-value combinations to an output value. Inputs are
// listed with their domains; rows cover the full cartesian product.
struct FunctionTable {
  struct Input {
    std::string name;
    ValueDomain domain;
    bool read_only = false;  // read arc instead of consuming
  };
  struct Row {
    std::vector<std::size_t> in;  // value index per input
    std::size_t out = 0;          // index into the output domain
  };

  std::vector<Input> inputs;
  ValueDomain output;
  std::vector<Row> rows;

  std::size_t row_count() const { return rows.size(); }
};

// Table builders for the arithmetic the model needs. Output domains are the
// exact images of the corresponding functions.
FunctionTable table_sign(const ValueDomain& domain);
FunctionTable table_hardtanh(const ValueDomain& domain);
FunctionTable table_product(const ValueDomain& a, const ValueDomain& b);
FunctionTable table_sum(const ValueDomain& a, const ValueDomain& b);

struct HingeTables {
  FunctionTable mul;   // y * z
  FunctionTable sub;   // 1 - (y*z)
  FunctionTable clip;  // max(0, .)
};
HingeTables table_hinge(const ValueDomain& z_domain);
FunctionTable table_dloss(const ValueDomain& z_domain);  // (y, z) -> -y if y*z < 1 else 0

enum class GradKind { InputHidden, HiddenOutput, Real };
FunctionTable table_grad(GradKind kind);
FunctionTable table_lr_product();  // (eta read-only, g) -> eta*g over 19 outputs

struct MapperOptions {
  std::size_t fanout = 1;       // copies of the output token per firing
  bool recorder = false;        // extra output into a one-hot recorder group
  std::string prefix;           // place/transition name prefix ("" = name + ".")
};

// One transition per table row; consumes (or reads) one token per input and
// produces the output token, once per fanout copy. Input places form
// boundary value-in ports named after the table inputs; outputs are owned
// ports "out" (fanout 1) or "out1".."outN".
Segment gen_function_mapper(const std::string& name, const FunctionTable& table,
                            const MapperOptions& opts = {});

// The full network specification everything else is generated from.
struct NetworkSpec {
  std::size_t features = 2;  // F
  std::size_t hidden = 2;    // H

  struct DataRow {
    std::vector<int> bits;  // length F, entries 0/1
    int label = 1;          // -1 or +1
  };
  std::vector<DataRow> dataset;

  std::vector<int> learning_rate_tenths = {6};  // subset of 1..9
  std::optional<std::uint32_t> epoch_budget;
  std::uint64_t seed = 1;
  std::vector<bitfloat::Fp32Bits> initial_weights;  // empty = derive from seed

  bool instrument = false;

  std::size_t weight_count() const { return features * hidden + hidden; }
  void validate() const;  // throws std::invalid_argument

  static NetworkSpec xor_default();
};

// Weight naming and ordering shared by the generator, the reference BNN and
// the lockstep harness: input-hidden weights w(i,j) in row-major (i*F + j),
// then hidden-output weights at offset F*H.
std::string weight_name(const NetworkSpec& spec, std::size_t index);

// Derives the initial real-valued weights from spec.seed when the spec does
// not pin them explicitly. Magnitudes stay well inside (0, 1).
std::vector<bitfloat::Fp32Bits> initial_weights(const NetworkSpec& spec);

// --- structural segment generators -----------------------------------------

Segment gen_input_loader(const NetworkSpec& spec, bool budgeted, bool instrumented);

struct RegisterOptions {
  std::size_t width = 32;        // sign bit + (width-1) value bits
  bool preset = true;            // bits preset, toggles dead, arb marked
  std::size_t wb_copies = 1;     // copies of the binary-weight output
  bool instrumented = false;     // emit W_b recorder + capture-chain trigger
};
Segment gen_weight_register(const std::string& name, bitfloat::Fp32Bits initial,
                            const RegisterOptions& opts = {});

Segment gen_ste(const std::string& name, bool instrumented);
Segment gen_loss_fork(const std::string& name, std::size_t num_weights, bool instrumented);
Segment gen_learning_rate(const std::vector<int>& rate_tenths);
Segment gen_hinge_loss(const std::string& name, const ValueDomain& z_domain,
                       bool instrumented);
Segment gen_next_vector(const std::string& name, std::size_t num_weights,
                        std::size_t num_registers, bool instrumented);
Segment gen_epoch_budget(std::uint32_t epochs);

struct WeightUpdateOptions {
  bool instrumented = false;  // gate on capture_done, run the updated-bit capture
  bool cont_interlocks = true;  // per-cell cont self-loops on the shift waves
};
Segment gen_weight_update(const std::string& name, const WeightUpdateOptions& opts = {});

// --- composition ------------------------------------------------------------

// Mapping from a one-hot place group to the value each place encodes, used
// when decoding instrument recorders and live value ports.
struct ValueGroup {
  std::vector<std::string> places;         // composed (post-fusion) names
  std::vector<util::Rational> values;      // parallel to places
};

struct RegisterBits {
  // bit_place[b][v] = composed place name of bit b holding value v (b: 31..0
  // stored as index 0..31 from the sign bit down)
  std::string place[32][2];
};

// The composed net plus everything the engine, verifier and analyzer need to
// interpret it without re-deriving names.
struct ComposedModel {
  NetworkSpec spec;
  petri::Net net;

  std::vector<std::string> weight_names;  // ordered per weight_name()

  // decode tables (instrumented runs only, except rate/register state)
  ValueGroup vector_rec;            // active data vector index
  ValueGroup ytrue_rec, ypred_rec;
  std::vector<ValueGroup> s_rec, x_rec, o_rec;   // per hidden neuron
  ValueGroup z_rec, loss_rec, dldz_rec;
  std::vector<ValueGroup> wb_rec, ste_rec, gb_rec, gr_rec, j_rec;  // per weight
  std::vector<RegisterBits> init_bits_rec, upd_bits_rec;           // per weight
  std::string epoch_counter;        // counter place name ("" when absent)

  std::map<int, std::string> rate_place;       // learning-rate tenths -> place
  std::vector<RegisterBits> register_bits;     // live weight bits, per weight

  // transition groups for the causal-sequencing check
  std::vector<std::string> t_output_sum, t_prediction, t_loss_clip;
  std::vector<std::string> t_gradients, t_update_done;
  std::string t_next_vector;

  std::vector<std::string> loader_rows;  // loader transitions in dataset order
};

ComposedModel compose_bnn(const NetworkSpec& spec);

}  // namespace blueprints
