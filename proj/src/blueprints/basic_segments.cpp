#include <stdexcept>

#include "blueprints/segment.hpp"

namespace blueprints {

using petri::ArcKind;
using petri::PlaceId;
using petri::PlaceKind;
using petri::TransitionId;
using util::Rational;

namespace {

std::string istr(std::size_t v) { return std::to_string(v); }

Port value_port(std::string name, bool boundary, std::vector<Rational> values,
                std::vector<std::string> places) {
  Port p;
  p.name = std::move(name);
  p.role = boundary ? PortRole::ValueIn : PortRole::ValueOut;
  p.boundary = boundary;
  p.values = std::move(values);
  p.places = std::move(places);
  return p;
}

Port control_port(std::string name, bool boundary, std::vector<std::string> places,
                  PortRole role = PortRole::Control) {
  Port p;
  p.name = std::move(name);
  p.role = role;
  p.boundary = boundary;
  p.places = std::move(places);
  return p;
}

}  // namespace

Segment gen_input_loader(const NetworkSpec& spec, bool budgeted, bool instrumented) {
  spec.validate();
  const std::size_t rows = spec.dataset.size();
  const std::size_t copies = 2 * spec.hidden;  // per feature: H products + H gradients

  Segment seg;
  seg.name = "in";
  seg.category = "infrastructure";
  petri::Net& net = seg.net;

  PlaceId data_vec = net.add_place("in.data_vec", "next data point may load");
  net.mark_initial(data_vec);
  seg.ports.push_back(control_port("data_vec", false, {"in.data_vec"}));

  std::vector<PlaceId> ring(rows);
  for (std::size_t k = 0; k < rows; ++k)
    ring[k] = net.add_place("in.ring." + istr(k));
  net.mark_initial(ring[0]);

  PlaceId y_place[2];  // -1, +1
  y_place[0] = net.add_place("in.y.-1");
  y_place[1] = net.add_place("in.y.1");
  seg.ports.push_back(value_port("y", false, {Rational(-1), Rational(1)},
                                 {"in.y.-1", "in.y.1"}));

  // per feature j and consumer copy c, a {0,1} pair
  std::vector<std::vector<PlaceId>> feat(spec.features * copies, std::vector<PlaceId>(2));
  for (std::size_t j = 0; j < spec.features; ++j)
    for (std::size_t c = 0; c < copies; ++c) {
      std::string base = "in.a" + istr(j + 1) + ".c" + istr(c + 1) + ".";
      auto& pair = feat[j * copies + c];
      pair[0] = net.add_place(base + "0");
      pair[1] = net.add_place(base + "1");
      seg.ports.push_back(value_port("a" + istr(j + 1) + ".c" + istr(c + 1), false,
                                     {Rational(0), Rational(1)},
                                     {base + "0", base + "1"}));
    }

  PlaceId budget = petri::kNoIndex;
  if (budgeted) {
    budget = net.add_place("in.budget", "", PlaceKind::Counter, 0xffffffffu);
    seg.ports.push_back(control_port("budget", true, {"in.budget"}));
  }

  std::vector<PlaceId> vec_rec;
  PlaceId ytrue_rec[2] = {petri::kNoIndex, petri::kNoIndex};
  PlaceId epoch = petri::kNoIndex;
  if (instrumented) {
    Port vp;
    vp.name = "rec.vec";
    vp.role = PortRole::ValueOut;
    for (std::size_t k = 0; k < rows; ++k) {
      std::string pn = "in.rec.vec." + istr(k);
      vec_rec.push_back(net.add_place(pn));
      vp.values.emplace_back(int(k));
      vp.places.push_back(pn);
    }
    seg.ports.push_back(std::move(vp));
    ytrue_rec[0] = net.add_place("in.rec.y.-1");
    ytrue_rec[1] = net.add_place("in.rec.y.1");
    seg.ports.push_back(value_port("rec.y", false, {Rational(-1), Rational(1)},
                                   {"in.rec.y.-1", "in.rec.y.1"}));
    epoch = net.add_place("in.epoch", "completed epochs", PlaceKind::Counter,
                          spec.epoch_budget ? *spec.epoch_budget : 0xfffffffeu);
    seg.ports.push_back(control_port("epoch", false, {"in.epoch"}));
  }

  for (std::size_t k = 0; k < rows; ++k) {
    const auto& row = spec.dataset[k];
    std::string label;
    for (int b : row.bits) label += char('0' + b);
    TransitionId t = net.add_transition("in.row" + istr(k), label);
    net.add_input_arc(data_vec, t);
    net.add_input_arc(ring[k], t);
    if (budgeted && k == 0) net.add_input_arc(budget, t);
    net.add_output_arc(t, ring[(k + 1) % rows]);
    net.add_output_arc(t, y_place[row.label > 0 ? 1 : 0]);
    for (std::size_t j = 0; j < spec.features; ++j)
      for (std::size_t c = 0; c < copies; ++c)
        net.add_output_arc(t, feat[j * copies + c][row.bits[j]]);
    if (instrumented) {
      net.add_output_arc(t, vec_rec[k]);
      net.add_output_arc(t, ytrue_rec[row.label > 0 ? 1 : 0]);
      if (k + 1 == rows) net.add_output_arc(t, epoch);
    }
  }

  net.finalize();
  return seg;
}

// Bit index b runs 0..width-1 from the sign bit down, i.e. bit b stores IEEE
// bit 31-b of `initial`. Widths below 32 keep the top bits of the word, which
// lets tests exercise a scaled register with hand-made patterns.
Segment gen_weight_register(const std::string& name, bitfloat::Fp32Bits initial,
                            const RegisterOptions& opts) {
  if (opts.width < 2 || opts.width > 32)
    throw std::invalid_argument("register width must be in [2, 32]");
  if (opts.wb_copies == 0) throw std::invalid_argument("need at least one output copy");
  if (opts.width == 32) bitfloat::validate(initial);

  Segment seg;
  seg.name = name;
  seg.category = "inference";
  petri::Net& net = seg.net;
  const std::string pre = name + ".";

  std::vector<std::array<PlaceId, 2>> bit(opts.width);
  std::vector<std::string> bit_names;
  for (std::size_t b = 0; b < opts.width; ++b) {
    std::string base = pre + "bit." + istr(b) + ".";
    bit[b][0] = net.add_place(base + "0");
    bit[b][1] = net.add_place(base + "1");
    bit_names.push_back(base + "0");
    bit_names.push_back(base + "1");
  }
  seg.ports.push_back(control_port("bits", false, bit_names));

  PlaceId r = net.add_place(pre + "r", "bits writable");
  PlaceId arb = net.add_place(pre + "arb", "binarization pending");
  seg.ports.push_back(control_port("rebinarize", false, {pre + "arb"}));

  std::vector<std::array<PlaceId, 2>> wb(opts.wb_copies);
  for (std::size_t c = 0; c < opts.wb_copies; ++c) {
    std::string base = pre + "wb.c" + istr(c + 1) + ".";
    wb[c][0] = net.add_place(base + "-1");
    wb[c][1] = net.add_place(base + "1");
    seg.ports.push_back(value_port("wb.c" + istr(c + 1), false,
                                   {Rational(-1), Rational(1)},
                                   {base + "-1", base + "1"}));
  }

  PlaceId bin_done = net.add_place(pre + "bin_done");
  seg.ports.push_back(control_port("done", false, {pre + "bin_done"}, PortRole::Done));

  PlaceId cap_go = petri::kNoIndex;
  PlaceId wb_rec[2] = {petri::kNoIndex, petri::kNoIndex};
  if (opts.instrumented) {
    cap_go = net.add_place(pre + "cap_go");
    seg.ports.push_back(control_port("capture", false, {pre + "cap_go"}, PortRole::Done));
    wb_rec[0] = net.add_place(pre + "rec.wb.-1");
    wb_rec[1] = net.add_place(pre + "rec.wb.1");
    seg.ports.push_back(value_port("rec.wb", false, {Rational(-1), Rational(1)},
                                   {pre + "rec.wb.-1", pre + "rec.wb.1"}));
  }

  // toggle buffers, writable while r holds a token
  for (std::size_t b = 0; b < opts.width; ++b) {
    TransitionId in = net.add_transition(pre + "in." + istr(b));
    net.add_input_arc(bit[b][0], in);
    net.add_input_arc(r, in, ArcKind::Read);
    net.add_output_arc(in, bit[b][1]);
    TransitionId out = net.add_transition(pre + "out." + istr(b));
    net.add_input_arc(bit[b][1], out);
    net.add_input_arc(r, out, ArcKind::Read);
    net.add_output_arc(out, bit[b][0]);
  }
  TransitionId set_weights = net.add_transition(pre + "set_weights");
  net.add_input_arc(r, set_weights);
  net.add_output_arc(set_weights, arb);

  auto binarize_outputs = [&](TransitionId t, int sign) {
    for (std::size_t c = 0; c < opts.wb_copies; ++c)
      net.add_output_arc(t, wb[c][sign > 0 ? 1 : 0]);
    net.add_output_arc(t, bin_done);
    if (opts.instrumented) {
      net.add_output_arc(t, cap_go);
      net.add_output_arc(t, wb_rec[sign > 0 ? 1 : 0]);
    }
  };

  TransitionId pve = net.add_transition(pre + "pve");
  net.add_input_arc(arb, pve);
  net.add_input_arc(bit[0][0], pve, ArcKind::Read);
  binarize_outputs(pve, +1);

  TransitionId all_0s = net.add_transition(pre + "all_0s");
  net.add_input_arc(arb, all_0s);
  net.add_input_arc(bit[0][1], all_0s, ArcKind::Read);
  for (std::size_t b = 1; b < opts.width; ++b)
    net.add_input_arc(bit[b][0], all_0s, ArcKind::Read);
  binarize_outputs(all_0s, +1);

  for (std::size_t b = 1; b < opts.width; ++b) {
    TransitionId neg = net.add_transition(pre + "neg." + istr(b));
    net.add_input_arc(arb, neg);
    net.add_input_arc(bit[0][1], neg, ArcKind::Read);
    net.add_input_arc(bit[b][1], neg, ArcKind::Read);
    binarize_outputs(neg, -1);
  }

  for (std::size_t b = 0; b < opts.width; ++b) {
    int v = int((initial.word >> (31 - b)) & 1u);
    net.mark_initial(bit[b][opts.preset ? v : 0]);
  }
  net.mark_initial(opts.preset ? arb : r);

  net.finalize();
  return seg;
}

// STE = 1 iff |W_r| <= 1, read off the register's exponent and mantissa bits:
// exponent below 127, or exactly 127 with an all-zero mantissa. One covering
// transition per observable reason keeps the set minimal.
Segment gen_ste(const std::string& name, bool instrumented) {
  Segment seg;
  seg.name = name;
  seg.category = "training";
  petri::Net& net = seg.net;
  const std::string pre = name + ".";

  PlaceId arb = net.add_place(pre + "arb");
  seg.ports.push_back(control_port("arb", true, {pre + "arb"}));

  // boundary images of register bits 1..31 (everything but the sign)
  std::vector<std::array<PlaceId, 2>> bit(32);
  std::vector<std::string> bit_names;
  for (std::size_t b = 1; b < 32; ++b) {
    std::string base = pre + "bit." + istr(b) + ".";
    bit[b][0] = net.add_place(base + "0");
    bit[b][1] = net.add_place(base + "1");
    bit_names.push_back(base + "0");
    bit_names.push_back(base + "1");
  }
  seg.ports.push_back(control_port("bits", true, bit_names));

  PlaceId out[2];
  out[0] = net.add_place(pre + "out.0");
  out[1] = net.add_place(pre + "out.1");
  seg.ports.push_back(value_port("out", false, {Rational(0), Rational(1)},
                                 {pre + "out.0", pre + "out.1"}));
  PlaceId rec[2] = {petri::kNoIndex, petri::kNoIndex};
  if (instrumented) {
    rec[0] = net.add_place(pre + "rec.0");
    rec[1] = net.add_place(pre + "rec.1");
    seg.ports.push_back(value_port("rec", false, {Rational(0), Rational(1)},
                                   {pre + "rec.0", pre + "rec.1"}));
  }

  auto emit = [&](TransitionId t, int v) {
    net.add_output_arc(t, out[v]);
    if (instrumented) net.add_output_arc(t, rec[v]);
  };

  // exponent field below 127: some bit of 29..23 (indices 2..8) is zero
  for (std::size_t b = 2; b <= 8; ++b) {
    TransitionId t = net.add_transition(pre + "low." + istr(b));
    net.add_input_arc(arb, t);
    net.add_input_arc(bit[b][0], t, ArcKind::Read);
    emit(t, 1);
  }
  // |W_r| = 1 exactly
  TransitionId one = net.add_transition(pre + "one");
  net.add_input_arc(arb, one);
  net.add_input_arc(bit[1][0], one, ArcKind::Read);
  for (std::size_t b = 2; b <= 8; ++b) net.add_input_arc(bit[b][1], one, ArcKind::Read);
  for (std::size_t b = 9; b < 32; ++b) net.add_input_arc(bit[b][0], one, ArcKind::Read);
  emit(one, 1);
  // exponent 127 with any mantissa bit set: magnitude above 1, clip to 0
  for (std::size_t b = 9; b < 32; ++b) {
    TransitionId t = net.add_transition(pre + "clip." + istr(b));
    net.add_input_arc(arb, t);
    net.add_input_arc(bit[1][0], t, ArcKind::Read);
    for (std::size_t e = 2; e <= 8; ++e) net.add_input_arc(bit[e][1], t, ArcKind::Read);
    net.add_input_arc(bit[b][1], t, ArcKind::Read);
    emit(t, 0);
  }

  net.finalize();
  return seg;
}

Segment gen_loss_fork(const std::string& name, std::size_t num_weights, bool instrumented) {
  if (num_weights == 0) throw std::invalid_argument("fork needs at least one target");

  Segment seg;
  seg.name = name;
  seg.category = "training";
  petri::Net& net = seg.net;
  const std::string pre = name + ".";
  const Rational vals[3] = {Rational(-1), Rational(0), Rational(1)};

  PlaceId in[3];
  std::vector<std::string> in_names;
  for (int v = 0; v < 3; ++v) {
    in_names.push_back(pre + "dldz." + vals[v].to_string());
    in[v] = net.add_place(in_names.back());
  }
  seg.ports.push_back(value_port("dldz", true,
                                 {vals[0], vals[1], vals[2]}, in_names));
  PlaceId go = net.add_place(pre + "go");
  seg.ports.push_back(control_port("go", true, {pre + "go"}));

  std::vector<std::array<PlaceId, 3>> out(num_weights);
  for (std::size_t k = 0; k < num_weights; ++k) {
    Port port;
    port.name = "out" + istr(k + 1);
    port.role = PortRole::ValueOut;
    for (int v = 0; v < 3; ++v) {
      std::string pn = pre + "out" + istr(k + 1) + "." + vals[v].to_string();
      out[k][v] = net.add_place(pn);
      port.values.push_back(vals[v]);
      port.places.push_back(pn);
    }
    seg.ports.push_back(std::move(port));
  }
  PlaceId rec[3];
  if (instrumented) {
    Port port;
    port.name = "rec";
    port.role = PortRole::ValueOut;
    for (int v = 0; v < 3; ++v) {
      std::string pn = pre + "rec." + vals[v].to_string();
      rec[v] = net.add_place(pn);
      port.values.push_back(vals[v]);
      port.places.push_back(pn);
    }
    seg.ports.push_back(std::move(port));
  }

  for (int v = 0; v < 3; ++v) {
    TransitionId t = net.add_transition(pre + "copy." + vals[v].to_string());
    net.add_input_arc(in[v], t);
    net.add_input_arc(go, t);
    for (std::size_t k = 0; k < num_weights; ++k) net.add_output_arc(t, out[k][v]);
    if (instrumented) net.add_output_arc(t, rec[v]);
  }

  net.finalize();
  return seg;
}

Segment gen_learning_rate(const std::vector<int>& rate_tenths) {
  if (rate_tenths.empty()) throw std::invalid_argument("no learning rates offered");

  Segment seg;
  seg.name = "lr";
  seg.category = "training";
  petri::Net& net = seg.net;

  PlaceId choice = net.add_place("lr.choice", "one-shot rate selection");
  net.mark_initial(choice);
  Port port;
  port.name = "rate";
  port.role = PortRole::ValueOut;
  for (int k : rate_tenths) {
    if (k < 1 || k > 9) throw std::invalid_argument("learning rate outside {0.1..0.9}");
    std::string pn = "lr.rate." + istr(std::size_t(k));
    PlaceId p = net.add_place(pn, "eta = 0." + istr(std::size_t(k)));
    TransitionId t = net.add_transition("lr.pick." + istr(std::size_t(k)));
    net.add_input_arc(choice, t);
    net.add_output_arc(t, p);
    port.values.push_back(Rational::tenths(k));
    port.places.push_back(pn);
  }
  seg.ports.push_back(std::move(port));

  net.finalize();
  return seg;
}

// Hinge loss in the paper's three stages plus an acknowledge stage that turns
// the loss token into the cycle-end join token and the gradient-fork trigger.
// The loss derivative is emitted by the multiplication stage.
Segment gen_hinge_loss(const std::string& name, const ValueDomain& z_domain,
                       bool instrumented) {
  HingeTables tables = table_hinge(z_domain);
  FunctionTable dloss = table_dloss(z_domain);

  Segment seg;
  seg.name = name;
  seg.category = "training";
  petri::Net& net = seg.net;
  const std::string pre = name + ".";

  auto add_group = [&](const std::string& group, const ValueDomain& dom,
                       bool boundary) {
    std::vector<PlaceId> ids;
    std::vector<std::string> names;
    for (const Rational& v : dom.values) {
      names.push_back(pre + group + "." + v.to_string());
      ids.push_back(net.add_place(names.back()));
    }
    seg.ports.push_back(value_port(group, boundary, dom.values, names));
    return ids;
  };

  ValueDomain y_dom({Rational(-1), Rational(1)});
  std::vector<PlaceId> y = add_group("y", y_dom, true);
  std::vector<PlaceId> z = add_group("z", z_domain, true);
  std::vector<PlaceId> yhat = add_group("yhat", y_dom, true);
  std::vector<PlaceId> m = add_group("m", tables.mul.output, false);
  std::vector<PlaceId> dl = add_group("dldz", dloss.output, false);
  std::vector<PlaceId> u = add_group("u", tables.sub.output, false);
  std::vector<PlaceId> loss = add_group("L", tables.clip.output, false);
  std::vector<PlaceId> rec;
  if (instrumented) rec = add_group("rec.L", tables.clip.output, false);

  PlaceId l_done = net.add_place(pre + "L_done");
  seg.ports.push_back(control_port("L_done", false, {pre + "L_done"}, PortRole::Done));
  PlaceId fork_go = net.add_place(pre + "fork_go");
  seg.ports.push_back(control_port("fork_go", false, {pre + "fork_go"}));

  // multiplication: consumes y and z plus the prediction copy, so the loss
  // stage can only run after the prediction fired
  for (std::size_t r = 0; r < tables.mul.rows.size(); ++r) {
    const auto& row = tables.mul.rows[r];
    const Rational& zv = z_domain.values[row.in[1]];
    TransitionId t = net.add_transition(pre + "mul." + istr(r));
    net.add_input_arc(y[row.in[0]], t);
    net.add_input_arc(z[row.in[1]], t);
    net.add_input_arc(yhat[zv >= Rational(0) ? 1 : 0], t);
    net.add_output_arc(t, m[row.out]);
    net.add_output_arc(t, dl[dloss.rows[r].out]);
  }
  for (std::size_t r = 0; r < tables.sub.rows.size(); ++r) {
    const auto& row = tables.sub.rows[r];
    TransitionId t = net.add_transition(pre + "sub." + istr(r));
    net.add_input_arc(m[row.in[0]], t);
    net.add_output_arc(t, u[row.out]);
  }
  for (std::size_t r = 0; r < tables.clip.rows.size(); ++r) {
    const auto& row = tables.clip.rows[r];
    TransitionId t = net.add_transition(pre + "clip." + istr(r));
    net.add_input_arc(u[row.in[0]], t);
    net.add_output_arc(t, loss[row.out]);
  }
  for (std::size_t v = 0; v < tables.clip.output.size(); ++v) {
    TransitionId t = net.add_transition(pre + "ack." + istr(v));
    net.add_input_arc(loss[v], t);
    net.add_output_arc(t, l_done);
    net.add_output_arc(t, fork_go);
    if (instrumented) net.add_output_arc(t, rec[v]);
  }

  net.finalize();
  return seg;
}

Segment gen_next_vector(const std::string& name, std::size_t num_weights,
                        std::size_t num_registers, bool instrumented) {
  if (num_weights == 0 || num_registers == 0)
    throw std::invalid_argument("join needs at least one weight");

  Segment seg;
  seg.name = name;
  seg.category = "infrastructure";
  petri::Net& net = seg.net;
  const std::string pre = name + ".";

  TransitionId t = net.add_transition(pre + "next_vector");

  for (std::size_t k = 0; k < num_weights; ++k) {
    PlaceId d = net.add_place(pre + "done." + istr(k + 1));
    seg.ports.push_back(control_port("done" + istr(k + 1), true,
                                     {pre + "done." + istr(k + 1)}, PortRole::Done));
    net.add_input_arc(d, t);
  }
  PlaceId l = net.add_place(pre + "L_done");
  seg.ports.push_back(control_port("L_done", true, {pre + "L_done"}, PortRole::Done));
  net.add_input_arc(l, t);

  if (instrumented) {
    PlaceId flush = net.add_place(pre + "flush_go");
    seg.ports.push_back(control_port("flush", false, {pre + "flush_go"}, PortRole::Done));
    net.add_output_arc(t, flush);
  } else {
    PlaceId dv = net.add_place(pre + "data_vec");
    seg.ports.push_back(control_port("data_vec", true, {pre + "data_vec"}));
    net.add_output_arc(t, dv);
    for (std::size_t k = 0; k < num_registers; ++k) {
      PlaceId arb = net.add_place(pre + "arb." + istr(k + 1));
      seg.ports.push_back(control_port("arb" + istr(k + 1), true,
                                       {pre + "arb." + istr(k + 1)}));
      net.add_output_arc(t, arb);
    }
  }

  net.finalize();
  return seg;
}

Segment gen_epoch_budget(std::uint32_t epochs) {
  if (epochs == 0) throw std::invalid_argument("epoch budget must be positive");

  Segment seg;
  seg.name = "budget";
  seg.category = "infrastructure";
  PlaceId pool = seg.net.add_place("budget.pool", "remaining epochs",
                                   PlaceKind::Counter, epochs);
  seg.net.mark_initial(pool, epochs);
  seg.ports.push_back(control_port("pool", false, {"budget.pool"}));
  seg.net.finalize();
  return seg;
}

}  // namespace blueprints
