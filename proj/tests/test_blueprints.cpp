#include "doctest.h"

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "blueprints/segment.hpp"
#include "petri/net.hpp"

using namespace blueprints;
using petri::Marking;
using petri::Net;
using petri::TransitionId;
using util::Rational;

namespace {

// Fires enabled transitions one at a time until none remain.
int drain(const Net& net, Marking& m) {
  int fired = 0;
  bool progress = true;
  while (progress) {
    progress = false;
    for (TransitionId t = 0; t < net.num_transitions(); ++t) {
      if (!enabled(net, m, t)) continue;
      REQUIRE_FALSE(fire_in_place(net, m, t).has_value());
      ++fired;
      progress = true;
      break;
    }
  }
  return fired;
}

void mark(const Net& net, Marking& m, const std::string& place) {
  REQUIRE(net.add_token(m, net.place_checked(place)));
}

bool marked(const Net& net, const Marking& m, const std::string& place) {
  return net.has_token(m, net.place_checked(place));
}

}  // namespace

TEST_SUITE("blueprints") {

TEST_CASE("value domains sort, deduplicate and index") {
  ValueDomain d({Rational(2), Rational(-1), Rational(0)});
  CHECK(d.size() == 3);
  CHECK(d.values[0] == Rational(-1));
  CHECK(d.values[2] == Rational(2));
  CHECK(d.index_of(Rational(0)) == 1);
  CHECK(d.contains(Rational(2)));
  CHECK_FALSE(d.contains(Rational(1)));
  CHECK_THROWS_AS(d.index_of(Rational(7)), std::out_of_range);
  CHECK_THROWS_AS(ValueDomain({Rational(1), Rational(1)}), std::invalid_argument);
  CHECK_THROWS_AS(ValueDomain(std::vector<Rational>{}), std::invalid_argument);

  ValueDomain ints = ValueDomain::integers(-2, 2);
  CHECK(ints.size() == 5);
  CHECK(ints.values.front() == Rational(-2));
  CHECK(ints.values.back() == Rational(2));
}

TEST_CASE("unary tables match their functions row by row") {
  ValueDomain dom = ValueDomain::integers(-2, 2);

  FunctionTable sign = table_sign(dom);
  REQUIRE(sign.rows.size() == 5);
  CHECK(sign.output.size() == 2);
  for (const auto& row : sign.rows) {
    const Rational& x = dom.values[row.in[0]];
    Rational expect = x >= Rational(0) ? Rational(1) : Rational(-1);
    CHECK(sign.output.values[row.out] == expect);
  }

  FunctionTable ht = table_hardtanh(dom);
  REQUIRE(ht.rows.size() == 5);
  CHECK(ht.output.size() == 3);
  for (const auto& row : ht.rows) {
    const Rational& x = dom.values[row.in[0]];
    Rational expect = x;
    if (x > Rational(1)) expect = Rational(1);
    if (x < Rational(-1)) expect = Rational(-1);
    CHECK(ht.output.values[row.out] == expect);
  }
}

TEST_CASE("binary tables cover the full product grid") {
  ValueDomain pm1({Rational(-1), Rational(1)});
  ValueDomain bits = ValueDomain::integers(0, 1);

  FunctionTable prod = table_product(pm1, bits);
  REQUIRE(prod.rows.size() == 4);
  for (const auto& row : prod.rows) {
    Rational expect = pm1.values[row.in[0]] * bits.values[row.in[1]];
    CHECK(prod.output.values[row.out] == expect);
  }
  CHECK(prod.output.size() == 3);  // {-1, 0, 1}

  FunctionTable sum = table_sum(prod.output, prod.output);
  REQUIRE(sum.rows.size() == 9);
  for (const auto& row : sum.rows) {
    Rational expect = prod.output.values[row.in[0]] + prod.output.values[row.in[1]];
    CHECK(sum.output.values[row.out] == expect);
  }
  CHECK(sum.output.size() == 5);  // {-2 .. 2}
}

TEST_CASE("hinge tables compose to the clipped loss") {
  ValueDomain z({Rational(-2), Rational(0), Rational(2)});
  HingeTables h = table_hinge(z);

  // images: y*z in {-2,0,2}, 1-m in {-1,1,3}, clipped loss in {0,1,3}
  CHECK(h.mul.output.size() == 3);
  CHECK(h.sub.output.size() == 3);
  CHECK(h.sub.output.values == std::vector<Rational>{Rational(-1), Rational(1), Rational(3)});
  CHECK(h.clip.output.values == std::vector<Rational>{Rational(0), Rational(1), Rational(3)});

  // chase every (y, z) pair through the three stages
  for (const auto& row : h.mul.rows) {
    Rational y = Rational(row.in[0] == 0 ? -1 : 1);
    Rational zv = z.values[row.in[1]];
    Rational m = h.mul.output.values[row.out];
    CHECK(m == y * zv);
    std::size_t u_idx = h.sub.rows[h.sub.inputs[0].domain.index_of(m)].out;
    Rational u = h.sub.output.values[u_idx];
    CHECK(u == Rational(1) - m);
    std::size_t l_idx = h.clip.rows[h.clip.inputs[0].domain.index_of(u)].out;
    Rational loss = h.clip.output.values[l_idx];
    CHECK(loss == (u > Rational(0) ? u : Rational(0)));
  }

  FunctionTable dl = table_dloss(z);
  for (const auto& row : dl.rows) {
    Rational y = Rational(row.in[0] == 0 ? -1 : 1);
    Rational zv = z.values[row.in[1]];
    Rational expect = y * zv < Rational(1) ? -y : Rational(0);
    CHECK(dl.output.values[row.out] == expect);
  }
}

TEST_CASE("gradient tables multiply their inputs") {
  for (GradKind kind : {GradKind::InputHidden, GradKind::HiddenOutput, GradKind::Real}) {
    FunctionTable t = table_grad(kind);
    for (const auto& row : t.rows) {
      Rational expect(1);
      for (std::size_t i = 0; i < row.in.size(); ++i)
        expect = expect * t.inputs[i].domain.values[row.in[i]];
      CHECK(t.output.values[row.out] == expect);
    }
  }
  CHECK(table_grad(GradKind::InputHidden).rows.size() == 12);
  CHECK(table_grad(GradKind::HiddenOutput).rows.size() == 6);
  CHECK(table_grad(GradKind::Real).rows.size() == 6);
}

TEST_CASE("learning-rate product spans all signed tenths") {
  FunctionTable t = table_lr_product();
  CHECK(t.inputs[0].read_only);
  CHECK_FALSE(t.inputs[1].read_only);
  CHECK(t.rows.size() == 27);
  CHECK(t.output.size() == 19);
  CHECK(t.output.values.front() == Rational::tenths(-9));
  CHECK(t.output.values.back() == Rational::tenths(9));
  for (const auto& row : t.rows) {
    Rational expect = t.inputs[0].domain.values[row.in[0]] * t.inputs[1].domain.values[row.in[1]];
    CHECK(t.output.values[row.out] == expect);
  }
}

TEST_CASE("function mapper sizes follow the table") {
  // sign over {-1, 0, 1}: 3 boundary inputs, 2 owned outputs, 3 rows, 6 arcs
  Segment sign = gen_function_mapper("sgn", table_sign(ValueDomain::integers(-1, 1)));
  CHECK(sign.owned_places() == 2);
  CHECK(sign.owned_transitions() == 3);
  CHECK(sign.owned_arcs() == 6);
  CHECK(sign.net.num_places() == 5);
  CHECK(sign.port("x").boundary);
  CHECK_FALSE(sign.port("out").boundary);

  // hardtanh over {-2 .. 2}: 3 owned outputs, 5 rows, 10 arcs
  Segment ht = gen_function_mapper("ht", table_hardtanh(ValueDomain::integers(-2, 2)));
  CHECK(ht.owned_places() == 3);
  CHECK(ht.owned_transitions() == 5);
  CHECK(ht.owned_arcs() == 10);
}

TEST_CASE("function mapper options") {
  FunctionTable table = table_sign(ValueDomain::integers(-1, 1));

  MapperOptions two;
  two.fanout = 2;
  Segment fan = gen_function_mapper("s", table, two);
  CHECK(fan.find_port("out") == nullptr);
  CHECK(fan.port("out1").places.size() == 2);
  CHECK(fan.port("out2").places.size() == 2);
  CHECK(fan.owned_arcs() == 9);  // 3 rows * (1 input + 2 copies)

  MapperOptions rec;
  rec.recorder = true;
  Segment r = gen_function_mapper("s", table, rec);
  CHECK(r.port("rec").places.size() == 2);
  CHECK(r.owned_arcs() == 9);  // 3 rows * (1 input + 1 out + 1 rec)

  MapperOptions pre;
  pre.prefix = "n1.";
  Segment p = gen_function_mapper("s", table, pre);
  CHECK(p.net.find_place("n1.x.0").has_value());

  MapperOptions bad;
  bad.fanout = 0;
  CHECK_THROWS_AS(gen_function_mapper("s", table, bad), std::invalid_argument);
}

TEST_CASE("function mapper routes a token to the mapped value") {
  Segment sgn = gen_function_mapper("sgn", table_sign(ValueDomain::integers(-1, 1)));
  Marking m = sgn.net.initial_marking();
  mark(sgn.net, m, "sgn.x.0");
  CHECK(drain(sgn.net, m) == 1);
  CHECK(marked(sgn.net, m, "sgn.out.1"));
  CHECK_FALSE(marked(sgn.net, m, "sgn.out.-1"));

  // read-only inputs keep their token across the firing
  Segment lr = gen_function_mapper("lp", table_lr_product());
  Marking lm = lr.net.initial_marking();
  mark(lr.net, lm, "lp.eta.0.6");
  mark(lr.net, lm, "lp.g.-1");
  CHECK(drain(lr.net, lm) == 1);
  CHECK(marked(lr.net, lm, "lp.out.-0.6"));
  CHECK(marked(lr.net, lm, "lp.eta.0.6"));
  CHECK_FALSE(marked(lr.net, lm, "lp.g.-1"));
}

TEST_CASE("network spec validation") {
  NetworkSpec spec = NetworkSpec::xor_default();
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.weight_count() == 6);

  NetworkSpec bad = spec;
  bad.dataset[0].label = 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = spec;
  bad.dataset[1].bits = {0, 1, 1};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = spec;
  bad.learning_rate_tenths = {0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = spec;
  bad.initial_weights.assign(3, bitfloat::Fp32Bits{0x3f000000});
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = spec;
  bad.dataset.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("weight naming and initial weights") {
  NetworkSpec spec = NetworkSpec::xor_default();
  CHECK(weight_name(spec, 0) == "w_ih_1_1");
  CHECK(weight_name(spec, 1) == "w_ih_1_2");
  CHECK(weight_name(spec, 2) == "w_ih_2_1");
  CHECK(weight_name(spec, 3) == "w_ih_2_2");
  CHECK(weight_name(spec, 4) == "w_ho_1");
  CHECK(weight_name(spec, 5) == "w_ho_2");
  CHECK_THROWS_AS(weight_name(spec, 6), std::out_of_range);

  auto w1 = initial_weights(spec);
  auto w2 = initial_weights(spec);
  REQUIRE(w1.size() == 6);
  CHECK(w1.size() == w2.size());
  for (std::size_t i = 0; i < w1.size(); ++i) {
    CHECK(w1[i].word == w2[i].word);
    CHECK_NOTHROW(bitfloat::validate(w1[i]));
    CHECK_FALSE(bitfloat::is_zero(w1[i]));
    CHECK(bitfloat::decode(w1[i]).abs() < Rational(1));
  }

  NetworkSpec other = spec;
  other.seed = 2;
  auto w3 = initial_weights(other);
  bool any_differ = false;
  for (std::size_t i = 0; i < w1.size(); ++i) any_differ = any_differ || w1[i].word != w3[i].word;
  CHECK(any_differ);

  // pinned weights pass through untouched
  other.initial_weights.assign(6, bitfloat::Fp32Bits{0x3f000000});
  auto w4 = initial_weights(other);
  for (const auto& w : w4) CHECK(w.word == 0x3f000000u);
}

TEST_CASE("input loader cycles through the dataset") {
  NetworkSpec spec = NetworkSpec::xor_default();
  Segment plain = gen_input_loader(spec, false, false);
  // data_vec + 4 ring + 2 y + F(2) * copies(4) * 2 feature pairs
  CHECK(plain.net.num_places() == 23);
  CHECK(plain.net.num_transitions() == 4);
  CHECK(plain.net.num_arcs() == 48);

  const Net& net = plain.net;
  Marking m = net.initial_marking();
  CHECK(marked(net, m, "in.data_vec"));
  CHECK(marked(net, m, "in.ring.0"));

  // only the active ring row may fire
  TransitionId row0 = net.transition_checked("in.row0");
  TransitionId row1 = net.transition_checked("in.row1");
  CHECK(enabled(net, m, row0));
  CHECK_FALSE(enabled(net, m, row1));
  REQUIRE_FALSE(fire_in_place(net, m, row0).has_value());

  // row 0 is (0,0) with label -1: every consumer copy sees a 0 bit
  CHECK(marked(net, m, "in.y.-1"));
  CHECK(marked(net, m, "in.a1.c1.0"));
  CHECK(marked(net, m, "in.a2.c4.0"));
  CHECK_FALSE(marked(net, m, "in.a1.c1.1"));
  CHECK(marked(net, m, "in.ring.1"));
  CHECK_FALSE(marked(net, m, "in.data_vec"));
  CHECK_FALSE(enabled(net, m, row1));  // waits for the returned data_vec token
}

TEST_CASE("input loader budget and instrument variants") {
  NetworkSpec spec = NetworkSpec::xor_default();
  spec.epoch_budget = 7;

  Segment budgeted = gen_input_loader(spec, true, false);
  CHECK(budgeted.net.num_places() == 24);
  CHECK(budgeted.net.num_arcs() == 49);  // row 0 consumes the epoch budget
  CHECK(budgeted.port("budget").boundary);

  Segment inst = gen_input_loader(spec, true, true);
  // adds 4 vector recorders, 2 label recorders and the epoch counter
  CHECK(inst.net.num_places() == 31);
  CHECK(inst.net.num_arcs() == 58);
  petri::PlaceId epoch = inst.net.place_checked("in.epoch");
  CHECK(inst.net.place(epoch).kind == petri::PlaceKind::Counter);
  CHECK(inst.net.place(epoch).bound == 7);

  // the epoch counter ticks on the last dataset row only
  const Net& net = inst.net;
  auto slot = net.counter_slot(epoch);
  Marking m = net.initial_marking();
  petri::PlaceId budget_pool = net.place_checked("in.budget");
  net.add_token(m, budget_pool);  // the budget segment feeds this when composed
  // consumers and the recorder flush empty these between rows when composed
  auto clear = [&](const std::string& name) {
    petri::PlaceId p = net.place_checked(name);
    if (net.has_token(m, p)) net.remove_token(m, p);
  };
  for (int k = 0; k < 4; ++k) {
    TransitionId row = net.transition_checked("in.row" + std::to_string(k));
    REQUIRE(enabled(net, m, row));
    REQUIRE_FALSE(fire_in_place(net, m, row).has_value());
    CHECK(m.count(slot) == (k == 3 ? 1u : 0u));
    for (int j = 1; j <= 2; ++j)
      for (int c = 1; c <= 4; ++c)
        for (int b = 0; b <= 1; ++b)
          clear("in.a" + std::to_string(j) + ".c" + std::to_string(c) + "." +
                std::to_string(b));
    for (const char* p : {"in.y.-1", "in.y.1", "in.rec.y.-1", "in.rec.y.1"}) clear(p);
    clear("in.rec.vec." + std::to_string(k));
    mark(net, m, "in.data_vec");  // hand the loan back manually
  }
  CHECK(m.count(net.counter_slot(budget_pool)) == 0);  // row 0 spent the loan
}

TEST_CASE("weight register toggles bits and binarizes the sign") {
  RegisterOptions opts;
  opts.width = 4;
  opts.preset = false;
  Segment reg = gen_weight_register("r1", bitfloat::Fp32Bits{0}, opts);
  // 8 bit places + r + arb + 2 wb + bin_done
  CHECK(reg.net.num_places() == 13);
  // 8 toggles + set_weights + pve + all_0s + 3 neg
  CHECK(reg.net.num_transitions() == 14);

  const Net& net = reg.net;
  Marking m = net.initial_marking();
  CHECK(marked(net, m, "r1.r"));
  for (int b = 0; b < 4; ++b) CHECK(marked(net, m, "r1.bit." + std::to_string(b) + ".0"));

  // write the pattern 1010: sign set, one value bit set
  REQUIRE_FALSE(fire_in_place(net, m, net.transition_checked("r1.in.0")).has_value());
  REQUIRE_FALSE(fire_in_place(net, m, net.transition_checked("r1.in.2")).has_value());
  CHECK(marked(net, m, "r1.bit.0.1"));
  CHECK(marked(net, m, "r1.bit.2.1"));

  // handing off to the arbiter freezes the toggles
  REQUIRE_FALSE(fire_in_place(net, m, net.transition_checked("r1.set_weights")).has_value());
  CHECK_FALSE(enabled(net, m, net.transition_checked("r1.in.1")));
  CHECK_FALSE(enabled(net, m, net.transition_checked("r1.out.0")));

  // sign bit 1 with value bit 2 set: binarize to -1
  CHECK_FALSE(enabled(net, m, net.transition_checked("r1.pve")));
  CHECK_FALSE(enabled(net, m, net.transition_checked("r1.all_0s")));
  CHECK(enabled(net, m, net.transition_checked("r1.neg.2")));
  REQUIRE_FALSE(fire_in_place(net, m, net.transition_checked("r1.neg.2")).has_value());
  CHECK(marked(net, m, "r1.wb.c1.-1"));
  CHECK(marked(net, m, "r1.bin_done"));
  // the read arcs left the register contents alone
  CHECK(marked(net, m, "r1.bit.0.1"));
  CHECK(marked(net, m, "r1.bit.2.1"));
}

TEST_CASE("weight register preset marks the stored pattern") {
  RegisterOptions opts;
  opts.wb_copies = 2;
  Segment reg = gen_weight_register("r2", bitfloat::Fp32Bits{0x3f000000}, opts);
  const Net& net = reg.net;
  Marking m = net.initial_marking();

  // 0x3f000000: word bits 29..24 set (register bits 2..7), everything else clear
  CHECK(marked(net, m, "r2.bit.0.0"));
  CHECK(marked(net, m, "r2.bit.1.0"));
  for (int b = 2; b <= 7; ++b) CHECK(marked(net, m, "r2.bit." + std::to_string(b) + ".1"));
  CHECK(marked(net, m, "r2.bit.8.0"));
  CHECK(marked(net, m, "r2.arb"));

  // positive sign: binarize to +1 into both copies
  CHECK(enabled(net, m, net.transition_checked("r2.pve")));
  REQUIRE_FALSE(fire_in_place(net, m, net.transition_checked("r2.pve")).has_value());
  CHECK(marked(net, m, "r2.wb.c1.1"));
  CHECK(marked(net, m, "r2.wb.c2.1"));

  // invalid stored patterns are rejected at full width
  CHECK_THROWS_AS(gen_weight_register("bad", bitfloat::Fp32Bits{0x40000000}, RegisterOptions{}),
                  std::invalid_argument);
}

TEST_CASE("straight-through estimator reads the register magnitude") {
  Segment ste = gen_ste("ste", false);
  CHECK(ste.net.num_transitions() == 31);  // 7 low + 1 one + 23 clip
  CHECK(ste.owned_places() == 2);

  const Net& net = ste.net;
  auto drive = [&](std::uint32_t word) {
    Marking m = net.initial_marking();
    mark(net, m, "ste.arb");
    for (int b = 1; b < 32; ++b) {
      int bit = int((word >> (31 - b)) & 1u);
      mark(net, m, "ste.bit." + std::to_string(b) + "." + std::to_string(bit));
    }
    CHECK(drain(net, m) == 1);
    return marked(net, m, "ste.out.1");
  };

  CHECK(drive(0x3f000000));  // |w| = 0.5: inside the clip window
  CHECK(drive(0x3f800000));  // |w| = 1 exactly: still inside
  CHECK(drive(0x00000000));  // zero: inside
  CHECK_FALSE(drive(0x3fc00000));  // |w| = 1.5: clipped
  CHECK_FALSE(drive(0x3f800001));  // barely above 1: clipped
}

TEST_CASE("loss fork copies the derivative to every weight") {
  Segment fork = gen_loss_fork("fk", 3, false);
  const Net& net = fork.net;
  Marking m = net.initial_marking();
  mark(net, m, "fk.dldz.-1");
  mark(net, m, "fk.go");
  CHECK(drain(net, m) == 1);
  for (int k = 1; k <= 3; ++k)
    CHECK(marked(net, m, "fk.out" + std::to_string(k) + ".-1"));
  CHECK_THROWS_AS(gen_loss_fork("fk", 0, false), std::invalid_argument);
}

TEST_CASE("learning rate picks one rate at startup") {
  Segment lr = gen_learning_rate({2, 6});
  const Net& net = lr.net;
  Marking m = net.initial_marking();
  CHECK(marked(net, m, "lr.choice"));
  REQUIRE_FALSE(fire_in_place(net, m, net.transition_checked("lr.pick.6")).has_value());
  CHECK(marked(net, m, "lr.rate.6"));
  // the choice token is spent: no second pick
  CHECK_FALSE(enabled(net, m, net.transition_checked("lr.pick.2")));
  CHECK_THROWS_AS(gen_learning_rate({}), std::invalid_argument);
  CHECK_THROWS_AS(gen_learning_rate({10}), std::invalid_argument);
}

TEST_CASE("hinge loss stages run to the acknowledge join") {
  ValueDomain z({Rational(-2), Rational(0), Rational(2)});
  Segment hinge = gen_hinge_loss("h", z, true);
  const Net& net = hinge.net;

  Marking m = net.initial_marking();
  mark(net, m, "h.y.1");
  mark(net, m, "h.z.-2");
  mark(net, m, "h.yhat.-1");  // prediction sign of z = -2
  CHECK(drain(net, m) == 4);  // mul, sub, clip, ack

  CHECK(marked(net, m, "h.L_done"));
  CHECK(marked(net, m, "h.fork_go"));
  CHECK(marked(net, m, "h.dldz.-1"));   // y*z < 1, so -y
  CHECK(marked(net, m, "h.rec.L.3"));   // L = max(0, 1 - (-2)) = 3
  CHECK_FALSE(marked(net, m, "h.y.1"));

  // a correct confident prediction yields zero loss and zero derivative
  Marking ok = net.initial_marking();
  mark(net, ok, "h.y.1");
  mark(net, ok, "h.z.2");
  mark(net, ok, "h.yhat.1");
  drain(net, ok);
  CHECK(marked(net, ok, "h.rec.L.0"));
  CHECK(marked(net, ok, "h.dldz.0"));
}

TEST_CASE("next-vector join waits for every done token") {
  Segment nv = gen_next_vector("nv", 2, 2, false);
  const Net& net = nv.net;
  TransitionId t = net.transition_checked("nv.next_vector");

  Marking m = net.initial_marking();
  mark(net, m, "nv.done.1");
  mark(net, m, "nv.L_done");
  CHECK_FALSE(enabled(net, m, t));
  mark(net, m, "nv.done.2");
  REQUIRE(enabled(net, m, t));
  REQUIRE_FALSE(fire_in_place(net, m, t).has_value());
  CHECK(marked(net, m, "nv.data_vec"));
  CHECK(marked(net, m, "nv.arb.1"));
  CHECK(marked(net, m, "nv.arb.2"));

  // the instrumented variant hands off to the metric flush instead
  Segment flush = gen_next_vector("nv", 1, 1, true);
  CHECK(flush.net.find_place("nv.flush_go").has_value());
  CHECK_FALSE(flush.net.find_place("nv.data_vec").has_value());
}

TEST_CASE("epoch budget is a drainable counter") {
  Segment budget = gen_epoch_budget(3);
  const Net& net = budget.net;
  petri::PlaceId pool = net.place_checked("budget.pool");
  CHECK(net.place(pool).kind == petri::PlaceKind::Counter);
  CHECK(net.place(pool).bound == 3);
  CHECK(net.initial_marking().count(net.counter_slot(pool)) == 3);
  CHECK_THROWS_AS(gen_epoch_budget(0), std::invalid_argument);
}

TEST_CASE("composed model wires every section") {
  NetworkSpec spec = NetworkSpec::xor_default();
  ComposedModel model = compose_bnn(spec);

  CHECK(model.net.num_places() == 8057);
  CHECK(model.net.num_transitions() == 12899);
  CHECK(model.net.num_arcs() == 64585);

  REQUIRE(model.weight_names.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(model.weight_names[i] == weight_name(spec, i));

  CHECK(model.loader_rows.size() == 4);
  CHECK(model.t_next_vector == "nv.next_vector");
  CHECK(model.net.find_transition(model.t_next_vector).has_value());
  for (const std::string& t : model.loader_rows)
    CHECK(model.net.find_transition(t).has_value());

  REQUIRE(model.register_bits.size() == 6);
  auto weights = initial_weights(spec);
  Marking m0 = model.net.initial_marking();
  for (std::size_t w = 0; w < 6; ++w) {
    for (int b = 0; b < 32; ++b) {
      int bit = int((weights[w].word >> (31 - b)) & 1u);
      const std::string& place = model.register_bits[w].place[b][bit];
      CHECK(model.net.has_token(m0, model.net.place_checked(place)));
    }
  }

  REQUIRE(model.rate_place.count(6) == 1);
  CHECK(model.net.find_place(model.rate_place.at(6)).has_value());

  // plain model: no instrument places, no epoch counter
  CHECK(model.epoch_counter.empty());

  CHECK(model.t_output_sum.size() > 0);
  CHECK(model.t_prediction.size() > 0);
  CHECK(model.t_loss_clip.size() > 0);
  CHECK(model.t_gradients.size() > 0);
  // every completion route of every weight's done place, 7 routes x 6 weights
  CHECK(model.t_update_done.size() == 42);
}

TEST_CASE("instrumented budgeted model adds recorders and counters") {
  NetworkSpec spec = NetworkSpec::xor_default();
  spec.instrument = true;
  spec.epoch_budget = 100;
  ComposedModel model = compose_bnn(spec);

  CHECK(model.net.num_places() == 9853);
  CHECK(model.net.num_transitions() == 14645);
  CHECK(model.net.num_arcs() == 71599);

  CHECK(model.epoch_counter == "in.epoch");
  petri::PlaceId pool = model.net.place_checked("budget.pool");
  CHECK(model.net.place(pool).bound == 100);
  CHECK(model.net.initial_marking().count(model.net.counter_slot(pool)) == 100);

  CHECK(model.vector_rec.places.size() == 4);
  CHECK(model.ytrue_rec.places.size() == 2);
  CHECK(model.ypred_rec.places.size() == 2);
  REQUIRE(model.s_rec.size() == 2);
  CHECK(model.s_rec[0].places.size() == 5);   // sums of two {-1,0,1} products
  CHECK(model.x_rec[0].places.size() == 2);   // sign image of the hardtanh
  CHECK(model.o_rec[0].places.size() == 2);   // x times the output weight, {-1, 1}
  CHECK(model.z_rec.places.size() == 3);      // {-2, 0, 2}
  CHECK(model.loss_rec.places.size() == 3);   // {0, 1, 3}
  CHECK(model.dldz_rec.places.size() == 3);
  REQUIRE(model.j_rec.size() == 6);
  CHECK(model.j_rec[0].places.size() == 19);  // signed tenths grid
  REQUIRE(model.init_bits_rec.size() == 6);
  REQUIRE(model.upd_bits_rec.size() == 6);

  for (const auto& group : {model.z_rec, model.loss_rec, model.dldz_rec})
    for (const std::string& p : group.places)
      CHECK(model.net.find_place(p).has_value());
}

}  // TEST_SUITE
