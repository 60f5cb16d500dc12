#include "doctest.h"

#include <stdexcept>

#include "petri/net.hpp"

using namespace petri;

namespace {

// p0 --> t0 --> p1, with p0 initially marked
Net chain_net() {
  Net n;
  PlaceId p0 = n.add_place("p0");
  PlaceId p1 = n.add_place("p1");
  TransitionId t0 = n.add_transition("t0");
  n.add_input_arc(p0, t0);
  n.add_output_arc(t0, p1);
  n.mark_initial(p0);
  n.finalize();
  return n;
}

}  // namespace

TEST_SUITE("petri") {

TEST_CASE("construction and lookup") {
  Net n;
  PlaceId a = n.add_place("a", "first");
  PlaceId c = n.add_place("c", "", PlaceKind::Counter, 5);
  TransitionId t = n.add_transition("t", "only");
  n.add_input_arc(a, t);
  n.add_output_arc(t, c);
  n.finalize();

  CHECK(n.num_places() == 2);
  CHECK(n.num_transitions() == 1);
  CHECK(n.num_arcs() == 2);
  CHECK(n.place(a).label == "first");
  CHECK(n.place(c).kind == PlaceKind::Counter);
  CHECK(n.place(c).bound == 5);
  CHECK(n.counter_slot(c) == 0);
  CHECK(n.counter_slot(a) == kNoIndex);
  CHECK(n.num_counter_slots() == 1);

  CHECK(n.find_place("a") == a);
  CHECK_FALSE(n.find_place("zz").has_value());
  CHECK(n.place_checked("c") == c);
  CHECK_THROWS_AS(n.place_checked("zz"), std::out_of_range);
  CHECK_THROWS_AS(n.transition_checked("zz"), std::out_of_range);
}

TEST_CASE("naming and bounds are validated") {
  Net n;
  n.add_place("a");
  CHECK_THROWS_AS(n.add_place("a"), std::invalid_argument);
  CHECK_THROWS_AS(n.add_place("b", "", PlaceKind::Standard, 2), std::invalid_argument);
  CHECK_THROWS_AS(n.add_place("b", "", PlaceKind::Counter, 0), std::invalid_argument);
  n.add_transition("t");
  CHECK_THROWS_AS(n.add_transition("t"), std::invalid_argument);
}

TEST_CASE("finalize freezes the structure") {
  Net n = chain_net();
  CHECK(n.finalized());
  CHECK_THROWS_AS(n.add_place("late"), std::logic_error);
  CHECK_THROWS_AS(n.add_transition("late"), std::logic_error);
}

TEST_CASE("marking bit and count operations") {
  Net n;
  PlaceId a = n.add_place("a");
  PlaceId b = n.add_place("b");
  PlaceId c = n.add_place("c", "", PlaceKind::Counter, 7);
  n.add_transition("t");
  n.mark_initial(a);
  n.mark_initial(c, 3);
  n.finalize();

  Marking m = n.initial_marking();
  CHECK(m.bit(a));
  CHECK_FALSE(m.bit(b));
  CHECK(m.count(n.counter_slot(c)) == 3);

  Marking copy = m;
  CHECK(copy == m);
  CHECK(copy.hash() == m.hash());
  copy.set_bit(b);
  CHECK_FALSE(copy == m);
  copy.clear_bit(b);
  CHECK(copy == m);
  copy.set_count(n.counter_slot(c), 4);
  CHECK_FALSE(copy == m);
}

TEST_CASE("initial marking validation") {
  Net n;
  PlaceId a = n.add_place("a");
  PlaceId c = n.add_place("c", "", PlaceKind::Counter, 2);
  CHECK_THROWS_AS(n.mark_initial(a, 2), std::invalid_argument);
  CHECK_THROWS_AS(n.mark_initial(c, 3), std::invalid_argument);
  n.mark_initial(c, 2);
  n.add_transition("t");
  n.finalize();
  CHECK(n.initial_marking().count(n.counter_slot(c)) == 2);
}

TEST_CASE("firing moves a token along a chain") {
  Net n = chain_net();
  PlaceId p0 = n.place_checked("p0"), p1 = n.place_checked("p1");
  TransitionId t0 = n.transition_checked("t0");

  Marking m = n.initial_marking();
  CHECK(enabled(n, m, t0));
  auto v = fire_in_place(n, m, t0);
  CHECK_FALSE(v.has_value());
  CHECK_FALSE(m.bit(p0));
  CHECK(m.bit(p1));
  CHECK_FALSE(enabled(n, m, t0));
  CHECK_THROWS_AS(fire_in_place(n, m, t0), std::logic_error);
}

TEST_CASE("value-returning fire leaves the input marking intact") {
  Net n = chain_net();
  Marking m = n.initial_marking();
  auto out = fire(n, m, n.transition_checked("t0"));
  REQUIRE(std::holds_alternative<Marking>(out));
  CHECK(m == n.initial_marking());
  CHECK(std::get<Marking>(out).bit(n.place_checked("p1")));
}

TEST_CASE("read arcs test without consuming") {
  Net n;
  PlaceId guard = n.add_place("guard");
  PlaceId in = n.add_place("in");
  PlaceId out = n.add_place("out");
  TransitionId t = n.add_transition("t");
  n.add_input_arc(guard, t, ArcKind::Read);
  n.add_input_arc(in, t);
  n.add_output_arc(t, out);
  n.mark_initial(in);
  n.finalize();

  Marking m = n.initial_marking();
  CHECK_FALSE(enabled(n, m, t));  // read place empty
  m.set_bit(guard);
  CHECK(enabled(n, m, t));
  REQUIRE_FALSE(fire_in_place(n, m, t).has_value());
  CHECK(m.bit(guard));  // still there
  CHECK(m.bit(out));
  CHECK_FALSE(m.bit(in));
}

TEST_CASE("read arcs must run from place to transition") {
  Net n;
  PlaceId p = n.add_place("p");
  TransitionId t = n.add_transition("t");
  CHECK_THROWS_AS(n.add_arc(NodeRef::transition(t), NodeRef::place(p), ArcKind::Read),
                  std::invalid_argument);
  CHECK_THROWS_AS(n.add_arc(NodeRef::place(p), NodeRef::place(p)), std::invalid_argument);
}

TEST_CASE("overproduction on a standard place is a detectable violation") {
  Net n;
  PlaceId src = n.add_place("src");
  PlaceId full = n.add_place("full");
  TransitionId t = n.add_transition("t");
  n.add_input_arc(src, t);
  n.add_output_arc(t, full);
  n.mark_initial(src);
  n.mark_initial(full);
  n.finalize();

  Marking m = n.initial_marking();
  auto v = fire_in_place(n, m, t);
  REQUIRE(v.has_value());
  CHECK(v->place == full);
  CHECK(v->transition == t);
}

TEST_CASE("self-loop keeps its token") {
  Net n;
  PlaceId p = n.add_place("p");
  PlaceId out = n.add_place("out");
  TransitionId t = n.add_transition("t");
  n.add_input_arc(p, t);
  n.add_output_arc(t, p);
  n.add_output_arc(t, out);
  n.mark_initial(p);
  n.finalize();

  Marking m = n.initial_marking();
  REQUIRE_FALSE(fire_in_place(n, m, t).has_value());
  CHECK(m.bit(p));
  CHECK(m.bit(out));
}

TEST_CASE("counter places count down and overflow at their bound") {
  Net n;
  PlaceId pool = n.add_place("pool", "", PlaceKind::Counter, 2);
  PlaceId fuel = n.add_place("fuel");
  TransitionId spend = n.add_transition("spend");
  TransitionId refill = n.add_transition("refill");
  n.add_input_arc(pool, spend);
  n.add_input_arc(fuel, refill);
  n.add_output_arc(refill, pool);
  n.mark_initial(pool, 2);
  n.mark_initial(fuel);
  n.finalize();

  Marking m = n.initial_marking();
  std::uint32_t slot = n.counter_slot(pool);
  REQUIRE_FALSE(fire_in_place(n, m, spend).has_value());
  CHECK(m.count(slot) == 1);
  REQUIRE_FALSE(fire_in_place(n, m, spend).has_value());
  CHECK(m.count(slot) == 0);
  CHECK_FALSE(enabled(n, m, spend));

  // refilling at the bound overflows
  Marking full = n.initial_marking();
  auto v = fire_in_place(n, full, refill);
  REQUIRE(v.has_value());
  CHECK(v->place == pool);

  // below the bound it works
  REQUIRE_FALSE(fire_in_place(n, m, refill).has_value());
  CHECK(m.count(slot) == 1);
}

TEST_CASE("token helpers respect place kinds") {
  Net n;
  PlaceId a = n.add_place("a");
  PlaceId c = n.add_place("c", "", PlaceKind::Counter, 2);
  n.add_transition("t");
  n.finalize();

  Marking m = n.empty_marking();
  CHECK_FALSE(n.has_token(m, a));
  CHECK(n.add_token(m, a));
  CHECK(n.has_token(m, a));
  CHECK_FALSE(n.add_token(m, a));  // already full
  n.remove_token(m, a);
  CHECK_FALSE(n.has_token(m, a));

  CHECK(n.add_token(m, c));
  CHECK(n.add_token(m, c));
  CHECK_FALSE(n.add_token(m, c));  // bound 2
  CHECK(m.count(n.counter_slot(c)) == 2);
}

TEST_CASE("incidence counts produced minus consumed, read arcs zero") {
  Net n;
  PlaceId a = n.add_place("a");
  PlaceId b = n.add_place("b");
  PlaceId g = n.add_place("g");
  TransitionId t = n.add_transition("t");
  n.add_input_arc(a, t);
  n.add_input_arc(g, t, ArcKind::Read);
  n.add_output_arc(t, b);
  n.finalize();

  auto c = incidence(n);  // row-major by place
  CHECK(c[a] == -1);
  CHECK(c[b] == 1);
  CHECK(c[g] == 0);
}

TEST_CASE("preset postset readset") {
  Net n;
  PlaceId a = n.add_place("a");
  PlaceId b = n.add_place("b");
  PlaceId g = n.add_place("g");
  TransitionId t = n.add_transition("t");
  n.add_input_arc(a, t);
  n.add_input_arc(g, t, ArcKind::Read);
  n.add_output_arc(t, b);
  n.finalize();

  auto pre = preset(n, NodeRef::transition(t));
  auto post = postset(n, NodeRef::transition(t));
  auto reads = readset(n, t);
  REQUIRE(pre == std::vector<NodeRef>{NodeRef::place(a)});  // read arcs are context, not preset
  CHECK(post == std::vector<NodeRef>{NodeRef::place(b)});
  CHECK(reads == std::vector<NodeRef>{NodeRef::place(g)});
  CHECK(preset(n, NodeRef::place(b)) == std::vector<NodeRef>{NodeRef::transition(t)});
}

TEST_CASE("adjacency is compiled per transition") {
  Net n = chain_net();
  TransitionId t0 = n.transition_checked("t0");
  CHECK(n.consumed(t0) == std::vector<PlaceId>{n.place_checked("p0")});
  CHECK(n.produced(t0) == std::vector<PlaceId>{n.place_checked("p1")});
  CHECK(n.read(t0).empty());
  CHECK(n.consumers_of(n.place_checked("p0")) == std::vector<TransitionId>{t0});
  CHECK(n.producers_of(n.place_checked("p1")) == std::vector<TransitionId>{t0});
}

TEST_CASE("merge fuses places by name and unions markings") {
  Net a;
  PlaceId ao = a.add_place("a.out");
  TransitionId at = a.add_transition("a.t");
  PlaceId ain = a.add_place("a.in");
  a.add_input_arc(ain, at);
  a.add_output_arc(at, ao);
  a.mark_initial(ain);

  Net b;
  PlaceId bin = b.add_place("b.in");
  TransitionId bt = b.add_transition("b.t");
  PlaceId bout = b.add_place("b.out");
  b.add_input_arc(bin, bt);
  b.add_output_arc(bt, bout);
  b.mark_initial(bout);

  Net m = merge(a, b, {{"b.in", "a.out"}});
  CHECK(m.num_places() == 3);  // b.in fused away
  CHECK(m.num_transitions() == 2);
  CHECK(m.num_arcs() == 4);
  CHECK_FALSE(m.find_place("b.in").has_value());
  // the fused place now feeds b.t
  CHECK(m.consumers_of(m.place_checked("a.out")) ==
        std::vector<TransitionId>{m.transition_checked("b.t")});
  // markings from both sides survive
  CHECK(m.initial_marking().bit(m.place_checked("a.in")));
  CHECK(m.initial_marking().bit(m.place_checked("b.out")));
  (void)ao;
  (void)bin;
}

TEST_CASE("merge rejects bad fusions") {
  Net a;
  a.add_place("x");
  a.add_place("cnt", "", PlaceKind::Counter, 3);
  a.add_transition("t");

  Net b;
  b.add_place("y");
  b.add_transition("u");

  CHECK_THROWS_AS(merge(a, b, {{"y", "missing"}}), std::invalid_argument);
  CHECK_THROWS_AS(merge(a, b, {{"y", "cnt"}}), std::invalid_argument);  // kind clash

  Net c;
  c.add_place("x");  // collides with a.x without being fused
  c.add_transition("v");
  CHECK_THROWS_AS(merge(a, c, {}), std::invalid_argument);

  Net d;
  PlaceId dy = d.add_place("y");
  d.add_transition("w");
  d.mark_initial(dy);
  Net e;
  PlaceId ex = e.add_place("x");
  e.add_transition("t");
  e.mark_initial(ex);
  CHECK_THROWS_AS(merge(d, e, {{"x", "y"}}), std::invalid_argument);  // both marked
}

TEST_CASE("assembler matches pairwise merge") {
  Net a;
  a.add_place("p");
  TransitionId t = a.add_transition("t");
  a.add_output_arc(t, a.place_checked("p"));

  Net b;
  PlaceId q = b.add_place("q");
  TransitionId u = b.add_transition("u");
  b.add_input_arc(q, u);

  Net merged = merge(a, b, {{"q", "p"}});

  NetAssembler as;
  as.append(a, {});
  as.append(b, {{"q", "p"}});
  Net stacked = as.take();

  CHECK(stacked.num_places() == merged.num_places());
  CHECK(stacked.num_transitions() == merged.num_transitions());
  CHECK(stacked.num_arcs() == merged.num_arcs());
  CHECK(stacked.place_checked("p") == merged.place_checked("p"));
}

TEST_CASE("place hashes make marking digests order-sensitive") {
  Net n;
  PlaceId a = n.add_place("a");
  PlaceId b = n.add_place("b");
  n.add_transition("t");
  n.finalize();

  Marking ma = n.empty_marking();
  ma.set_bit(a);
  Marking mb = n.empty_marking();
  mb.set_bit(b);
  CHECK(ma.hash() != mb.hash());
  CHECK(n.place_hash(a) != n.place_hash(b));
}

}  // TEST_SUITE
