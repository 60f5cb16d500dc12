#include "verify/envs.hpp"

#include <map>
#include <stdexcept>

namespace verify {

using blueprints::FunctionTable;
using blueprints::NetworkSpec;
using blueprints::Segment;
using blueprints::ValueDomain;
using petri::PlaceId;
using petri::TransitionId;
using util::Rational;

namespace {

std::string istr(std::size_t v) { return std::to_string(v); }

// Appends the segment first, then an env net whose placeholder places fuse
// onto the segment's boundary and output places.
class EnvBuilder {
 public:
  explicit EnvBuilder(const Segment& seg) : seg_(seg) { as_.append(seg.net, {}); }

  PlaceId external(const std::string& segment_place) {
    auto it = ext_.find(segment_place);
    if (it != ext_.end()) return it->second;
    // the placeholder must agree in kind with the place it fuses onto
    const petri::PlaceRecord& target =
        seg_.net.place(seg_.net.place_checked(segment_place));
    PlaceId p = env_.add_place("env.x" + istr(ext_.size()), "", target.kind,
                               target.bound);
    fuse_[env_.place(p).name] = segment_place;
    ext_.emplace(segment_place, p);
    return p;
  }

  PlaceId place(const std::string& name, bool marked = false) {
    PlaceId p = env_.add_place("env." + name);
    if (marked) env_.mark_initial(p);
    return p;
  }

  TransitionId transition(const std::string& name) {
    return env_.add_transition("env." + name);
  }

  void consume(PlaceId p, TransitionId t) { env_.add_input_arc(p, t); }
  void read(PlaceId p, TransitionId t) {
    env_.add_input_arc(p, t, petri::ArcKind::Read);
  }
  void produce(TransitionId t, PlaceId p) { env_.add_output_arc(t, p); }

  petri::Net finish() {
    env_.finalize();
    as_.append(env_, fuse_);
    return as_.take();
  }

 private:
  const Segment& seg_;
  petri::NetAssembler as_;
  petri::Net env_;
  std::map<std::string, std::string> fuse_;
  std::map<std::string, PlaceId> ext_;
};

}  // namespace

ClosedEnv closed_mapper_env(const std::string& name, const FunctionTable& table) {
  Segment seg = blueprints::gen_function_mapper(name, table);
  EnvBuilder env(seg);

  std::vector<PlaceId> armed;
  for (const auto& in : table.inputs) {
    const blueprints::Port& port = seg.port(in.name);
    if (in.read_only) {
      // one persistent choice: the token stays and is only ever read
      PlaceId once = env.place("once." + in.name, true);
      for (std::size_t v = 0; v < port.places.size(); ++v) {
        TransitionId t = env.transition("set." + in.name + "." + istr(v));
        env.consume(once, t);
        env.produce(t, env.external(port.places[v]));
      }
      continue;
    }
    PlaceId a = env.place("armed." + in.name, true);
    armed.push_back(a);
    for (std::size_t v = 0; v < port.places.size(); ++v) {
      TransitionId t = env.transition("pick." + in.name + "." + istr(v));
      env.consume(a, t);
      env.produce(t, env.external(port.places[v]));
    }
  }
  const blueprints::Port& out = seg.port("out");
  for (std::size_t v = 0; v < out.places.size(); ++v) {
    TransitionId t = env.transition("sink." + istr(v));
    env.consume(env.external(out.places[v]), t);
    for (PlaceId a : armed) env.produce(t, a);
  }

  ClosedEnv closed;
  closed.name = name;
  closed.net = env.finish();
  return closed;
}

ClosedEnv closed_loader_env(const NetworkSpec& spec) {
  Segment seg = blueprints::gen_input_loader(spec, false, false);
  EnvBuilder env(seg);

  std::vector<PlaceId> got;
  auto drain = [&](const blueprints::Port& port, const std::string& tag) {
    PlaceId g = env.place("got." + tag);
    got.push_back(g);
    for (std::size_t v = 0; v < port.places.size(); ++v) {
      TransitionId t = env.transition("take." + tag + "." + istr(v));
      env.consume(env.external(port.places[v]), t);
      env.produce(t, g);
    }
  };
  drain(seg.port("y"), "y");
  for (std::size_t j = 0; j < spec.features; ++j)
    for (std::size_t c = 0; c < 2 * spec.hidden; ++c) {
      std::string tag = "a" + istr(j + 1) + ".c" + istr(c + 1);
      drain(seg.port(tag), tag);
    }
  TransitionId rearm = env.transition("rearm");
  for (PlaceId g : got) env.consume(g, rearm);
  env.produce(rearm, env.external("in.data_vec"));

  ClosedEnv closed;
  closed.name = "input-loader";
  closed.net = env.finish();
  return closed;
}

ClosedEnv closed_register_env(bitfloat::Fp32Bits initial, std::size_t copies) {
  blueprints::RegisterOptions opts;
  opts.wb_copies = copies;
  Segment seg = blueprints::gen_weight_register("reg.w", initial, opts);
  EnvBuilder env(seg);

  std::vector<PlaceId> got;
  ClosedEnv closed;
  for (std::size_t c = 0; c < copies; ++c) {
    const blueprints::Port& port = seg.port("wb.c" + istr(c + 1));
    PlaceId g = env.place("got." + istr(c + 1));
    got.push_back(g);
    for (std::size_t v = 0; v < port.places.size(); ++v) {
      TransitionId t = env.transition("take." + istr(c + 1) + "." + istr(v));
      env.consume(env.external(port.places[v]), t);
      env.produce(t, g);
    }
    closed.mutex_groups.push_back({port.places[0], port.places[1]});
  }
  TransitionId rearm = env.transition("rearm");
  for (PlaceId g : got) env.consume(g, rearm);
  env.consume(env.external("reg.w.bin_done"), rearm);
  env.produce(rearm, env.external("reg.w.arb"));

  closed.name = "weight-register";
  closed.net = env.finish();
  return closed;
}

ClosedEnv closed_ste_env() {
  Segment seg = blueprints::gen_ste("ste.w", false);
  EnvBuilder env(seg);

  // bit patterns over indices 1..31 (sign-next bit down), with expected output
  struct Scenario {
    const char* tag;
    std::uint32_t word;  // full IEEE word; sign ignored by the segment
    int out;
  };
  const Scenario scenarios[] = {
      {"zero", 0x00000000u, 1},   // exponent 0
      {"half", 0x3F000000u, 1},   // exponent 126
      {"one", 0x3F800000u, 1},    // exponent 127, mantissa clear
      {"above", 0x3F800001u, 0},  // exponent 127, mantissa set
  };

  PlaceId choice = env.place("choice", true);
  const blueprints::Port& out = seg.port("out");
  for (const auto& sc : scenarios) {
    TransitionId load = env.transition(std::string("load.") + sc.tag);
    TransitionId unload = env.transition(std::string("unload.") + sc.tag);
    PlaceId loaded = env.place(std::string("loaded.") + sc.tag);
    env.consume(choice, load);
    env.produce(load, loaded);
    env.produce(load, env.external("ste.w.arb"));
    for (std::size_t b = 1; b < 32; ++b) {
      int v = int((sc.word >> (31 - b)) & 1u);
      PlaceId bit = env.external("ste.w.bit." + istr(b) + "." + istr(v));
      env.produce(load, bit);
      env.consume(bit, unload);
    }
    env.consume(loaded, unload);
    env.consume(env.external(out.places[std::size_t(sc.out)]), unload);
    env.produce(unload, choice);
  }

  ClosedEnv closed;
  closed.name = "ste";
  closed.net = env.finish();
  return closed;
}

ClosedEnv closed_fork_env(std::size_t num_weights) {
  Segment seg = blueprints::gen_loss_fork("fork", num_weights, false);
  EnvBuilder env(seg);

  PlaceId armed = env.place("armed", true);
  const blueprints::Port& in = seg.port("dldz");
  for (std::size_t v = 0; v < in.places.size(); ++v) {
    TransitionId t = env.transition("pick." + istr(v));
    env.consume(armed, t);
    env.produce(t, env.external(in.places[v]));
    env.produce(t, env.external("fork.go"));
  }
  TransitionId rearm = env.transition("rearm");
  for (std::size_t k = 0; k < num_weights; ++k) {
    const blueprints::Port& out = seg.port("out" + istr(k + 1));
    PlaceId g = env.place("got." + istr(k + 1));
    for (std::size_t v = 0; v < out.places.size(); ++v) {
      TransitionId t = env.transition("take." + istr(k + 1) + "." + istr(v));
      env.consume(env.external(out.places[v]), t);
      env.produce(t, g);
    }
    env.consume(g, rearm);
  }
  env.produce(rearm, armed);

  ClosedEnv closed;
  closed.name = "loss-fork";
  closed.net = env.finish();
  return closed;
}

ClosedEnv closed_learning_rate_env(const std::vector<int>& tenths) {
  Segment seg = blueprints::gen_learning_rate(tenths);
  EnvBuilder env(seg);

  // once a rate is chosen it is only ever read; a reader loop keeps the
  // composite live without changing the marking
  PlaceId go = env.place("go", true);
  const blueprints::Port& rate = seg.port("rate");
  for (std::size_t v = 0; v < rate.places.size(); ++v) {
    TransitionId t = env.transition("use." + istr(v));
    env.consume(go, t);
    env.produce(t, go);
    env.read(env.external(rate.places[v]), t);
  }

  ClosedEnv closed;
  closed.name = "learning-rate";
  closed.net = env.finish();
  return closed;
}

ClosedEnv closed_hinge_env(const ValueDomain& z_domain) {
  Segment seg = blueprints::gen_hinge_loss("loss", z_domain, false);
  EnvBuilder env(seg);

  PlaceId armed_y = env.place("armed.y", true);
  PlaceId armed_z = env.place("armed.z", true);
  const blueprints::Port& y = seg.port("y");
  for (std::size_t v = 0; v < y.places.size(); ++v) {
    TransitionId t = env.transition("pick.y." + istr(v));
    env.consume(armed_y, t);
    env.produce(t, env.external(y.places[v]));
  }
  // the prediction copy always matches sign(z), as in the composed model
  const blueprints::Port& z = seg.port("z");
  const blueprints::Port& yhat = seg.port("yhat");
  for (std::size_t v = 0; v < z.places.size(); ++v) {
    TransitionId t = env.transition("pick.z." + istr(v));
    env.consume(armed_z, t);
    env.produce(t, env.external(z.places[v]));
    bool nonneg = z.values[v] >= Rational(0);
    env.produce(t, env.external(yhat.places[nonneg ? 1 : 0]));
  }
  const blueprints::Port& dldz = seg.port("dldz");
  PlaceId got = env.place("got.dldz");
  for (std::size_t v = 0; v < dldz.places.size(); ++v) {
    TransitionId t = env.transition("take.dldz." + istr(v));
    env.consume(env.external(dldz.places[v]), t);
    env.produce(t, got);
  }
  TransitionId rearm = env.transition("rearm");
  env.consume(got, rearm);
  env.consume(env.external("loss.L_done"), rearm);
  env.consume(env.external("loss.fork_go"), rearm);
  env.produce(rearm, armed_y);
  env.produce(rearm, armed_z);

  ClosedEnv closed;
  closed.name = "hinge-loss";
  closed.net = env.finish();
  return closed;
}

ClosedEnv closed_next_vector_env(std::size_t num_weights) {
  Segment seg = blueprints::gen_next_vector("nv", num_weights, num_weights, false);
  EnvBuilder env(seg);

  TransitionId rearm = env.transition("rearm");
  for (std::size_t k = 0; k < num_weights; ++k) {
    PlaceId a = env.place("armed." + istr(k + 1), true);
    TransitionId feed = env.transition("feed." + istr(k + 1));
    env.consume(a, feed);
    env.produce(feed, env.external("nv.done." + istr(k + 1)));
    env.consume(env.external("nv.arb." + istr(k + 1)), rearm);
    env.produce(rearm, a);
  }
  PlaceId al = env.place("armed.L", true);
  TransitionId feedl = env.transition("feed.L");
  env.consume(al, feedl);
  env.produce(feedl, env.external("nv.L_done"));
  env.consume(env.external("nv.data_vec"), rearm);
  env.produce(rearm, al);

  ClosedEnv closed;
  closed.name = "next-vector";
  closed.net = env.finish();
  return closed;
}

ClosedEnv closed_budget_env(std::uint32_t epochs) {
  Segment seg = blueprints::gen_epoch_budget(epochs);
  EnvBuilder env(seg);
  TransitionId spend = env.transition("spend");
  env.consume(env.external("budget.pool"), spend);

  ClosedEnv closed;
  closed.name = "epoch-budget";
  closed.net = env.finish();
  PlaceId pool = closed.net.place_checked("budget.pool");
  std::uint32_t slot = closed.net.counter_slot(pool);
  closed.allowed_terminal = [slot](const petri::Marking& m) {
    return m.count(slot) == 0;
  };
  return closed;
}

ClosedEnv closed_weight_update_env(bitfloat::Fp32Bits weight, int j_tenths) {
  Segment seg = blueprints::gen_weight_update("upd", {});
  EnvBuilder env(seg);

  PlaceId go = env.place("go", true);
  TransitionId load = env.transition("load");
  env.consume(go, load);
  for (int b = 0; b < 32; ++b) {
    int v = int((weight.word >> (31 - b)) & 1u);
    env.produce(load, env.external("upd.wbit." + istr(b) + "." + istr(v)));
  }
  const blueprints::Port& jport = seg.port("J");
  std::size_t ji = jport.places.size();
  for (std::size_t v = 0; v < jport.values.size(); ++v)
    if (jport.values[v] == Rational::tenths(j_tenths)) ji = v;
  if (ji == jport.places.size()) throw std::invalid_argument("J value not offered");
  env.produce(load, env.external(jport.places[ji]));

  PlaceId finished = env.place("finished");
  TransitionId fin = env.transition("fin");
  env.consume(env.external("upd.done"), fin);
  env.produce(fin, finished);

  ClosedEnv closed;
  closed.name = "weight-update";
  closed.net = env.finish();
  PlaceId fp = closed.net.place_checked("env.finished");
  closed.allowed_terminal = [fp](const petri::Marking& m) { return m.bit(fp); };
  return closed;
}

std::vector<ClosedEnv> standard_segment_envs() {
  using blueprints::table_grad;
  const ValueDomain bitd = ValueDomain::integers(0, 1);
  const ValueDomain pm1({Rational(-1), Rational(1)});
  const ValueDomain tern = ValueDomain::integers(-1, 1);
  const ValueDomain s_dom = ValueDomain::integers(-2, 2);
  const ValueDomain z_dom({Rational(-2), Rational(0), Rational(2)});

  NetworkSpec spec = NetworkSpec::xor_default();

  std::vector<ClosedEnv> envs;
  envs.push_back(closed_mapper_env("sign", blueprints::table_sign(s_dom)));
  envs.push_back(closed_mapper_env("hardtanh", blueprints::table_hardtanh(s_dom)));
  envs.push_back(closed_mapper_env("product", blueprints::table_product(bitd, pm1)));
  envs.push_back(closed_mapper_env("sum", blueprints::table_sum(tern, tern)));
  envs.push_back(
      closed_mapper_env("grad-ih", table_grad(blueprints::GradKind::InputHidden)));
  envs.push_back(
      closed_mapper_env("grad-ho", table_grad(blueprints::GradKind::HiddenOutput)));
  envs.push_back(closed_mapper_env("grad-real", table_grad(blueprints::GradKind::Real)));
  envs.push_back(closed_mapper_env("rate-product", blueprints::table_lr_product()));
  envs.push_back(closed_loader_env(spec));
  envs.push_back(closed_register_env({0xBF000000u}, 3));  // -0.5, three copies
  envs.push_back(closed_ste_env());
  envs.push_back(closed_fork_env(spec.weight_count()));
  envs.push_back(closed_learning_rate_env({2, 6, 9}));
  envs.push_back(closed_hinge_env(z_dom));
  envs.push_back(closed_next_vector_env(spec.weight_count()));
  envs.push_back(closed_budget_env(3));
  // one per sign/magnitude route: same-sign smaller J, same-sign larger J,
  // opposite signs (addition)
  envs.push_back(closed_weight_update_env({0x3F000000u}, 1));   // 0.5 - 0.1
  envs.back().name = "weight-update-sub";
  envs.push_back(closed_weight_update_env({0x3DCCCCCDu}, 9));   // 0.1 - 0.9
  envs.back().name = "weight-update-swap";
  envs.push_back(closed_weight_update_env({0x3F000000u}, -9));  // 0.5 + 0.9
  envs.back().name = "weight-update-add";
  return envs;
}

}  // namespace verify
