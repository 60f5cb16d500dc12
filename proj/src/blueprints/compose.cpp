#include <map>
#include <set>
#include <stdexcept>

#include "blueprints/segment.hpp"

// Full-model composition. Segments are appended producer-first so every
// boundary port can fuse onto an already-present place. Value ports fuse by
// value, not by position, so domain orderings never have to line up.
//
// Fanout bookkeeping: the loader emits 2H copies of every feature bit (H
// product consumers, then H gradient consumers), hidden-output registers emit
// F+1 binarized copies (the x-product, then the F input-hidden gradients of
// that neuron), the sign stage emits 2 copies (x-product, hidden-output
// gradient) and the output sum emits 2 (prediction, loss).

namespace blueprints {

using petri::PlaceId;
using petri::TransitionId;
using util::Rational;

namespace {

std::string istr(std::size_t v) { return std::to_string(v); }

using FuseMap = std::map<std::string, std::string>;

// fuse every place of `consumer`'s boundary port onto the producer-port place
// carrying the same value
void fuse_values(FuseMap& fuse, const Segment& consumer, const std::string& port_name,
                 const Port& producer, bool allow_missing = false) {
  const Port& in = consumer.port(port_name);
  for (std::size_t i = 0; i < in.places.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < producer.places.size(); ++j)
      if (producer.values[j] == in.values[i]) {
        fuse[in.places[i]] = producer.places[j];
        found = true;
        break;
      }
    if (!found && !allow_missing)
      throw std::logic_error("no producer place for " + in.places[i]);
  }
}

ValueGroup to_group(const Port& p) { return {p.places, p.values}; }

std::vector<std::string> transition_names(const Segment& seg) {
  std::vector<std::string> out;
  for (const auto& t : seg.net.transitions()) out.push_back(t.name);
  return out;
}

std::vector<std::string> transition_names_with(const Segment& seg,
                                               const std::string& infix) {
  std::vector<std::string> out;
  for (const auto& t : seg.net.transitions())
    if (t.name.find(infix) != std::string::npos) out.push_back(t.name);
  return out;
}

}  // namespace

ComposedModel compose_bnn(const NetworkSpec& spec) {
  spec.validate();
  const std::size_t F = spec.features, H = spec.hidden, W = spec.weight_count();
  const bool instr = spec.instrument;
  const bool budgeted = spec.epoch_budget.has_value();
  const ValueDomain feat_dom = ValueDomain::integers(0, 1);
  const ValueDomain pm1({Rational(-1), Rational(1)});

  ComposedModel model;
  model.spec = spec;
  for (std::size_t w = 0; w < W; ++w) model.weight_names.push_back(weight_name(spec, w));
  std::vector<bitfloat::Fp32Bits> weights = initial_weights(spec);

  petri::NetAssembler as;

  if (budgeted) as.append(gen_epoch_budget(*spec.epoch_budget).net, {});

  {
    Segment lr = gen_learning_rate(spec.learning_rate_tenths);
    for (std::size_t i = 0; i < lr.port("rate").places.size(); ++i) {
      const Rational& v = lr.port("rate").values[i];
      model.rate_place[int((v * Rational(10)).num())] = lr.port("rate").places[i];
    }
    as.append(lr.net, {});
  }

  Segment loader = gen_input_loader(spec, budgeted, instr);
  {
    FuseMap fuse;
    if (budgeted) fuse["in.budget"] = "budget.pool";
    as.append(loader.net, fuse);
    model.loader_rows = transition_names_with(loader, "in.row");
    if (instr) {
      model.vector_rec = to_group(loader.port("rec.vec"));
      model.ytrue_rec = to_group(loader.port("rec.y"));
      model.epoch_counter = "in.epoch";
    }
  }

  std::vector<Segment> regs;
  for (std::size_t w = 0; w < W; ++w) {
    RegisterOptions ro;
    ro.wb_copies = w < F * H ? 1 : F + 1;
    ro.instrumented = instr;
    regs.push_back(gen_weight_register("reg." + model.weight_names[w], weights[w], ro));
    as.append(regs[w].net, {});
    RegisterBits rb;
    for (int b = 0; b < 32; ++b)
      for (int v = 0; v < 2; ++v)
        rb.place[b][v] = "reg." + model.weight_names[w] + ".bit." + istr(b) + "." + istr(v);
    model.register_bits.push_back(rb);
    if (instr) model.wb_rec.push_back(to_group(regs[w].port("rec.wb")));
  }
  auto reg_port = [&](std::size_t w, const std::string& name) -> const Port& {
    return regs[w].port(name);
  };

  // hidden neurons: products, sum fold, hardtanh, sign, x-product
  std::vector<Port> sign_out2, mulx_out;  // per neuron, consumed downstream
  std::vector<Port> z_copy(2);            // prediction copy, loss copy
  for (std::size_t i = 0; i < H; ++i) {
    std::vector<Port> mul_out;
    for (std::size_t j = 0; j < F; ++j) {
      MapperOptions mo;
      mo.recorder = instr && F == 1;  // the product is s when there is no fold
      Segment m = gen_function_mapper("n" + istr(i + 1) + ".mul" + istr(j + 1),
                                      table_product(feat_dom, pm1), mo);
      FuseMap fuse;
      fuse_values(fuse, m, "a", loader.port("a" + istr(j + 1) + ".c" + istr(i + 1)));
      fuse_values(fuse, m, "b", reg_port(i * F + j, "wb.c1"));
      as.append(m.net, fuse);
      mul_out.push_back(m.port("out"));
      if (mo.recorder) model.s_rec.push_back(to_group(m.port("rec")));
    }
    Port s_out = mul_out[0];
    for (std::size_t k = 1; k < F; ++k) {
      MapperOptions mo;
      mo.recorder = instr && k + 1 == F;
      Segment sum = gen_function_mapper(
          "n" + istr(i + 1) + ".sum" + istr(k),
          table_sum(ValueDomain(s_out.values), ValueDomain(mul_out[k].values)), mo);
      FuseMap fuse;
      fuse_values(fuse, sum, "a", s_out);
      fuse_values(fuse, sum, "b", mul_out[k]);
      as.append(sum.net, fuse);
      s_out = sum.port("out");
      if (mo.recorder) model.s_rec.push_back(to_group(sum.port("rec")));
    }

    Segment th = gen_function_mapper("n" + istr(i + 1) + ".tanh",
                                     table_hardtanh(ValueDomain(s_out.values)), {});
    {
      FuseMap fuse;
      fuse_values(fuse, th, "x", s_out);
      as.append(th.net, fuse);
    }
    MapperOptions sign_mo;
    sign_mo.fanout = 2;
    sign_mo.recorder = instr;
    Segment sg = gen_function_mapper("n" + istr(i + 1) + ".sign",
                                     table_sign(ValueDomain(th.port("out").values)),
                                     sign_mo);
    {
      FuseMap fuse;
      fuse_values(fuse, sg, "x", th.port("out"));
      as.append(sg.net, fuse);
      if (instr) model.x_rec.push_back(to_group(sg.port("rec")));
      sign_out2.push_back(sg.port("out2"));
    }
    MapperOptions mx_mo;
    mx_mo.fanout = H == 1 ? 2 : 1;  // with one neuron, o is already z
    mx_mo.recorder = instr;
    Segment mx = gen_function_mapper("n" + istr(i + 1) + ".mulx",
                                     table_product(ValueDomain(sg.port("out1").values), pm1),
                                     mx_mo);
    {
      FuseMap fuse;
      fuse_values(fuse, mx, "a", sg.port("out1"));
      fuse_values(fuse, mx, "b", reg_port(F * H + i, "wb.c1"));
      as.append(mx.net, fuse);
      if (instr) model.o_rec.push_back(to_group(mx.port("rec")));
      if (H == 1) {
        z_copy[0] = mx.port("out1");
        z_copy[1] = mx.port("out2");
        if (instr) model.z_rec = to_group(mx.port("rec"));
        model.t_output_sum = transition_names(mx);
      }
      mulx_out.push_back(mx.port(H == 1 ? "out1" : "out"));
    }
  }

  for (std::size_t k = 1; k < H; ++k) {
    Port acc = k == 1 ? mulx_out[0] : z_copy[0];
    MapperOptions mo;
    bool last = k + 1 == H;
    mo.fanout = last ? 2 : 1;
    mo.recorder = instr && last;
    Segment sum = gen_function_mapper(
        "out.sum" + istr(k),
        table_sum(ValueDomain(acc.values), ValueDomain(mulx_out[k].values)), mo);
    FuseMap fuse;
    fuse_values(fuse, sum, "a", acc);
    fuse_values(fuse, sum, "b", mulx_out[k]);
    as.append(sum.net, fuse);
    if (last) {
      z_copy[0] = sum.port("out1");
      z_copy[1] = sum.port("out2");
      if (instr) model.z_rec = to_group(sum.port("rec"));
      model.t_output_sum = transition_names(sum);
    } else {
      z_copy[0] = sum.port("out");
    }
  }
  const ValueDomain z_domain{z_copy[0].values};

  Segment pred = [&] {
    MapperOptions mo;
    mo.recorder = instr;
    Segment p = gen_function_mapper("out.pred", table_sign(z_domain), mo);
    FuseMap fuse;
    fuse_values(fuse, p, "x", z_copy[0]);
    as.append(p.net, fuse);
    if (instr) model.ypred_rec = to_group(p.port("rec"));
    model.t_prediction = transition_names(p);
    return p;
  }();

  Segment hinge = gen_hinge_loss("loss", z_domain, instr);
  {
    FuseMap fuse;
    fuse_values(fuse, hinge, "y", loader.port("y"));
    fuse_values(fuse, hinge, "z", z_copy[1]);
    fuse_values(fuse, hinge, "yhat", pred.port("out"));
    as.append(hinge.net, fuse);
    if (instr) model.loss_rec = to_group(hinge.port("rec.L"));
    model.t_loss_clip = transition_names_with(hinge, ".clip.");
  }

  Segment fork = gen_loss_fork("fork", W, instr);
  {
    FuseMap fuse;
    fuse_values(fuse, fork, "dldz", hinge.port("dldz"));
    fuse["fork.go"] = "loss.fork_go";
    as.append(fork.net, fuse);
    if (instr) model.dldz_rec = to_group(fork.port("rec"));
  }

  for (std::size_t w = 0; w < W; ++w) {
    const std::string& wn = model.weight_names[w];
    MapperOptions mo;
    mo.recorder = instr;

    Segment grad = [&] {
      if (w < F * H) {
        std::size_t i = w / F, j = w % F;
        Segment g = gen_function_mapper("grad." + wn, table_grad(GradKind::InputHidden), mo);
        FuseMap fuse;
        fuse_values(fuse, g, "dldz", fork.port("out" + istr(w + 1)));
        fuse_values(fuse, g, "wbx", reg_port(F * H + i, "wb.c" + istr(2 + j)));
        fuse_values(fuse, g, "a", loader.port("a" + istr(j + 1) + ".c" + istr(H + i + 1)));
        as.append(g.net, fuse);
        return g;
      }
      std::size_t i = w - F * H;
      Segment g = gen_function_mapper("grad." + wn, table_grad(GradKind::HiddenOutput), mo);
      FuseMap fuse;
      fuse_values(fuse, g, "dldz", fork.port("out" + istr(w + 1)));
      fuse_values(fuse, g, "x", sign_out2[i]);
      as.append(g.net, fuse);
      return g;
    }();
    if (instr) model.gb_rec.push_back(to_group(grad.port("rec")));
    for (auto& n : transition_names(grad)) model.t_gradients.push_back(n);

    Segment ste = gen_ste("ste." + wn, instr);
    {
      FuseMap fuse;
      fuse["ste." + wn + ".arb"] = "reg." + wn + ".bin_done";
      for (int b = 1; b < 32; ++b)
        for (int v = 0; v < 2; ++v)
          fuse["ste." + wn + ".bit." + istr(b) + "." + istr(v)] =
              model.register_bits[w].place[b][v];
      as.append(ste.net, fuse);
      if (instr) model.ste_rec.push_back(to_group(ste.port("rec")));
    }

    Segment gr = gen_function_mapper("gradr." + wn, table_grad(GradKind::Real), mo);
    {
      FuseMap fuse;
      fuse_values(fuse, gr, "gb", grad.port("out"));
      fuse_values(fuse, gr, "ste", ste.port("out"));
      as.append(gr.net, fuse);
      if (instr) model.gr_rec.push_back(to_group(gr.port("rec")));
      for (auto& n : transition_names(gr)) model.t_gradients.push_back(n);
    }

    Segment lp = gen_function_mapper("lrprod." + wn, table_lr_product(), mo);
    {
      FuseMap fuse;
      // only the offered rates have places; rows reading others stay dead
      Port rate_port;
      rate_port.values.clear();
      for (const auto& [tenths, place] : model.rate_place) {
        rate_port.values.push_back(Rational::tenths(tenths));
        rate_port.places.push_back(place);
      }
      fuse_values(fuse, lp, "eta", rate_port, /*allow_missing=*/true);
      fuse_values(fuse, lp, "g", gr.port("out"));
      as.append(lp.net, fuse);
      if (instr) model.j_rec.push_back(to_group(lp.port("rec")));
    }

    WeightUpdateOptions uo;
    uo.instrumented = instr;
    Segment upd = gen_weight_update("upd." + wn, uo);
    {
      FuseMap fuse;
      fuse_values(fuse, upd, "J", lp.port("out"));
      for (int b = 0; b < 32; ++b)
        for (int v = 0; v < 2; ++v)
          fuse["upd." + wn + ".wbit." + istr(b) + "." + istr(v)] =
              model.register_bits[w].place[b][v];
      if (instr) fuse["upd." + wn + ".cap.go"] = "reg." + wn + ".cap_go";
      as.append(upd.net, fuse);
      if (instr) {
        RegisterBits init, up;
        for (int b = 0; b < 32; ++b)
          for (int v = 0; v < 2; ++v) {
            init.place[b][v] = "upd." + wn + ".rec.init." + istr(b) + "." + istr(v);
            up.place[b][v] = "upd." + wn + ".rec.upd." + istr(b) + "." + istr(v);
          }
        model.init_bits_rec.push_back(init);
        model.upd_bits_rec.push_back(up);
      }
    }
  }

  {
    Segment nv = gen_next_vector("nv", W, W, instr);
    FuseMap fuse;
    for (std::size_t w = 0; w < W; ++w)
      fuse["nv.done." + istr(w + 1)] = "upd." + model.weight_names[w] + ".done";
    fuse["nv.L_done"] = "loss.L_done";
    if (!instr) {
      fuse["nv.data_vec"] = "in.data_vec";
      for (std::size_t w = 0; w < W; ++w)
        fuse["nv.arb." + istr(w + 1)] = "reg." + model.weight_names[w] + ".arb";
    }
    as.append(nv.net, fuse);
    model.t_next_vector = "nv.next_vector";
  }

  if (instr) {
    // flush stage: one group per recorder, drained in a fixed chain, then the
    // grant re-arms the loader and the register binarizations
    petri::Net inst;
    FuseMap fuse;
    std::map<std::string, PlaceId> mirrors;
    auto mirror = [&](const std::string& target) {
      auto it = mirrors.find(target);
      if (it != mirrors.end()) return it->second;
      PlaceId p = inst.add_place("inst.m" + istr(mirrors.size()));
      fuse[inst.place(p).name] = target;
      mirrors.emplace(target, p);
      return p;
    };

    std::vector<std::vector<std::string>> groups;
    std::set<std::string> seen;
    auto add_group = [&](const std::vector<std::string>& places) {
      if (places.empty()) throw std::logic_error("empty recorder group");
      if (seen.insert(places[0]).second) groups.push_back(places);
    };
    add_group(model.vector_rec.places);
    add_group(model.ytrue_rec.places);
    add_group(model.ypred_rec.places);
    for (std::size_t i = 0; i < H; ++i) {
      add_group(model.s_rec[i].places);
      add_group(model.x_rec[i].places);
      add_group(model.o_rec[i].places);
    }
    add_group(model.z_rec.places);
    add_group(model.loss_rec.places);
    add_group(model.dldz_rec.places);
    for (std::size_t w = 0; w < W; ++w) {
      add_group(model.wb_rec[w].places);
      add_group(model.ste_rec[w].places);
      add_group(model.gb_rec[w].places);
      add_group(model.gr_rec[w].places);
      add_group(model.j_rec[w].places);
      for (int b = 0; b < 32; ++b) {
        add_group({model.init_bits_rec[w].place[b][0], model.init_bits_rec[w].place[b][1]});
        add_group({model.upd_bits_rec[w].place[b][0], model.upd_bits_rec[w].place[b][1]});
      }
    }

    PlaceId stage = inst.add_place("inst.f0");
    fuse["inst.f0"] = "nv.flush_go";
    std::size_t fn = 0;
    for (const auto& group : groups) {
      PlaceId next = inst.add_place("inst.f" + istr(++fn));
      for (std::size_t k = 0; k < group.size(); ++k) {
        TransitionId t =
            inst.add_transition("inst.f" + istr(fn - 1) + ".t" + istr(k));
        inst.add_input_arc(stage, t);
        inst.add_input_arc(mirror(group[k]), t);
        inst.add_output_arc(t, next);
      }
      stage = next;
    }
    TransitionId grant = inst.add_transition("inst.grant");
    inst.add_input_arc(stage, grant);
    inst.add_output_arc(grant, mirror("in.data_vec"));
    for (std::size_t w = 0; w < W; ++w)
      inst.add_output_arc(grant, mirror("reg." + model.weight_names[w] + ".arb"));
    inst.finalize();
    as.append(inst, fuse);
  }

  model.net = as.take();
  for (std::size_t w = 0; w < W; ++w) {
    PlaceId done = model.net.place_checked("upd." + model.weight_names[w] + ".done");
    for (TransitionId t : model.net.producers_of(done))
      model.t_update_done.push_back(model.net.transition(t).name);
  }
  return model;
}

}  // namespace blueprints
