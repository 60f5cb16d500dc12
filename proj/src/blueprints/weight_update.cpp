#include <array>
#include <stdexcept>

#include "bitfloat/bitfloat.hpp"
#include "blueprints/segment.hpp"

// Weight update W_r <- W_r - J as a pure token pipeline. The register is the
// only persistent state; every intermediate (decoded J bits, alignment grids,
// digit-serial partial results) is carried by tokens that a later stage
// consumes, so a completed update leaves nothing behind but the new register
// bits and the done token.
//
// Stage order: decode J into bit tokens, walk a magnitude compare against the
// register, resolve the result sign and the add/subtract route, align both
// operands onto a 48-cell fixed-point grid (1 integer cell, 47 fraction
// cells) via repeated one-cell shift waves, run the carry chain LSB first,
// renormalize with left-shift waves, then write the register bit by bit.
// Magnitudes at or above 2 saturate to the largest finite value; results that
// cannot be normalized within 24 shifts flush to +0.

namespace blueprints {

using petri::ArcKind;
using petri::PlaceId;
using petri::TransitionId;
using util::Rational;

namespace {

std::string istr(std::size_t v) { return std::to_string(v); }

constexpr std::size_t kCells = bitfloat::kFractionBits + 1;  // int + f1..f47
constexpr std::size_t kJCells = bitfloat::kMantissaBits + bitfloat::kStickyBudgetJ + 1;

}  // namespace

Segment gen_weight_update(const std::string& name, const WeightUpdateOptions& opts) {
  Segment seg;
  seg.name = name;
  seg.category = "training";
  petri::Net& net = seg.net;
  const std::string pre = name + ".";
  const bool instr = opts.instrumented;

  auto pair = [&](const std::string& base) {
    return std::array<PlaceId, 2>{net.add_place(base + ".0"), net.add_place(base + ".1")};
  };
  auto self_loop = [&](PlaceId p, TransitionId t) {
    net.add_input_arc(p, t);
    net.add_output_arc(t, p);
  };

  // --- boundary --------------------------------------------------------------

  Port jport;
  jport.name = "J";
  jport.role = PortRole::ValueIn;
  jport.boundary = true;
  std::array<PlaceId, 19> jin;
  for (int t = -9; t <= 9; ++t) {
    Rational v = Rational::tenths(t);
    std::string pn = pre + "J." + v.to_string();
    jin[t + 9] = net.add_place(pn);
    jport.values.push_back(v);
    jport.places.push_back(pn);
  }
  seg.ports.push_back(std::move(jport));

  std::array<std::array<PlaceId, 2>, 32> wbit;
  {
    Port port;
    port.name = "bits";
    port.role = PortRole::Control;
    port.boundary = true;
    for (std::size_t b = 0; b < 32; ++b) {
      wbit[b] = pair(pre + "wbit." + istr(b));
      port.places.push_back(pre + "wbit." + istr(b) + ".0");
      port.places.push_back(pre + "wbit." + istr(b) + ".1");
    }
    seg.ports.push_back(std::move(port));
  }

  PlaceId cap_go = petri::kNoIndex;
  if (instr) {
    cap_go = net.add_place(pre + "cap.go");
    Port port;
    port.name = "capture";
    port.role = PortRole::Done;
    port.boundary = true;
    port.places = {pre + "cap.go"};
    seg.ports.push_back(std::move(port));
  }

  PlaceId done = net.add_place(pre + "done");
  {
    Port port;
    port.name = "done";
    port.role = PortRole::Done;
    port.places = {pre + "done"};
    seg.ports.push_back(std::move(port));
  }

  // --- initial-bit capture (instrument only) ---------------------------------
  // Walks the register before the decode is allowed to start, so the recorded
  // pre-update bits cannot race the writeback.

  PlaceId cap_done = petri::kNoIndex;
  auto capture_chain = [&](const std::string& tag, PlaceId go, PlaceId then) {
    PlaceId at = go;
    for (std::size_t b = 0; b < 32; ++b) {
      auto rec = pair(pre + "rec." + tag + "." + istr(b));
      PlaceId next = b + 1 < 32 ? net.add_place(pre + "cap." + tag + istr(b + 1)) : then;
      for (int v = 0; v < 2; ++v) {
        TransitionId t = net.add_transition(pre + "cap." + tag + istr(b) + "." + istr(v));
        net.add_input_arc(at, t);
        net.add_input_arc(wbit[b][v], t, ArcKind::Read);
        net.add_output_arc(t, rec[v]);
        net.add_output_arc(t, next);
      }
      at = next;
    }
  };
  if (instr) {
    cap_done = net.add_place(pre + "cap.done");
    capture_chain("init", cap_go, cap_done);
  }

  // --- J decode --------------------------------------------------------------
  // One transition per nonzero J value expands the one-hot token into its
  // sign, eight exponent bit tokens and 23 mantissa bit tokens, and starts the
  // magnitude compare. J = 0 bypasses the whole pipeline.

  auto jsign = pair(pre + "jsign");
  std::array<std::array<PlaceId, 2>, 8> jexp;
  for (std::size_t i = 0; i < 8; ++i) jexp[i] = pair(pre + "jexp." + istr(i));
  std::array<std::array<PlaceId, 2>, 23> jman;
  for (std::size_t k = 0; k < 23; ++k) jman[k] = pair(pre + "jman." + istr(k));

  std::array<PlaceId, 31> cmp_at;
  for (std::size_t k = 0; k < 31; ++k) cmp_at[k] = net.add_place(pre + "cmp.at" + istr(k));
  PlaceId cmp_wg = net.add_place(pre + "cmp.wg", "|W| larger");
  PlaceId cmp_wl = net.add_place(pre + "cmp.wl", "|W| smaller");
  PlaceId cmp_same = net.add_place(pre + "cmp.same", "magnitudes equal");

  PlaceId upd_fin = instr ? net.add_place(pre + "cap.ugo") : done;

  for (int t = -9; t <= 9; ++t) {
    if (t == 0) {
      TransitionId tr = net.add_transition(pre + "jdec.zero");
      net.add_input_arc(jin[9], tr);
      if (instr) net.add_input_arc(cap_done, tr);
      net.add_output_arc(tr, upd_fin);
      continue;
    }
    bitfloat::Fp32Bits j = bitfloat::encode(Rational::tenths(t));
    std::uint32_t e = bitfloat::exponent_field(j);
    std::uint32_t m = bitfloat::mantissa_field(j);
    TransitionId tr = net.add_transition(pre + "jdec." + Rational::tenths(t).to_string());
    net.add_input_arc(jin[t + 9], tr);
    if (instr) net.add_input_arc(cap_done, tr);
    net.add_output_arc(tr, jsign[t < 0 ? 1 : 0]);
    for (std::size_t i = 0; i < 8; ++i)
      net.add_output_arc(tr, jexp[i][(e >> (7 - i)) & 1u]);
    for (std::size_t k = 0; k < 23; ++k)
      net.add_output_arc(tr, jman[k][(m >> (22 - k)) & 1u]);
    net.add_output_arc(tr, cmp_at[0]);
  }

  // --- magnitude compare -----------------------------------------------------
  // MSB-first walk over exponent then mantissa. Register bit 1+k and the J bit
  // token for the same position; the first difference decides.

  for (std::size_t k = 0; k < 31; ++k) {
    auto jbit = k < 8 ? jexp[k] : jman[k - 8];
    PlaceId on_equal[2];
    if (k + 1 < 31) {
      on_equal[0] = on_equal[1] = cmp_at[k + 1];
    } else {
      on_equal[0] = on_equal[1] = cmp_same;
    }
    TransitionId wg = net.add_transition(pre + "cmp." + istr(k) + ".wg");
    net.add_input_arc(cmp_at[k], wg);
    net.add_input_arc(wbit[1 + k][1], wg, ArcKind::Read);
    net.add_input_arc(jbit[0], wg, ArcKind::Read);
    net.add_output_arc(wg, cmp_wg);
    TransitionId wl = net.add_transition(pre + "cmp." + istr(k) + ".wl");
    net.add_input_arc(cmp_at[k], wl);
    net.add_input_arc(wbit[1 + k][0], wl, ArcKind::Read);
    net.add_input_arc(jbit[1], wl, ArcKind::Read);
    net.add_output_arc(wl, cmp_wl);
    for (int v = 0; v < 2; ++v) {
      TransitionId eq = net.add_transition(pre + "cmp." + istr(k) + ".eq" + istr(v));
      net.add_input_arc(cmp_at[k], eq);
      net.add_input_arc(wbit[1 + k][v], eq, ArcKind::Read);
      net.add_input_arc(jbit[v], eq, ArcKind::Read);
      net.add_output_arc(eq, on_equal[v]);
    }
  }

  // --- sign and route resolve ------------------------------------------------
  // W - J: equal operand signs subtract magnitudes (larger minus smaller,
  // result sign flips when J wins), opposite signs add under W's sign.

  auto nsign = pair(pre + "nsign");
  PlaceId route_add = net.add_place(pre + "route.add");
  PlaceId route_swg = net.add_place(pre + "route.swg");
  PlaceId route_swl = net.add_place(pre + "route.swl");
  PlaceId wal_ld1 = net.add_place(pre + "wal.ld1");
  PlaceId jal_ld0 = net.add_place(pre + "jal.ld0");

  {
    const PlaceId cmps[3] = {cmp_wg, cmp_wl, cmp_same};
    const char* tags[3] = {"wg", "wl", "same"};
    for (int c = 0; c < 3; ++c)
      for (int ws = 0; ws < 2; ++ws)
        for (int js = 0; js < 2; ++js) {
          auto order = static_cast<bitfloat::MagnitudeOrder>(c);
          bitfloat::SignOpResolution r = bitfloat::resolve_sign_op(order, ws != 0, js != 0);
          TransitionId t = net.add_transition(pre + "res." + tags[c] + istr(ws) + istr(js));
          net.add_input_arc(cmps[c], t);
          net.add_input_arc(wbit[0][ws], t, ArcKind::Read);
          net.add_input_arc(jsign[js], t);
          net.add_output_arc(t, nsign[r.result_negative ? 1 : 0]);
          if (r.op == bitfloat::UpdateOp::Add)
            net.add_output_arc(t, route_add);
          else
            net.add_output_arc(t, order == bitfloat::MagnitudeOrder::WeightLess ? route_swl
                                                                                : route_swg);
          net.add_output_arc(t, wal_ld1);
          net.add_output_arc(t, jal_ld0);
        }
  }

  // --- alignment grids -------------------------------------------------------

  // W grid: int + f1..f47; J grid: int + f1..f27 (23 mantissa + 4 sticky)
  std::vector<std::array<PlaceId, 2>> wg(kCells), jg(kJCells);
  wg[0] = pair(pre + "wg.int");
  for (std::size_t p = 1; p < kCells; ++p) wg[p] = pair(pre + "wg.f" + istr(p));
  jg[0] = pair(pre + "jg.int");
  for (std::size_t p = 1; p < kJCells; ++p) jg[p] = pair(pre + "jg.f" + istr(p));

  std::vector<PlaceId> wal_cont, jal_cont, nrm_cont;
  if (opts.cont_interlocks) {
    for (std::size_t p = 0; p < kCells; ++p) {
      wal_cont.push_back(net.add_place(pre + "wal.cont." + istr(p)));
      net.mark_initial(wal_cont.back());
      nrm_cont.push_back(net.add_place(pre + "nrm.cont." + istr(p)));
      net.mark_initial(nrm_cont.back());
    }
    for (std::size_t p = 0; p < kJCells; ++p) {
      jal_cont.push_back(net.add_place(pre + "jal.cont." + istr(p)));
      net.mark_initial(jal_cont.back());
    }
  }

  // One right-shift wave: drop the last fraction cell, ripple every remaining
  // cell one position down, refill the integer cell with 0, hand the ready
  // token back. The wave transition into a cell carries that cell's token.
  auto shift_wave = [&](const std::string& tag, std::vector<std::array<PlaceId, 2>>& grid,
                        const std::vector<PlaceId>& cont, PlaceId start, PlaceId ready) {
    std::size_t last = grid.size() - 1;
    std::vector<PlaceId> at(grid.size());
    for (std::size_t p = 0; p <= last; ++p)
      at[p] = net.add_place(pre + tag + ".at" + istr(p));
    for (int v = 0; v < 2; ++v) {
      TransitionId t = net.add_transition(pre + tag + ".drop." + istr(v));
      net.add_input_arc(start, t);
      net.add_input_arc(grid[last][v], t);
      net.add_output_arc(t, at[last]);
    }
    for (std::size_t p = last; p >= 1; --p)
      for (int v = 0; v < 2; ++v) {
        TransitionId t = net.add_transition(pre + tag + ".mv" + istr(p) + "." + istr(v));
        net.add_input_arc(at[p], t);
        net.add_input_arc(grid[p - 1][v], t);
        net.add_output_arc(t, grid[p][v]);
        net.add_output_arc(t, at[p - 1]);
        if (!cont.empty()) self_loop(cont[p], t);
      }
    TransitionId fill = net.add_transition(pre + tag + ".fill");
    net.add_input_arc(at[0], fill);
    net.add_output_arc(fill, grid[0][0]);
    net.add_output_arc(fill, ready);
    if (!cont.empty()) self_loop(cont[0], fill);
  };

  // --- W aligner -------------------------------------------------------------
  // Load the mantissa into f1..f23 off read arcs, zero-fill the sticky range,
  // then decode the exponent: E in [103,127] seeds the integer cell with the
  // implicit 1 and queues 127-E shifts; an all-zero exponent field is +-0 and
  // seeds an all-zero grid with no shifts. Exponents below 103 cannot appear:
  // the writeback only ever stores 0, [103,127] (24-shift normalize floor) or
  // the saturation value.

  PlaceId wal_ready = net.add_place(pre + "wal.ready");
  net.mark_initial(wal_ready);
  PlaceId wal_done = net.add_place(pre + "wal.done");
  {
    PlaceId at = wal_ld1;
    for (std::size_t k = 1; k <= 23; ++k) {
      PlaceId next = k < 23 ? net.add_place(pre + "wal.ld" + istr(k + 1))
                            : net.add_place(pre + "wal.zf");
      for (int v = 0; v < 2; ++v) {
        TransitionId t = net.add_transition(pre + "wal.ld" + istr(k) + "." + istr(v));
        net.add_input_arc(at, t);
        net.add_input_arc(wbit[8 + k][v], t, ArcKind::Read);
        net.add_output_arc(t, wg[k][v]);
        net.add_output_arc(t, next);
      }
      at = next;
    }
    PlaceId exp_go = net.add_place(pre + "wal.exp_go");
    TransitionId zf = net.add_transition(pre + "wal.zfill");
    net.add_input_arc(at, zf);
    for (std::size_t p = 24; p < kCells; ++p) net.add_output_arc(zf, wg[p][0]);
    net.add_output_arc(zf, exp_go);

    std::vector<PlaceId> q(25);
    for (std::size_t n = 0; n <= 24; ++n) q[n] = net.add_place(pre + "wal.q" + istr(n));
    for (std::uint32_t e = 103; e <= 127; ++e) {
      TransitionId t = net.add_transition(pre + "wal.is" + istr(e));
      net.add_input_arc(exp_go, t);
      for (std::size_t k = 1; k <= 8; ++k)
        net.add_input_arc(wbit[k][(e >> (8 - k)) & 1u], t, ArcKind::Read);
      net.add_output_arc(t, wg[0][1]);
      net.add_output_arc(t, q[127 - e]);
    }
    TransitionId z = net.add_transition(pre + "wal.is0");
    net.add_input_arc(exp_go, z);
    for (std::size_t k = 1; k <= 8; ++k) net.add_input_arc(wbit[k][0], z, ArcKind::Read);
    net.add_output_arc(z, wg[0][0]);
    net.add_output_arc(z, q[0]);

    PlaceId wave_start = net.add_place(pre + "wal.w.start");
    for (std::size_t n = 1; n <= 24; ++n) {
      TransitionId t = net.add_transition(pre + "wal.sh" + istr(n));
      net.add_input_arc(q[n], t);
      net.add_input_arc(wal_ready, t);
      net.add_output_arc(t, wave_start);
      net.add_output_arc(t, q[n - 1]);
    }
    TransitionId fin = net.add_transition(pre + "wal.fin");
    net.add_input_arc(q[0], fin);
    net.add_input_arc(wal_ready, fin, ArcKind::Read);
    net.add_output_arc(fin, wal_done);
    shift_wave("wal.w", wg, wal_cont, wave_start, wal_ready);
  }

  // --- J aligner -------------------------------------------------------------
  // Same shape, but the loads consume the decoded bit tokens and the exponent
  // decode consumes the token pattern outright. J is never zero here and its
  // exponent sits in [123,126], one to four shifts.

  PlaceId jal_ready = net.add_place(pre + "jal.ready");
  net.mark_initial(jal_ready);
  PlaceId jal_done = net.add_place(pre + "jal.done");
  {
    PlaceId ld1 = net.add_place(pre + "jal.ld1");
    TransitionId seed = net.add_transition(pre + "jal.seed");
    net.add_input_arc(jal_ld0, seed);
    net.add_output_arc(seed, jg[0][1]);
    net.add_output_arc(seed, ld1);
    PlaceId at = ld1;
    for (std::size_t k = 1; k <= 23; ++k) {
      PlaceId next = k < 23 ? net.add_place(pre + "jal.ld" + istr(k + 1))
                            : net.add_place(pre + "jal.zf");
      for (int v = 0; v < 2; ++v) {
        TransitionId t = net.add_transition(pre + "jal.ld" + istr(k) + "." + istr(v));
        net.add_input_arc(at, t);
        net.add_input_arc(jman[k - 1][v], t);
        net.add_output_arc(t, jg[k][v]);
        net.add_output_arc(t, next);
      }
      at = next;
    }
    PlaceId exp_go = net.add_place(pre + "jal.exp_go");
    TransitionId zf = net.add_transition(pre + "jal.zfill");
    net.add_input_arc(at, zf);
    for (std::size_t p = 24; p < kJCells; ++p) net.add_output_arc(zf, jg[p][0]);
    net.add_output_arc(zf, exp_go);

    std::vector<PlaceId> q(5);
    for (std::size_t n = 0; n <= 4; ++n) q[n] = net.add_place(pre + "jal.q" + istr(n));
    for (std::uint32_t e = 123; e <= 126; ++e) {
      TransitionId t = net.add_transition(pre + "jal.is" + istr(e));
      net.add_input_arc(exp_go, t);
      for (std::size_t i = 0; i < 8; ++i)
        net.add_input_arc(jexp[i][(e >> (7 - i)) & 1u], t);
      net.add_output_arc(t, q[127 - e]);
    }
    PlaceId wave_start = net.add_place(pre + "jal.w.start");
    for (std::size_t n = 1; n <= 4; ++n) {
      TransitionId t = net.add_transition(pre + "jal.sh" + istr(n));
      net.add_input_arc(q[n], t);
      net.add_input_arc(jal_ready, t);
      net.add_output_arc(t, wave_start);
      net.add_output_arc(t, q[n - 1]);
    }
    TransitionId fin = net.add_transition(pre + "jal.fin");
    net.add_input_arc(q[0], fin);
    net.add_input_arc(jal_ready, fin, ArcKind::Read);
    net.add_output_arc(fin, jal_done);
    shift_wave("jal.w", jg, jal_cont, wave_start, jal_ready);
  }

  // --- digit-serial arithmetic ----------------------------------------------
  // Three carry chains walk the grids LSB first. Below the J range (f47..f28)
  // the subtrahend/addend is implicitly zero; subtraction adds the borrow to
  // the next subtrahend digit instead of taking it from the minuend.

  std::vector<std::array<PlaceId, 2>> res(kCells);
  res[0] = pair(pre + "res.int");
  for (std::size_t p = 1; p < kCells; ++p) res[p] = pair(pre + "res.f" + istr(p));

  PlaceId ar_pre = net.add_place(pre + "ar.pre");
  PlaceId ar_sat = net.add_place(pre + "ar.sat");
  PlaceId nrm_k0 = net.add_place(pre + "nrm.k0");
  {
    TransitionId go = net.add_transition(pre + "ar.go");
    net.add_input_arc(wal_done, go);
    net.add_input_arc(jal_done, go);
    net.add_output_arc(go, ar_pre);
  }

  enum class Chain { Add, SubWG, SubWL };
  auto build_chain = [&](const std::string& tag, Chain kind, PlaceId route) {
    // stage places: single token through the sticky range for add/swg (no
    // carry can arise there), carry-annotated pairs elsewhere
    PlaceId entry = net.add_place(pre + tag + ".at47" + (kind == Chain::SubWL ? ".c0" : ""));
    TransitionId en = net.add_transition(pre + tag + ".go");
    net.add_input_arc(ar_pre, en);
    net.add_input_arc(route, en);
    net.add_output_arc(en, entry);

    auto stage_place = [&](std::size_t p, int c) {
      std::string base = p == 0 ? pre + tag + ".ati" : pre + tag + ".at" + istr(p);
      bool carried = kind == Chain::SubWL ? true : p < kJCells;
      return carried ? base + ".c" + istr(c) : base;
    };
    // contract: entry already created for p=47
    auto at = [&](std::size_t p, int c) -> PlaceId {
      std::string nm = stage_place(p, c);
      if (auto found = net.find_place(nm)) return *found;
      return net.add_place(nm);
    };
    (void)at(47, 0);

    for (std::size_t p = kCells - 1; p >= 1; --p) {
      bool has_j = p < kJCells;
      bool carried_in = kind == Chain::SubWL || has_j;
      // no carry can enter the first stage
      int carry_ins = p == kCells - 1 ? 1 : (carried_in ? 2 : 1);
      for (int c = 0; c < carry_ins; ++c)
        for (int w = 0; w < 2; ++w)
          for (int j = 0; j < (has_j ? 2 : 1); ++j) {
            int d, cout;
            if (kind == Chain::Add) {
              int s = w + j + c;
              d = s & 1;
              cout = s >> 1;
            } else if (kind == Chain::SubWG) {
              int s = j + c;
              d = (w + s) & 1;
              cout = s > w ? 1 : 0;
            } else {
              int s = w + c;
              d = (j + s) & 1;
              cout = s > j ? 1 : 0;
            }
            std::string tn = pre + tag + "." + istr(p) + "." + istr(w);
            if (has_j) tn += istr(j);
            if (carried_in) tn += "c" + istr(c);
            TransitionId t = net.add_transition(tn);
            net.add_input_arc(at(p, c), t);
            net.add_input_arc(wg[p][w], t);
            if (has_j) net.add_input_arc(jg[p][j], t);
            net.add_output_arc(t, res[p][d]);
            net.add_output_arc(t, at(p - 1, cout));
          }
    }
    // integer cell: a carry out of an addition is the guard bit and routes to
    // saturation; subtractions with a borrow out of the top are impossible by
    // the compare routing and get no transition
    for (int c = 0; c < 2; ++c)
      for (int w = 0; w < 2; ++w)
        for (int j = 0; j < 2; ++j) {
          int d, cout;
          if (kind == Chain::Add) {
            int s = w + j + c;
            d = s & 1;
            cout = s >> 1;
          } else if (kind == Chain::SubWG) {
            if (j + c > w) continue;
            d = w - j - c;
            cout = 0;
          } else {
            if (w + c > j) continue;
            d = j - w - c;
            cout = 0;
          }
          TransitionId t = net.add_transition(pre + tag + ".i." + istr(w) + istr(j) +
                                              "c" + istr(c));
          net.add_input_arc(at(0, c), t);
          net.add_input_arc(wg[0][w], t);
          net.add_input_arc(jg[0][j], t);
          net.add_output_arc(t, res[0][d]);
          net.add_output_arc(t, cout ? ar_sat : nrm_k0);
        }
  };
  build_chain("add", Chain::Add, route_add);
  build_chain("swg", Chain::SubWG, route_swg);
  build_chain("swl", Chain::SubWL, route_swl);

  // --- normalize -------------------------------------------------------------
  // Shift the result left until the integer cell holds 1, counting shifts for
  // the exponent 127-k. Reaching 24 shifts with a still-zero integer cell
  // flushes the result: the grid is drained cell by cell and +0 is written.

  auto nexp = [&] {
    std::array<std::array<PlaceId, 2>, 8> a;
    for (std::size_t i = 0; i < 8; ++i) a[i] = pair(pre + "nexp." + istr(i));
    return a;
  }();
  PlaceId nrm_ready = net.add_place(pre + "nrm.ready");
  net.mark_initial(nrm_ready);
  PlaceId wb_go = net.add_place(pre + "wb.go");
  PlaceId wb_zgo = net.add_place(pre + "wb.zgo");
  {
    PlaceId lw_start = net.add_place(pre + "nrm.lw.start");
    PlaceId at = nrm_k0;
    for (std::size_t k = 0; k <= 24; ++k) {
      TransitionId dn = net.add_transition(pre + "nrm.done" + istr(k));
      net.add_input_arc(at, dn);
      net.add_input_arc(res[0][1], dn, ArcKind::Read);
      net.add_output_arc(dn, wb_go);
      std::uint32_t e = 127 - std::uint32_t(k);
      for (std::size_t i = 0; i < 8; ++i)
        net.add_output_arc(dn, nexp[i][(e >> (7 - i)) & 1u]);
      if (k == 24) {
        TransitionId fl = net.add_transition(pre + "nrm.flush");
        net.add_input_arc(at, fl);
        net.add_input_arc(res[0][0], fl, ArcKind::Read);
        PlaceId clr = net.add_place(pre + "nrm.clr0");
        net.add_output_arc(fl, clr);
        for (std::size_t s = 0; s < kCells; ++s) {
          PlaceId next = s + 1 < kCells ? net.add_place(pre + "nrm.clr" + istr(s + 1))
                                        : wb_zgo;
          for (int v = 0; v < 2; ++v) {
            TransitionId t = net.add_transition(pre + "nrm.clr" + istr(s) + "." + istr(v));
            net.add_input_arc(clr, t);
            net.add_input_arc(res[s][v], t);
            net.add_output_arc(t, next);
          }
          clr = next;
        }
        break;
      }
      PlaceId wait = net.add_place(pre + "nrm.wait" + istr(k));
      TransitionId sh = net.add_transition(pre + "nrm.shift" + istr(k));
      net.add_input_arc(at, sh);
      net.add_input_arc(nrm_ready, sh);
      net.add_input_arc(res[0][0], sh, ArcKind::Read);
      net.add_output_arc(sh, lw_start);
      net.add_output_arc(sh, wait);
      PlaceId next = net.add_place(pre + "nrm.k" + istr(k + 1));
      TransitionId nx = net.add_transition(pre + "nrm.next" + istr(k));
      net.add_input_arc(wait, nx);
      // the wave returns ready; reading it leaves the interlock armed for the
      // next shift and for the next update cycle
      net.add_input_arc(nrm_ready, nx, ArcKind::Read);
      net.add_output_arc(nx, next);
      at = next;
    }
    // left wave: drop the integer cell, ripple cells up one position, zero the
    // last fraction cell
    std::vector<PlaceId> lat(kCells);
    for (std::size_t p = 0; p < kCells; ++p)
      lat[p] = net.add_place(pre + "nrm.lw.at" + istr(p));
    for (int v = 0; v < 2; ++v) {
      TransitionId t = net.add_transition(pre + "nrm.lw.drop." + istr(v));
      net.add_input_arc(lw_start, t);
      net.add_input_arc(res[0][v], t);
      net.add_output_arc(t, lat[0]);
    }
    for (std::size_t p = 0; p + 1 < kCells; ++p)
      for (int v = 0; v < 2; ++v) {
        TransitionId t = net.add_transition(pre + "nrm.lw.mv" + istr(p) + "." + istr(v));
        net.add_input_arc(lat[p], t);
        net.add_input_arc(res[p + 1][v], t);
        net.add_output_arc(t, res[p][v]);
        net.add_output_arc(t, lat[p + 1]);
        if (!nrm_cont.empty()) self_loop(nrm_cont[p], t);
      }
    TransitionId fill = net.add_transition(pre + "nrm.lw.fill");
    net.add_input_arc(lat[kCells - 1], fill);
    net.add_output_arc(fill, res[kCells - 1][0]);
    net.add_output_arc(fill, nrm_ready);
    if (!nrm_cont.empty()) self_loop(nrm_cont[kCells - 1], fill);
  }

  // --- writeback -------------------------------------------------------------
  // Swap in the new sign, the counted exponent and the top 23 result cells,
  // then drain the remaining result cells. The replaced register bit is
  // consumed and the new one produced, which keeps each bit pair one-hot.

  {
    PlaceId e0 = net.add_place(pre + "wb.e0");
    for (int ns = 0; ns < 2; ++ns)
      for (int os = 0; os < 2; ++os) {
        TransitionId t = net.add_transition(pre + "wb.sign." + istr(ns) + istr(os));
        net.add_input_arc(wb_go, t);
        net.add_input_arc(nsign[ns], t);
        net.add_input_arc(wbit[0][os], t);
        net.add_output_arc(t, wbit[0][ns]);
        net.add_output_arc(t, e0);
      }
    PlaceId at = e0;
    for (std::size_t i = 0; i < 8; ++i) {
      PlaceId next = i < 7 ? net.add_place(pre + "wb.e" + istr(i + 1))
                           : net.add_place(pre + "wb.m1");
      for (int nv = 0; nv < 2; ++nv)
        for (int ov = 0; ov < 2; ++ov) {
          TransitionId t =
              net.add_transition(pre + "wb.e" + istr(i) + "." + istr(nv) + istr(ov));
          net.add_input_arc(at, t);
          net.add_input_arc(nexp[i][nv], t);
          net.add_input_arc(wbit[1 + i][ov], t);
          net.add_output_arc(t, wbit[1 + i][nv]);
          net.add_output_arc(t, next);
        }
      at = next;
    }
    for (std::size_t k = 1; k <= 23; ++k) {
      PlaceId next = k < 23 ? net.add_place(pre + "wb.m" + istr(k + 1))
                            : net.add_place(pre + "wb.s24");
      for (int nv = 0; nv < 2; ++nv)
        for (int ov = 0; ov < 2; ++ov) {
          TransitionId t =
              net.add_transition(pre + "wb.m" + istr(k) + "." + istr(nv) + istr(ov));
          net.add_input_arc(at, t);
          net.add_input_arc(res[k][nv], t);
          net.add_input_arc(wbit[8 + k][ov], t);
          net.add_output_arc(t, wbit[8 + k][nv]);
          net.add_output_arc(t, next);
        }
      at = next;
    }
    for (std::size_t k = 24; k < kCells; ++k) {
      PlaceId next = k + 1 < kCells ? net.add_place(pre + "wb.s" + istr(k + 1))
                                    : net.add_place(pre + "wb.si");
      for (int v = 0; v < 2; ++v) {
        TransitionId t = net.add_transition(pre + "wb.s" + istr(k) + "." + istr(v));
        net.add_input_arc(at, t);
        net.add_input_arc(res[k][v], t);
        net.add_output_arc(t, next);
      }
      at = next;
    }
    for (int v = 0; v < 2; ++v) {
      TransitionId t = net.add_transition(pre + "wb.si." + istr(v));
      net.add_input_arc(at, t);
      net.add_input_arc(res[0][v], t);
      net.add_output_arc(t, upd_fin);
    }
  }

  // zero path: consume the unused sign token, then force every register bit
  // to 0 (the grid was already drained by the flush chain)
  {
    PlaceId z0 = net.add_place(pre + "wb.z0");
    for (int v = 0; v < 2; ++v) {
      TransitionId t = net.add_transition(pre + "wb.zs." + istr(v));
      net.add_input_arc(wb_zgo, t);
      net.add_input_arc(nsign[v], t);
      net.add_output_arc(t, z0);
    }
    PlaceId at = z0;
    for (std::size_t b = 0; b < 32; ++b) {
      PlaceId next = b + 1 < 32 ? net.add_place(pre + "wb.z" + istr(b + 1)) : upd_fin;
      for (int ov = 0; ov < 2; ++ov) {
        TransitionId t = net.add_transition(pre + "wb.z" + istr(b) + "." + istr(ov));
        net.add_input_arc(at, t);
        net.add_input_arc(wbit[b][ov], t);
        net.add_output_arc(t, wbit[b][0]);
        net.add_output_arc(t, next);
      }
      at = next;
    }
  }

  // saturation path: write sign, exponent 127 and an all-ones mantissa, then
  // drain the full result grid
  {
    PlaceId e0 = net.add_place(pre + "sat.e0");
    for (int ns = 0; ns < 2; ++ns)
      for (int os = 0; os < 2; ++os) {
        TransitionId t = net.add_transition(pre + "sat.sign." + istr(ns) + istr(os));
        net.add_input_arc(ar_sat, t);
        net.add_input_arc(nsign[ns], t);
        net.add_input_arc(wbit[0][os], t);
        net.add_output_arc(t, wbit[0][ns]);
        net.add_output_arc(t, e0);
      }
    PlaceId at = e0;
    for (std::size_t i = 0; i < 8; ++i) {
      PlaceId next = i < 7 ? net.add_place(pre + "sat.e" + istr(i + 1))
                           : net.add_place(pre + "sat.m1");
      for (int ov = 0; ov < 2; ++ov) {
        TransitionId t = net.add_transition(pre + "sat.e" + istr(i) + "." + istr(ov));
        net.add_input_arc(at, t);
        net.add_input_arc(wbit[1 + i][ov], t);
        net.add_output_arc(t, wbit[1 + i][i == 0 ? 0 : 1]);
        net.add_output_arc(t, next);
      }
      at = next;
    }
    for (std::size_t k = 1; k <= 23; ++k) {
      PlaceId next = k < 23 ? net.add_place(pre + "sat.m" + istr(k + 1))
                            : net.add_place(pre + "sat.r0");
      for (int ov = 0; ov < 2; ++ov) {
        TransitionId t = net.add_transition(pre + "sat.m" + istr(k) + "." + istr(ov));
        net.add_input_arc(at, t);
        net.add_input_arc(wbit[8 + k][ov], t);
        net.add_output_arc(t, wbit[8 + k][1]);
        net.add_output_arc(t, next);
      }
      at = next;
    }
    for (std::size_t s = 0; s < kCells; ++s) {
      PlaceId next = s + 1 < kCells ? net.add_place(pre + "sat.r" + istr(s + 1)) : upd_fin;
      for (int v = 0; v < 2; ++v) {
        TransitionId t = net.add_transition(pre + "sat.r" + istr(s) + "." + istr(v));
        net.add_input_arc(at, t);
        net.add_input_arc(res[s][v], t);
        net.add_output_arc(t, next);
      }
      at = next;
    }
  }

  if (instr) {
    capture_chain("upd", upd_fin, done);
    Port pi;
    pi.name = "rec.init";
    pi.role = PortRole::Control;
    Port pu;
    pu.name = "rec.upd";
    pu.role = PortRole::Control;
    for (std::size_t b = 0; b < 32; ++b)
      for (int v = 0; v < 2; ++v) {
        pi.places.push_back(pre + "rec.init." + istr(b) + "." + istr(v));
        pu.places.push_back(pre + "rec.upd." + istr(b) + "." + istr(v));
      }
    seg.ports.push_back(std::move(pi));
    seg.ports.push_back(std::move(pu));
  }

  net.finalize();
  return seg;
}

}  // namespace blueprints
