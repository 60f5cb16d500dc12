#include "blueprints/segment.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace blueprints {

using util::Rational;

ValueDomain::ValueDomain(std::vector<Rational> vs) : values(std::move(vs)) {
  if (values.empty()) throw std::invalid_argument("value domain must not be empty");
  std::sort(values.begin(), values.end());
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] == values[i - 1])
      throw std::invalid_argument("duplicate value in domain: " + values[i].to_string());
}

std::size_t ValueDomain::index_of(const Rational& v) const {
  auto it = std::lower_bound(values.begin(), values.end(), v);
  if (it == values.end() || !(*it == v))
    throw std::out_of_range("value not in domain: " + v.to_string());
  return std::size_t(it - values.begin());
}

bool ValueDomain::contains(const Rational& v) const {
  auto it = std::lower_bound(values.begin(), values.end(), v);
  return it != values.end() && *it == v;
}

ValueDomain ValueDomain::integers(int lo, int hi) {
  std::vector<Rational> vs;
  for (int v = lo; v <= hi; ++v) vs.emplace_back(v);
  return ValueDomain(std::move(vs));
}

const Port* Segment::find_port(const std::string& port_name) const {
  for (const Port& p : ports)
    if (p.name == port_name) return &p;
  return nullptr;
}

const Port& Segment::port(const std::string& port_name) const {
  const Port* p = find_port(port_name);
  if (!p) throw std::out_of_range("segment " + name + " has no port " + port_name);
  return *p;
}

std::size_t Segment::owned_places() const {
  std::size_t boundary = 0;
  for (const Port& p : ports)
    if (p.boundary) boundary += p.places.size();
  return net.num_places() - boundary;
}

namespace {

// Enumerates the cartesian product of the input domains and fills rows via fn.
template <typename Fn>
FunctionTable build_table(std::vector<FunctionTable::Input> inputs, Fn&& fn) {
  FunctionTable t;
  t.inputs = std::move(inputs);
  std::vector<std::size_t> idx(t.inputs.size(), 0);
  std::vector<Rational> outs;
  std::vector<std::vector<std::size_t>> combos;
  for (;;) {
    std::vector<Rational> args;
    args.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      args.push_back(t.inputs[i].domain.values[idx[i]]);
    outs.push_back(fn(args));
    combos.push_back(idx);
    std::size_t i = idx.size();
    while (i > 0) {
      --i;
      if (++idx[i] < t.inputs[i].domain.size()) break;
      idx[i] = 0;
      if (i == 0) {
        std::vector<Rational> image = outs;
        std::sort(image.begin(), image.end());
        image.erase(std::unique(image.begin(), image.end()), image.end());
        t.output = ValueDomain(std::move(image));
        for (std::size_t r = 0; r < combos.size(); ++r)
          t.rows.push_back({combos[r], t.output.index_of(outs[r])});
        return t;
      }
    }
  }
}

}  // namespace

FunctionTable table_sign(const ValueDomain& domain) {
  return build_table({{"x", domain, false}}, [](const std::vector<Rational>& a) {
    return a[0] >= Rational(0) ? Rational(1) : Rational(-1);
  });
}

FunctionTable table_hardtanh(const ValueDomain& domain) {
  return build_table({{"x", domain, false}}, [](const std::vector<Rational>& a) {
    if (a[0] > Rational(1)) return Rational(1);
    if (a[0] < Rational(-1)) return Rational(-1);
    return a[0];
  });
}

FunctionTable table_product(const ValueDomain& a, const ValueDomain& b) {
  return build_table({{"a", a, false}, {"b", b, false}},
                     [](const std::vector<Rational>& v) { return v[0] * v[1]; });
}

FunctionTable table_sum(const ValueDomain& a, const ValueDomain& b) {
  return build_table({{"a", a, false}, {"b", b, false}},
                     [](const std::vector<Rational>& v) { return v[0] + v[1]; });
}

HingeTables table_hinge(const ValueDomain& z_domain) {
  ValueDomain y({Rational(-1), Rational(1)});
  HingeTables h;
  h.mul = build_table({{"y", y, false}, {"z", z_domain, false}},
                      [](const std::vector<Rational>& v) { return v[0] * v[1]; });
  h.sub = build_table({{"m", h.mul.output, false}},
                      [](const std::vector<Rational>& v) { return Rational(1) - v[0]; });
  h.clip = build_table({{"u", h.sub.output, false}}, [](const std::vector<Rational>& v) {
    return v[0] > Rational(0) ? v[0] : Rational(0);
  });
  return h;
}

FunctionTable table_dloss(const ValueDomain& z_domain) {
  ValueDomain y({Rational(-1), Rational(1)});
  return build_table({{"y", y, false}, {"z", z_domain, false}},
                     [](const std::vector<Rational>& v) {
                       return v[0] * v[1] < Rational(1) ? -v[0] : Rational(0);
                     });
}

FunctionTable table_grad(GradKind kind) {
  ValueDomain dldz = ValueDomain::integers(-1, 1);
  ValueDomain pm1({Rational(-1), Rational(1)});
  switch (kind) {
    case GradKind::InputHidden: {
      ValueDomain feat = ValueDomain::integers(0, 1);
      // dL/dz * W_bx * 1 * a
      return build_table({{"dldz", dldz, false}, {"wbx", pm1, false}, {"a", feat, false}},
                         [](const std::vector<Rational>& v) { return v[0] * v[1] * v[2]; });
    }
    case GradKind::HiddenOutput:
      // dL/dz * x
      return build_table({{"dldz", dldz, false}, {"x", pm1, false}},
                         [](const std::vector<Rational>& v) { return v[0] * v[1]; });
    case GradKind::Real: {
      ValueDomain ste = ValueDomain::integers(0, 1);
      // dL/dW_b * STE
      return build_table({{"gb", dldz, false}, {"ste", ste, false}},
                         [](const std::vector<Rational>& v) { return v[0] * v[1]; });
    }
  }
  throw std::logic_error("unreachable");
}

FunctionTable table_lr_product() {
  std::vector<Rational> rates;
  for (int k = 1; k <= 9; ++k) rates.push_back(Rational::tenths(k));
  ValueDomain eta(std::move(rates));
  ValueDomain g = ValueDomain::integers(-1, 1);
  FunctionTable t = build_table({{"eta", eta, true}, {"g", g, false}},
                                [](const std::vector<Rational>& v) { return v[0] * v[1]; });
  // the full signed output grid, not just the image of the enumerated rows
  std::vector<Rational> outs;
  for (int k = -9; k <= 9; ++k) outs.push_back(Rational::tenths(k));
  ValueDomain full(std::move(outs));
  for (auto& row : t.rows) {
    const Rational& v = t.output.values[row.out];
    row.out = full.index_of(v);
  }
  t.output = full;
  return t;
}

Segment gen_function_mapper(const std::string& name, const FunctionTable& table,
                            const MapperOptions& opts) {
  if (table.inputs.empty()) throw std::invalid_argument("mapper needs at least one input");
  if (table.output.size() == 0) throw std::invalid_argument("mapper output domain empty");
  if (opts.fanout == 0) throw std::invalid_argument("fanout must be positive");

  std::string prefix = opts.prefix.empty() ? name + "." : opts.prefix;
  Segment seg;
  seg.name = name;
  seg.category = "inference";

  // boundary input places, one group per input
  std::vector<std::vector<petri::PlaceId>> in_places(table.inputs.size());
  for (std::size_t i = 0; i < table.inputs.size(); ++i) {
    const auto& in = table.inputs[i];
    Port port;
    port.name = in.name;
    port.role = PortRole::ValueIn;
    port.boundary = true;
    for (const Rational& v : in.domain.values) {
      std::string pn = prefix + in.name + "." + v.to_string();
      in_places[i].push_back(seg.net.add_place(pn));
      port.values.push_back(v);
      port.places.push_back(pn);
    }
    seg.ports.push_back(std::move(port));
  }

  // owned output copies
  std::vector<std::vector<petri::PlaceId>> out_places(opts.fanout);
  for (std::size_t c = 0; c < opts.fanout; ++c) {
    Port port;
    port.name = opts.fanout == 1 ? "out" : "out" + std::to_string(c + 1);
    port.role = PortRole::ValueOut;
    std::string group = opts.fanout == 1 ? prefix + "out." : prefix + "out" + std::to_string(c + 1) + ".";
    for (const Rational& v : table.output.values) {
      std::string pn = group + v.to_string();
      out_places[c].push_back(seg.net.add_place(pn));
      port.values.push_back(v);
      port.places.push_back(pn);
    }
    seg.ports.push_back(std::move(port));
  }

  std::vector<petri::PlaceId> rec_places;
  if (opts.recorder) {
    Port port;
    port.name = "rec";
    port.role = PortRole::ValueOut;
    for (const Rational& v : table.output.values) {
      std::string pn = prefix + "rec." + v.to_string();
      rec_places.push_back(seg.net.add_place(pn));
      port.values.push_back(v);
      port.places.push_back(pn);
    }
    seg.ports.push_back(std::move(port));
  }

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    petri::TransitionId t = seg.net.add_transition(prefix + "t" + std::to_string(r));
    for (std::size_t i = 0; i < row.in.size(); ++i)
      seg.net.add_input_arc(in_places[i][row.in[i]], t,
                            table.inputs[i].read_only ? petri::ArcKind::Read
                                                      : petri::ArcKind::Normal);
    for (std::size_t c = 0; c < opts.fanout; ++c)
      seg.net.add_output_arc(t, out_places[c][row.out]);
    if (opts.recorder) seg.net.add_output_arc(t, rec_places[row.out]);
  }

  seg.net.finalize();
  return seg;
}

void NetworkSpec::validate() const {
  if (features == 0 || hidden == 0)
    throw std::invalid_argument("feature and hidden counts must be positive");
  if (dataset.empty()) throw std::invalid_argument("dataset must not be empty");
  for (const DataRow& row : dataset) {
    if (row.bits.size() != features)
      throw std::invalid_argument("dataset row width does not match feature count");
    for (int b : row.bits)
      if (b != 0 && b != 1) throw std::invalid_argument("dataset bits must be 0 or 1");
    if (row.label != -1 && row.label != 1)
      throw std::invalid_argument("labels must be -1 or +1");
  }
  if (learning_rate_tenths.empty())
    throw std::invalid_argument("at least one learning rate is required");
  for (int k : learning_rate_tenths)
    if (k < 1 || k > 9)
      throw std::invalid_argument("learning rates must lie in {0.1, .., 0.9}");
  if (epoch_budget && *epoch_budget == 0)
    throw std::invalid_argument("epoch budget must be positive when present");
  if (!initial_weights.empty()) {
    if (initial_weights.size() != weight_count())
      throw std::invalid_argument("initial weight list must have F*H + H entries");
    for (bitfloat::Fp32Bits w : initial_weights) bitfloat::validate(w);
  }
}

NetworkSpec NetworkSpec::xor_default() {
  NetworkSpec spec;
  spec.features = 2;
  spec.hidden = 2;
  spec.dataset = {{{0, 0}, -1}, {{0, 1}, 1}, {{1, 0}, 1}, {{1, 1}, -1}};
  spec.learning_rate_tenths = {6};
  spec.seed = 1;
  return spec;
}

std::string weight_name(const NetworkSpec& spec, std::size_t index) {
  if (index < spec.features * spec.hidden) {
    std::size_t i = index / spec.features, j = index % spec.features;
    return "w_ih_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
  }
  std::size_t i = index - spec.features * spec.hidden;
  if (i >= spec.hidden) throw std::out_of_range("weight index out of range");
  return "w_ho_" + std::to_string(i + 1);
}

std::vector<bitfloat::Fp32Bits> initial_weights(const NetworkSpec& spec) {
  if (!spec.initial_weights.empty()) return spec.initial_weights;
  std::mt19937_64 rng(spec.seed);
  std::vector<bitfloat::Fp32Bits> out;
  out.reserve(spec.weight_count());
  for (std::size_t i = 0; i < spec.weight_count(); ++i) {
    // magnitude k/1024 with k in [31, 993]: inside (0.03, 0.97), so early
    // updates stay clear of both zero flushes and the saturation boundary
    std::uint64_t k = 31 + rng() % 963;
    bool neg = rng() & 1;
    util::Rational mag(std::int64_t(k), 1024);
    out.push_back(bitfloat::encode(neg ? -mag : mag));
  }
  return out;
}

}  // namespace blueprints
