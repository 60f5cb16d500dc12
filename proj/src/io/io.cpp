#include "io/io.hpp"

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace io {

using blueprints::Port;
using blueprints::PortRole;
using petri::ArcKind;
using petri::Net;
using petri::NodeRef;
using petri::NodeType;
using petri::PlaceId;
using petri::PlaceKind;
using petri::TransitionId;
using util::Rational;

namespace {

// stoll that rejects partial parses like "12.3" or "4x"
std::int64_t whole_int(const std::string& text) {
  std::size_t used = 0;
  std::int64_t value = std::stoll(text, &used);
  if (used != text.size()) throw std::invalid_argument("trailing characters in " + text);
  return value;
}

}  // namespace

util::Rational parse_rational(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational");
  auto slash = text.find('/');
  if (slash != std::string::npos) {
    std::int64_t den = whole_int(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator: " + text);
    return Rational(whole_int(text.substr(0, slash)), den);
  }
  auto dot = text.find('.');
  if (dot == std::string::npos) return Rational(whole_int(text));
  std::string digits = text.substr(0, dot) + text.substr(dot + 1);
  std::size_t frac = text.size() - dot - 1;
  if (frac == 0 || frac > 9) throw std::invalid_argument("bad decimal: " + text);
  std::int64_t den = 1;
  for (std::size_t i = 0; i < frac; ++i) den *= 10;
  return Rational(whole_int(digits), den);
}

bitfloat::Fp32Bits parse_hex_bits(const std::string& text) {
  if (text.size() != 10 || text.rfind("0x", 0) != 0)
    throw std::invalid_argument("expected 0x followed by 8 hex digits: " + text);
  std::uint32_t word = 0;
  for (std::size_t i = 2; i < text.size(); ++i) {
    char c = char(std::tolower(std::uint8_t(text[i])));
    std::uint32_t digit;
    if (c >= '0' && c <= '9') digit = std::uint32_t(c - '0');
    else if (c >= 'a' && c <= 'f') digit = std::uint32_t(c - 'a' + 10);
    else throw std::invalid_argument("bad hex digit in " + text);
    word = (word << 4) | digit;
  }
  return bitfloat::Fp32Bits{word};
}

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

// splits a line into whitespace tokens; a token starting with '"' extends to
// the closing unescaped quote
std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(std::uint8_t(line[i]))) ++i;
    if (i >= line.size()) break;
    if (line[i] == '"') {
      std::string tok;
      ++i;
      while (i < line.size() && line[i] != '"') {
        if (line[i] == '\\' && i + 1 < line.size()) ++i;
        tok += line[i++];
      }
      if (i >= line.size()) throw std::invalid_argument("unterminated quote");
      ++i;
      out.push_back(std::move(tok));
    } else {
      std::size_t start = i;
      while (i < line.size() && !std::isspace(std::uint8_t(line[i]))) ++i;
      out.push_back(line.substr(start, i - start));
    }
  }
  return out;
}

const char* role_name(PortRole r) {
  switch (r) {
    case PortRole::ValueIn: return "value-in";
    case PortRole::ValueOut: return "value-out";
    case PortRole::Control: return "control";
    case PortRole::Done: return "done";
  }
  return "?";
}

PortRole role_from(const std::string& s) {
  if (s == "value-in") return PortRole::ValueIn;
  if (s == "value-out") return PortRole::ValueOut;
  if (s == "control") return PortRole::Control;
  if (s == "done") return PortRole::Done;
  throw std::invalid_argument("unknown port role: " + s);
}

bool has_values(PortRole r) {
  return r == PortRole::ValueIn || r == PortRole::ValueOut;
}

}  // namespace

std::string to_native(const Net& net, const std::vector<Port>& ports) {
  std::ostringstream out;
  out << "# one-safe petri net with read arcs\n";
  out << "PLACES\n";
  for (const auto& p : net.places()) {
    out << p.name << ' '
        << (p.kind == PlaceKind::Counter ? "counter" : "standard") << ' '
        << p.bound;
    if (!p.label.empty()) out << ' ' << quoted(p.label);
    out << '\n';
  }
  out << "TRANSITIONS\n";
  for (const auto& t : net.transitions()) {
    out << t.name;
    if (!t.label.empty()) out << ' ' << quoted(t.label);
    out << '\n';
  }
  out << "ARCS\n";
  for (const auto& a : net.arcs()) {
    const std::string& src = a.source.type == NodeType::Place
                                 ? net.place(a.source.index).name
                                 : net.transition(a.source.index).name;
    const std::string& dst = a.target.type == NodeType::Place
                                 ? net.place(a.target.index).name
                                 : net.transition(a.target.index).name;
    out << src << " -> " << dst;
    if (a.kind == ArcKind::Read) out << " read";
    out << '\n';
  }
  out << "MARKING\n";
  const auto& m = net.initial_marking();
  for (PlaceId p = 0; p < net.num_places(); ++p) {
    const auto& rec = net.place(p);
    std::uint32_t c = rec.kind == PlaceKind::Counter
                          ? m.count(net.counter_slot(p))
                          : (m.bit(p) ? 1 : 0);
    if (c) out << rec.name << ' ' << c << '\n';
  }
  if (!ports.empty()) {
    out << "PORTS\n";
    for (const auto& port : ports) {
      out << port.name << ' ' << role_name(port.role) << ' '
          << (port.boundary ? "boundary" : "owned") << ' ' << port.places.size();
      for (std::size_t i = 0; i < port.places.size(); ++i) {
        out << ' ' << port.places[i];
        if (has_values(port.role)) out << ' ' << port.values[i].to_string();
      }
      out << '\n';
    }
  }
  return out.str();
}

NetDocument from_native(const std::string& text) {
  NetDocument doc;
  Net& net = doc.net;
  enum Section { None, Places, Transitions, Arcs, Marking, Ports } section = None;
  std::istringstream in(text);
  std::string line;
  std::vector<std::pair<std::string, std::uint32_t>> marks;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tok = tokens(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok.size() == 1) {
      if (tok[0] == "PLACES") { section = Places; continue; }
      if (tok[0] == "TRANSITIONS") { section = Transitions; continue; }
      if (tok[0] == "ARCS") { section = Arcs; continue; }
      if (tok[0] == "MARKING") { section = Marking; continue; }
      if (tok[0] == "PORTS") { section = Ports; continue; }
    }
    auto fail = [&](const std::string& why) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": " + why);
    };
    switch (section) {
      case Places: {
        if (tok.size() < 3) fail("place needs name, kind, bound");
        PlaceKind kind = tok[1] == "counter" ? PlaceKind::Counter
                         : tok[1] == "standard"
                             ? PlaceKind::Standard
                             : (fail("unknown place kind " + tok[1]), PlaceKind::Standard);
        net.add_place(tok[0], tok.size() > 3 ? tok[3] : "", kind,
                      std::uint32_t(std::stoul(tok[2])));
        break;
      }
      case Transitions:
        net.add_transition(tok[0], tok.size() > 1 ? tok[1] : "");
        break;
      case Arcs: {
        if (tok.size() < 3 || tok[1] != "->") fail("arc needs 'src -> dst'");
        bool read = tok.size() > 3 && tok[3] == "read";
        auto p = net.find_place(tok[0]);
        if (p) {
          auto t = net.find_transition(tok[2]);
          if (!t) fail("unknown transition " + tok[2]);
          net.add_input_arc(*p, *t, read ? ArcKind::Read : ArcKind::Normal);
        } else {
          auto t = net.find_transition(tok[0]);
          auto q = net.find_place(tok[2]);
          if (!t || !q) fail("unknown arc endpoint");
          if (read) fail("read arcs go place -> transition");
          net.add_output_arc(*t, *q);
        }
        break;
      }
      case Marking:
        if (tok.size() < 2) fail("marking needs place and count");
        marks.emplace_back(tok[0], std::uint32_t(std::stoul(tok[1])));
        break;
      case Ports: {
        if (tok.size() < 4) fail("port needs name, role, scope, count");
        Port port;
        port.name = tok[0];
        port.role = role_from(tok[1]);
        port.boundary = tok[2] == "boundary";
        std::size_t n = std::stoul(tok[3]), at = 4;
        for (std::size_t i = 0; i < n; ++i) {
          if (at >= tok.size()) fail("port entry list too short");
          port.places.push_back(tok[at++]);
          if (has_values(port.role)) {
            if (at >= tok.size()) fail("port value missing");
            port.values.push_back(parse_rational(tok[at++]));
          }
        }
        doc.ports.push_back(std::move(port));
        break;
      }
      case None:
        fail("content before any section header");
    }
  }
  for (const auto& [name, count] : marks)
    net.mark_initial(net.place_checked(name), count);
  net.finalize();
  return doc;
}

// --- PNML -------------------------------------------------------------------

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string xml_unescape(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] != '&') {
      out += s[i++];
      continue;
    }
    auto end = s.find(';', i);
    if (end == std::string::npos) throw std::invalid_argument("bad entity");
    std::string ent = s.substr(i, end - i + 1);
    if (ent == "&amp;") out += '&';
    else if (ent == "&lt;") out += '<';
    else if (ent == "&gt;") out += '>';
    else if (ent == "&quot;") out += '"';
    else throw std::invalid_argument("unknown entity " + ent);
    i = end + 1;
  }
  return out;
}

// minimal scanning helpers for the dialect to_pnml emits
std::string attr_of(const std::string& tag, const std::string& name) {
  std::string key = name + "=\"";
  auto at = tag.find(key);
  if (at == std::string::npos)
    throw std::invalid_argument("missing attribute " + name);
  at += key.size();
  auto end = tag.find('"', at);
  return tag.substr(at, end - at);
}

std::string text_of(const std::string& element, const std::string& child) {
  auto at = element.find("<" + child);
  if (at == std::string::npos) return "";
  at = element.find("<text>", at);
  if (at == std::string::npos) return "";
  at += 6;
  auto end = element.find("</text>", at);
  return xml_unescape(element.substr(at, end - at));
}

}  // namespace

std::string to_pnml(const Net& net) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<pnml xmlns=\"http://www.pnml.org/version-2009/grammar/pnml\">\n"
      << "  <net id=\"net1\" type=\"http://www.pnml.org/version-2009/grammar/"
         "ptnet\">\n"
      << "    <page id=\"page1\">\n";
  const auto& m = net.initial_marking();
  for (PlaceId p = 0; p < net.num_places(); ++p) {
    const auto& rec = net.place(p);
    std::uint32_t c = rec.kind == PlaceKind::Counter
                          ? m.count(net.counter_slot(p))
                          : (m.bit(p) ? 1 : 0);
    out << "      <place id=\"p" << p << "\">\n"
        << "        <name><text>" << xml_escape(rec.name) << "</text></name>\n";
    if (c)
      out << "        <initialMarking><text>" << c << "</text></initialMarking>\n";
    if (rec.kind == PlaceKind::Counter)
      out << "        <toolspecific tool=\"bnnpn\" version=\"1\"><counter "
             "bound=\""
          << rec.bound << "\"/></toolspecific>\n";
    out << "      </place>\n";
  }
  for (TransitionId t = 0; t < net.num_transitions(); ++t)
    out << "      <transition id=\"t" << t << "\">\n"
        << "        <name><text>" << xml_escape(net.transition(t).name)
        << "</text></name>\n"
        << "      </transition>\n";
  std::size_t arc_id = 0;
  for (const auto& a : net.arcs()) {
    auto node_id = [&](NodeRef n) {
      return (n.type == NodeType::Place ? "p" : "t") + std::to_string(n.index);
    };
    if (a.kind == ArcKind::Read) {
      // lowered to a consume+produce pair, annotated for reconstruction
      out << "      <arc id=\"a" << arc_id++ << "\" source=\""
          << node_id(a.source) << "\" target=\"" << node_id(a.target) << "\">\n"
          << "        <toolspecific tool=\"bnnpn\" version=\"1\"><readarc "
             "side=\"in\"/></toolspecific>\n"
          << "      </arc>\n";
      out << "      <arc id=\"a" << arc_id++ << "\" source=\""
          << node_id(a.target) << "\" target=\"" << node_id(a.source) << "\">\n"
          << "        <toolspecific tool=\"bnnpn\" version=\"1\"><readarc "
             "side=\"out\"/></toolspecific>\n"
          << "      </arc>\n";
    } else {
      out << "      <arc id=\"a" << arc_id++ << "\" source=\""
          << node_id(a.source) << "\" target=\"" << node_id(a.target)
          << "\"/>\n";
    }
  }
  out << "    </page>\n  </net>\n</pnml>\n";
  return out.str();
}

Net from_pnml(const std::string& text) {
  Net net;
  std::map<std::string, PlaceId> places;
  std::map<std::string, TransitionId> transitions;
  std::vector<std::pair<std::string, std::uint32_t>> marks;

  std::size_t at = 0;
  while ((at = text.find("<place ", at)) != std::string::npos) {
    auto end = text.find("</place>", at);
    std::string element = text.substr(at, end - at);
    std::string id = attr_of(element, "id");
    std::string name = text_of(element, "name");
    std::uint32_t count = 0;
    std::string mk = text_of(element, "initialMarking");
    if (!mk.empty()) count = std::uint32_t(std::stoul(mk));
    PlaceKind kind = PlaceKind::Standard;
    std::uint32_t bound = 1;
    auto counter = element.find("<counter ");
    if (counter != std::string::npos) {
      kind = PlaceKind::Counter;
      auto close = element.find("/>", counter);
      bound = std::uint32_t(
          std::stoul(attr_of(element.substr(counter, close - counter), "bound")));
    }
    places[id] = net.add_place(name, "", kind, bound);
    if (count) marks.emplace_back(id, count);
    at = end;
  }
  at = 0;
  while ((at = text.find("<transition ", at)) != std::string::npos) {
    auto end = text.find("</transition>", at);
    std::string element = text.substr(at, end - at);
    transitions[attr_of(element, "id")] = net.add_transition(text_of(element, "name"));
    at = end;
  }
  at = 0;
  // read-arc halves keyed by (place, transition); paired on completion
  std::map<std::pair<std::string, std::string>, int> read_halves;
  while ((at = text.find("<arc ", at)) != std::string::npos) {
    auto close = text.find('>', at);
    std::string tag = text.substr(at, close - at);
    bool self_closed = !tag.empty() && tag.back() == '/';
    std::string element =
        self_closed ? tag : text.substr(at, text.find("</arc>", at) - at);
    std::string source = attr_of(tag, "source");
    std::string target = attr_of(tag, "target");
    bool read = element.find("<readarc ") != std::string::npos;
    if (read) {
      bool in_side = element.find("side=\"in\"") != std::string::npos;
      auto key = in_side ? std::make_pair(source, target)
                         : std::make_pair(target, source);
      if (++read_halves[key] == 2) {
        net.add_input_arc(places.at(key.first), transitions.at(key.second),
                          ArcKind::Read);
        read_halves.erase(key);
      }
    } else if (places.count(source)) {
      net.add_input_arc(places.at(source), transitions.at(target));
    } else {
      net.add_output_arc(transitions.at(source), places.at(target));
    }
    at = close;
  }
  if (!read_halves.empty())
    throw std::invalid_argument("unpaired lowered read arc in PNML input");
  for (const auto& [id, count] : marks) net.mark_initial(places.at(id), count);
  net.finalize();
  return net;
}

std::string to_dot(const Net& net) {
  std::ostringstream out;
  out << "digraph petri {\n  rankdir=LR;\n  node [fontsize=9];\n";
  const auto& m = net.initial_marking();
  for (PlaceId p = 0; p < net.num_places(); ++p) {
    const auto& rec = net.place(p);
    std::uint32_t c = rec.kind == PlaceKind::Counter
                          ? m.count(net.counter_slot(p))
                          : (m.bit(p) ? 1 : 0);
    out << "  \"" << rec.name << "\" [shape="
        << (rec.kind == PlaceKind::Counter ? "doublecircle" : "circle");
    if (c) out << ", style=filled, fillcolor=gray85, xlabel=\"" << c << "\"";
    out << "];\n";
  }
  for (const auto& t : net.transitions())
    out << "  \"" << t.name << "\" [shape=box"
        << (t.label.empty() ? "" : ", label=\"" + t.name + "\\n" + t.label + "\"")
        << "];\n";
  for (const auto& a : net.arcs()) {
    const std::string& src = a.source.type == NodeType::Place
                                 ? net.place(a.source.index).name
                                 : net.transition(a.source.index).name;
    const std::string& dst = a.target.type == NodeType::Place
                                 ? net.place(a.target.index).name
                                 : net.transition(a.target.index).name;
    out << "  \"" << src << "\" -> \"" << dst << "\"";
    if (a.kind == ArcKind::Read) out << " [style=dashed, arrowtail=odot, dir=both]";
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

// --- metrics ----------------------------------------------------------------

namespace {

double loss_share(const refbnn::StepMetrics& m, std::size_t hidden) {
  return double(m.loss) / double(1 + hidden);
}

}  // namespace

std::string metrics_csv(const blueprints::NetworkSpec& spec,
                        const std::vector<refbnn::StepMetrics>& series) {
  std::ostringstream out;
  std::vector<std::string> wnames;
  for (std::size_t w = 0; w < spec.weight_count(); ++w)
    wnames.push_back(blueprints::weight_name(spec, w));

  out << "cycle,epoch,vector,y_true";
  for (std::size_t j = 1; j <= spec.features; ++j) out << ",feat_" << j;
  for (std::size_t i = 1; i <= spec.hidden; ++i) out << ",s_" << i;
  for (std::size_t i = 1; i <= spec.hidden; ++i) out << ",x_" << i;
  for (std::size_t i = 1; i <= spec.hidden; ++i) out << ",o_" << i;
  out << ",z,prediction,loss,dldz";
  for (const auto& w : wnames) out << ",wb_" << w;
  for (const auto& w : wnames) out << ",gb_" << w;
  for (const auto& w : wnames) out << ",ste_" << w;
  for (const auto& w : wnames) out << ",gr_" << w;
  for (const auto& w : wnames) out << ",j10_" << w;
  for (const auto& w : wnames) out << ",w_init_" << w;
  for (const auto& w : wnames) out << ",w_upd_" << w;
  out << ",running_avg_loss\n";

  double cum = 0;
  for (std::size_t c = 0; c < series.size(); ++c) {
    const auto& s = series[c];
    cum += loss_share(s, spec.hidden);
    out << c << ',' << s.epoch << ',' << s.vector_index << ',' << s.y_true;
    for (int f : s.features) out << ',' << f;
    for (int v : s.pre_activations) out << ',' << v;
    for (int v : s.activations) out << ',' << v;
    for (int v : s.neuron_outputs) out << ',' << v;
    out << ',' << s.output_sum << ',' << s.prediction << ',' << s.loss << ','
        << s.dldz;
    for (int v : s.binary_weights) out << ',' << v;
    for (int v : s.binary_grad) out << ',' << v;
    for (int v : s.ste) out << ',' << v;
    for (int v : s.real_grad) out << ',' << v;
    for (int v : s.j_tenths) out << ',' << v;
    for (auto b : s.initial_bits) out << ',' << bitfloat::to_hex(b);
    for (auto b : s.updated_bits) out << ',' << bitfloat::to_hex(b);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", cum / double(c + 1));
    out << ',' << buf << '\n';
  }
  return out.str();
}

std::string metrics_json(const blueprints::NetworkSpec& spec,
                         const std::vector<refbnn::StepMetrics>& series) {
  nlohmann::json root = nlohmann::json::array();
  std::vector<std::string> wnames;
  for (std::size_t w = 0; w < spec.weight_count(); ++w)
    wnames.push_back(blueprints::weight_name(spec, w));

  double cum = 0;
  for (std::size_t c = 0; c < series.size(); ++c) {
    const auto& s = series[c];
    cum += loss_share(s, spec.hidden);
    nlohmann::json row;
    row["cycle"] = c;
    row["epoch"] = s.epoch;
    row["vector"] = s.vector_index;
    row["y_true"] = s.y_true;
    row["features"] = s.features;
    row["s"] = s.pre_activations;
    row["x"] = s.activations;
    row["o"] = s.neuron_outputs;
    row["z"] = s.output_sum;
    row["prediction"] = s.prediction;
    row["loss"] = s.loss;
    row["dldz"] = s.dldz;
    nlohmann::json weights = nlohmann::json::object();
    for (std::size_t w = 0; w < wnames.size(); ++w) {
      nlohmann::json entry;
      entry["binary"] = s.binary_weights[w];
      entry["grad_binary"] = s.binary_grad[w];
      entry["ste"] = s.ste[w];
      entry["grad_real"] = s.real_grad[w];
      entry["j_tenths"] = s.j_tenths[w];
      entry["bits_initial"] = bitfloat::to_hex(s.initial_bits[w]);
      entry["bits_updated"] = bitfloat::to_hex(s.updated_bits[w]);
      weights[wnames[w]] = std::move(entry);
    }
    row["weights"] = std::move(weights);
    row["running_avg_loss"] = cum / double(c + 1);
    root.push_back(std::move(row));
  }
  return root.dump(2) + "\n";
}

}  // namespace io
