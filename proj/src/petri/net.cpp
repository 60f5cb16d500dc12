#include "petri/net.hpp"

#include <algorithm>
#include <stdexcept>

namespace petri {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t Marking::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint64_t w : bits_) {
    h ^= w;
    h *= 0x100000001b3ull;
  }
  for (std::uint32_t c : counts_) {
    h ^= splitmix64(c + 0x9e37u);
    h *= 0x100000001b3ull;
  }
  return h;
}

void Net::require_mutable() const {
  if (finalized_) throw std::logic_error("net is finalized; structural edits are not allowed");
}

void Net::require_finalized() const {
  if (!finalized_) throw std::logic_error("net must be finalized before semantic queries");
}

PlaceId Net::add_place(const std::string& name, const std::string& label, PlaceKind kind,
                       std::uint32_t bound) {
  require_mutable();
  if (place_by_name_.count(name)) throw std::invalid_argument("duplicate place name: " + name);
  if (kind == PlaceKind::Standard && bound != 1)
    throw std::invalid_argument("standard places have bound 1: " + name);
  if (kind == PlaceKind::Counter && bound == 0)
    throw std::invalid_argument("counter bound must be positive: " + name);
  PlaceId id = PlaceId(places_.size());
  places_.push_back({name, label, kind, bound});
  place_by_name_.emplace(name, id);
  counter_slot_.push_back(kind == PlaceKind::Counter ? std::uint32_t(counter_slots_++) : kNoIndex);
  return id;
}

TransitionId Net::add_transition(const std::string& name, const std::string& label) {
  require_mutable();
  if (transition_by_name_.count(name))
    throw std::invalid_argument("duplicate transition name: " + name);
  TransitionId id = TransitionId(transitions_.size());
  transitions_.push_back({name, label});
  transition_by_name_.emplace(name, id);
  return id;
}

void Net::add_input_arc(PlaceId p, TransitionId t, ArcKind kind) {
  add_arc(NodeRef::place(p), NodeRef::transition(t), kind);
}

void Net::add_output_arc(TransitionId t, PlaceId p) {
  add_arc(NodeRef::transition(t), NodeRef::place(p), ArcKind::Normal);
}

void Net::add_arc(NodeRef source, NodeRef target, ArcKind kind) {
  require_mutable();
  if (source.type == target.type) throw std::invalid_argument("arcs must connect place and transition");
  if (kind == ArcKind::Read && source.type != NodeType::Place)
    throw std::invalid_argument("read arcs run from place to transition");
  std::size_t np = places_.size(), nt = transitions_.size();
  auto in_range = [&](NodeRef n) {
    return n.index < (n.type == NodeType::Place ? np : nt);
  };
  if (!in_range(source) || !in_range(target)) throw std::out_of_range("arc endpoint out of range");
  arcs_.push_back({source, target, kind});
}

void Net::ensure_initial_capacity() {
  if (initial_.words().size() * 64 >= num_places() && initial_.counts().size() >= counter_slots_)
    return;
  Marking grown(num_places(), counter_slots_);
  std::size_t old_bits = initial_.words().size() * 64;
  for (PlaceId q = 0; q < PlaceId(num_places()); ++q)
    if (q < old_bits && counter_slot_[q] == kNoIndex && initial_.bit(q)) grown.set_bit(q);
  for (std::uint32_t s = 0; s < initial_.counts().size() && s < counter_slots_; ++s)
    grown.set_count(s, initial_.count(s));
  initial_ = grown;
}

void Net::mark_initial(PlaceId p, std::uint32_t tokens) {
  require_mutable();
  ensure_initial_capacity();
  const PlaceRecord& rec = places_[p];
  if (rec.kind == PlaceKind::Standard) {
    if (tokens > 1) throw std::invalid_argument("standard place cannot hold " + std::to_string(tokens));
    if (tokens == 1)
      initial_.set_bit(p);
    else
      initial_.clear_bit(p);
  } else {
    if (tokens > rec.bound) throw std::invalid_argument("counter initial count exceeds bound: " + rec.name);
    initial_.set_count(counter_slot_[p], tokens);
  }
}

void Net::finalize() {
  if (finalized_) return;
  consume_.assign(transitions_.size(), {});
  read_.assign(transitions_.size(), {});
  produce_.assign(transitions_.size(), {});
  p_consumers_.assign(places_.size(), {});
  p_readers_.assign(places_.size(), {});
  p_producers_.assign(places_.size(), {});
  for (const ArcRecord& a : arcs_) {
    if (a.source.type == NodeType::Place) {
      if (a.kind == ArcKind::Read) {
        read_[a.target.index].push_back(a.source.index);
        p_readers_[a.source.index].push_back(a.target.index);
      } else {
        consume_[a.target.index].push_back(a.source.index);
        p_consumers_[a.source.index].push_back(a.target.index);
      }
    } else {
      produce_[a.source.index].push_back(a.target.index);
      p_producers_[a.target.index].push_back(a.source.index);
    }
  }
  place_hash_.resize(places_.size());
  for (PlaceId p = 0; p < places_.size(); ++p) place_hash_[p] = splitmix64(p);
  ensure_initial_capacity();
  finalized_ = true;
}

std::optional<PlaceId> Net::find_place(const std::string& name) const {
  auto it = place_by_name_.find(name);
  if (it == place_by_name_.end()) return std::nullopt;
  return it->second;
}

std::optional<TransitionId> Net::find_transition(const std::string& name) const {
  auto it = transition_by_name_.find(name);
  if (it == transition_by_name_.end()) return std::nullopt;
  return it->second;
}

PlaceId Net::place_checked(const std::string& name) const {
  auto p = find_place(name);
  if (!p) throw std::out_of_range("no such place: " + name);
  return *p;
}

TransitionId Net::transition_checked(const std::string& name) const {
  auto t = find_transition(name);
  if (!t) throw std::out_of_range("no such transition: " + name);
  return *t;
}

Marking Net::empty_marking() const { return Marking(num_places(), counter_slots_); }

bool Net::has_token(const Marking& m, PlaceId p) const {
  std::uint32_t slot = counter_slot_[p];
  return slot == kNoIndex ? m.bit(p) : m.count(slot) > 0;
}

void Net::remove_token(Marking& m, PlaceId p) const {
  std::uint32_t slot = counter_slot_[p];
  if (slot == kNoIndex)
    m.clear_bit(p);
  else
    m.set_count(slot, m.count(slot) - 1);
}

bool Net::add_token(Marking& m, PlaceId p) const {
  std::uint32_t slot = counter_slot_[p];
  if (slot == kNoIndex) {
    if (m.bit(p)) return false;
    m.set_bit(p);
    return true;
  }
  if (m.count(slot) >= places_[p].bound) return false;
  m.set_count(slot, m.count(slot) + 1);
  return true;
}

bool enabled(const Net& net, const Marking& m, TransitionId t) {
  net.require_finalized();
  for (PlaceId p : net.consume_[t])
    if (!net.has_token(m, p)) return false;
  for (PlaceId p : net.read_[t])
    if (!net.has_token(m, p)) return false;
  return true;
}

std::optional<SafetyViolation> fire_in_place(const Net& net, Marking& m, TransitionId t) {
  if (!enabled(net, m, t))
    throw std::logic_error("fired disabled transition: " + net.transition(t).name);
  for (PlaceId p : net.consumed(t)) net.remove_token(m, p);
  for (PlaceId p : net.produced(t))
    if (!net.add_token(m, p)) return SafetyViolation{p, t};
  return std::nullopt;
}

std::variant<Marking, SafetyViolation> fire(const Net& net, const Marking& m, TransitionId t) {
  Marking next = m;
  if (auto v = fire_in_place(net, next, t)) return *v;
  return next;
}

std::vector<int> incidence(const Net& net) {
  std::size_t np = net.num_places(), nt = net.num_transitions();
  std::vector<int> c(np * nt, 0);
  for (const ArcRecord& a : net.arcs()) {
    if (a.kind == ArcKind::Read) continue;
    if (a.source.type == NodeType::Place)
      c[a.source.index * nt + a.target.index] -= 1;
    else
      c[a.target.index * nt + a.source.index] += 1;
  }
  return c;
}

std::vector<NodeRef> preset(const Net& net, NodeRef node) {
  std::vector<NodeRef> out;
  for (const ArcRecord& a : net.arcs())
    if (a.target == node && a.kind == ArcKind::Normal) out.push_back(a.source);
  return out;
}

std::vector<NodeRef> postset(const Net& net, NodeRef node) {
  std::vector<NodeRef> out;
  for (const ArcRecord& a : net.arcs())
    if (a.source == node && a.kind == ArcKind::Normal) out.push_back(a.target);
  return out;
}

std::vector<NodeRef> readset(const Net& net, TransitionId t) {
  std::vector<NodeRef> out;
  NodeRef me = NodeRef::transition(t);
  for (const ArcRecord& a : net.arcs())
    if (a.kind == ArcKind::Read && a.target == me) out.push_back(a.source);
  return out;
}

NetAssembler::NetAssembler(const Net& base) {
  if (base.finalized()) {
    // re-open a finalized net by structural copy
    Net fresh;
    for (const auto& pr : base.places()) fresh.add_place(pr.name, pr.label, pr.kind, pr.bound);
    for (const auto& tr : base.transitions()) fresh.add_transition(tr.name, tr.label);
    for (const auto& a : base.arcs()) fresh.add_arc(a.source, a.target, a.kind);
    for (PlaceId p = 0; p < PlaceId(base.num_places()); ++p) {
      std::uint32_t slot = base.counter_slot(p);
      if (slot == kNoIndex) {
        if (!base.initial_marking().words().empty() && base.initial_marking().bit(p))
          fresh.mark_initial(p, 1);
      } else if (slot < base.initial_marking().counts().size()) {
        fresh.mark_initial(p, base.initial_marking().count(slot));
      }
    }
    net_ = std::move(fresh);
  } else {
    net_ = base;
  }
}

void NetAssembler::append(const Net& b, const std::map<std::string, std::string>& fuse) {
  Net& a = net_;
  // resolve fused names and validate the pairing
  std::vector<PlaceId> map_b(b.num_places(), kNoIndex);
  for (PlaceId pb = 0; pb < PlaceId(b.num_places()); ++pb) {
    const PlaceRecord& rec = b.place(pb);
    auto it = fuse.find(rec.name);
    if (it == fuse.end()) continue;
    auto pa = a.find_place(it->second);
    if (!pa) throw std::invalid_argument("fuse target missing: " + it->second);
    if (a.place(*pa).kind != rec.kind)
      throw std::invalid_argument("fused places disagree on kind: " + rec.name + " -> " + it->second);
    bool a_marked = !a.initial_marking().words().empty() && a.counter_slot(*pa) == kNoIndex &&
                    a.initial_marking().bit(*pa);
    bool b_marked = !b.initial_marking().words().empty() && b.counter_slot(pb) == kNoIndex &&
                    b.initial_marking().bit(pb);
    if (a_marked && b_marked)
      throw std::invalid_argument("cannot fuse two marked places: " + rec.name);
    map_b[pb] = *pa;
  }
  for (PlaceId pb = 0; pb < PlaceId(b.num_places()); ++pb) {
    if (map_b[pb] != kNoIndex) continue;
    const PlaceRecord& rec = b.place(pb);
    map_b[pb] = a.add_place(rec.name, rec.label, rec.kind, rec.bound);
  }
  std::vector<TransitionId> tmap(b.num_transitions());
  for (TransitionId tb = 0; tb < TransitionId(b.num_transitions()); ++tb) {
    const TransitionRecord& rec = b.transition(tb);
    tmap[tb] = a.add_transition(rec.name, rec.label);
  }
  for (const ArcRecord& arc : b.arcs()) {
    NodeRef s = arc.source.type == NodeType::Place ? NodeRef::place(map_b[arc.source.index])
                                                   : NodeRef::transition(tmap[arc.source.index]);
    NodeRef t = arc.target.type == NodeType::Place ? NodeRef::place(map_b[arc.target.index])
                                                   : NodeRef::transition(tmap[arc.target.index]);
    a.add_arc(s, t, arc.kind);
  }
  if (!b.initial_marking().words().empty() || !b.initial_marking().counts().empty()) {
    for (PlaceId pb = 0; pb < PlaceId(b.num_places()); ++pb) {
      std::uint32_t slot = b.counter_slot(pb);
      if (slot == kNoIndex) {
        if (!b.initial_marking().words().empty() && b.initial_marking().bit(pb))
          a.mark_initial(map_b[pb], 1);
      } else if (slot < b.initial_marking().counts().size() && b.initial_marking().count(slot) > 0) {
        a.mark_initial(map_b[pb], b.initial_marking().count(slot));
      }
    }
  }
}

Net NetAssembler::take() {
  net_.finalize();
  return std::move(net_);
}

Net merge(const Net& a, const Net& b, const std::map<std::string, std::string>& fuse) {
  NetAssembler acc(a);
  acc.append(b, fuse);
  return acc.take();
}

}  // namespace petri
