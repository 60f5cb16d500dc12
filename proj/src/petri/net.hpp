#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

// One-safe place/transition nets with read arcs and bounded counter places.
// A Net is immutable once finalize() has been called; Markings are plain
// values owned by whoever simulates or explores.

namespace petri {

using PlaceId = std::uint32_t;
using TransitionId = std::uint32_t;

constexpr std::uint32_t kNoIndex = 0xffffffffu;

enum class PlaceKind : std::uint8_t { Standard, Counter };

struct PlaceRecord {
  std::string name;
  std::string label;
  PlaceKind kind = PlaceKind::Standard;
  std::uint32_t bound = 1;  // capacity for Counter places, 1 for Standard
};

struct TransitionRecord {
  std::string name;
  std::string label;
};

enum class NodeType : std::uint8_t { Place, Transition };

struct NodeRef {
  NodeType type = NodeType::Place;
  std::uint32_t index = kNoIndex;

  static NodeRef place(PlaceId p) { return {NodeType::Place, p}; }
  static NodeRef transition(TransitionId t) { return {NodeType::Transition, t}; }
  bool operator==(const NodeRef&) const = default;
};

enum class ArcKind : std::uint8_t { Normal, Read };

struct ArcRecord {
  NodeRef source;
  NodeRef target;
  ArcKind kind = ArcKind::Normal;
};

class Net;

// Token distribution: a bitset over standard places plus per-slot counts for
// counter places. Construct through Net::initial_marking() or empty_marking().
class Marking {
 public:
  Marking() = default;
  Marking(std::size_t num_places, std::size_t num_counter_slots)
      : bits_((num_places + 63) / 64, 0), counts_(num_counter_slots, 0) {}

  bool bit(PlaceId p) const { return (bits_[p >> 6] >> (p & 63)) & 1u; }
  void set_bit(PlaceId p) { bits_[p >> 6] |= std::uint64_t(1) << (p & 63); }
  void clear_bit(PlaceId p) { bits_[p >> 6] &= ~(std::uint64_t(1) << (p & 63)); }

  std::uint32_t count(std::uint32_t slot) const { return counts_[slot]; }
  void set_count(std::uint32_t slot, std::uint32_t c) { counts_[slot] = c; }

  bool operator==(const Marking&) const = default;

  std::uint64_t hash() const;
  const std::vector<std::uint64_t>& words() const { return bits_; }
  const std::vector<std::uint32_t>& counts() const { return counts_; }

 private:
  std::vector<std::uint64_t> bits_;
  std::vector<std::uint32_t> counts_;
};

struct MarkingHash {
  std::size_t operator()(const Marking& m) const { return std::size_t(m.hash()); }
};

// Produced when a firing would push a standard place past one token or a
// counter past its bound. A detectable outcome, not an exception.
struct SafetyViolation {
  PlaceId place = kNoIndex;
  TransitionId transition = kNoIndex;
};

struct TraceStep {
  std::uint64_t index = 0;
  TransitionId transition = kNoIndex;
  std::uint64_t marking_digest = 0;
};

struct Trace {
  std::vector<TraceStep> steps;
};

class Net {
 public:
  PlaceId add_place(const std::string& name, const std::string& label = "",
                    PlaceKind kind = PlaceKind::Standard, std::uint32_t bound = 1);
  TransitionId add_transition(const std::string& name, const std::string& label = "");
  void add_input_arc(PlaceId p, TransitionId t, ArcKind kind = ArcKind::Normal);
  void add_output_arc(TransitionId t, PlaceId p);
  void add_arc(NodeRef source, NodeRef target, ArcKind kind = ArcKind::Normal);

  void mark_initial(PlaceId p, std::uint32_t tokens = 1);

  // Compiles adjacency. Mutation after finalize is a logic error.
  void finalize();
  bool finalized() const { return finalized_; }

  std::size_t num_places() const { return places_.size(); }
  std::size_t num_transitions() const { return transitions_.size(); }
  std::size_t num_arcs() const { return arcs_.size(); }
  std::size_t num_counter_slots() const { return counter_slots_; }

  const PlaceRecord& place(PlaceId p) const { return places_[p]; }
  const TransitionRecord& transition(TransitionId t) const { return transitions_[t]; }
  const std::vector<PlaceRecord>& places() const { return places_; }
  const std::vector<TransitionRecord>& transitions() const { return transitions_; }
  const std::vector<ArcRecord>& arcs() const { return arcs_; }

  std::optional<PlaceId> find_place(const std::string& name) const;
  std::optional<TransitionId> find_transition(const std::string& name) const;
  PlaceId place_checked(const std::string& name) const;
  TransitionId transition_checked(const std::string& name) const;

  // slot index for a counter place, kNoIndex for standard places
  std::uint32_t counter_slot(PlaceId p) const { return counter_slot_[p]; }

  Marking empty_marking() const;
  const Marking& initial_marking() const { return initial_; }
  void set_initial_marking(const Marking& m) { initial_ = m; }

  // compiled adjacency (valid after finalize)
  const std::vector<PlaceId>& consumed(TransitionId t) const { return consume_[t]; }
  const std::vector<PlaceId>& read(TransitionId t) const { return read_[t]; }
  const std::vector<PlaceId>& produced(TransitionId t) const { return produce_[t]; }
  const std::vector<TransitionId>& consumers_of(PlaceId p) const { return p_consumers_[p]; }
  const std::vector<TransitionId>& readers_of(PlaceId p) const { return p_readers_[p]; }
  const std::vector<TransitionId>& producers_of(PlaceId p) const { return p_producers_[p]; }

  bool has_token(const Marking& m, PlaceId p) const;
  // add/remove one token; remove on an empty place or add past the bound is
  // reported through the return value of add_token
  void remove_token(Marking& m, PlaceId p) const;
  bool add_token(Marking& m, PlaceId p) const;  // false on overflow

  std::uint64_t place_hash(PlaceId p) const { return place_hash_[p]; }

 private:
  void require_mutable() const;
  void require_finalized() const;
  void ensure_initial_capacity();

  std::vector<PlaceRecord> places_;
  std::vector<TransitionRecord> transitions_;
  std::vector<ArcRecord> arcs_;
  std::map<std::string, PlaceId> place_by_name_;
  std::map<std::string, TransitionId> transition_by_name_;
  std::vector<std::uint32_t> counter_slot_;
  std::size_t counter_slots_ = 0;
  Marking initial_;
  bool finalized_ = false;

  std::vector<std::vector<PlaceId>> consume_, read_, produce_;
  std::vector<std::vector<TransitionId>> p_consumers_, p_readers_, p_producers_;
  std::vector<std::uint64_t> place_hash_;

  friend bool enabled(const Net&, const Marking&, TransitionId);
  friend class NetAssembler;
};

// Enabling: every normal-preset place and every read-arc place of t holds a
// token (counters: count >= 1).
bool enabled(const Net& net, const Marking& m, TransitionId t);

// In-place firing. Precondition: enabled(net, m, t) — firing a disabled
// transition throws std::logic_error. Returns a violation instead of
// completing when a standard place would exceed one token or a counter its
// bound; the marking is left in the partially-fired state in that case, so
// callers treating violations as fatal should discard it.
std::optional<SafetyViolation> fire_in_place(const Net& net, Marking& m, TransitionId t);

// Value-returning variant of the firing rule.
std::variant<Marking, SafetyViolation> fire(const Net& net, const Marking& m, TransitionId t);

// Dense |P| x |T| incidence matrix, row-major by place. C(p,t) counts
// produced minus consumed tokens; read arcs contribute zero. Intended for
// small nets (tests, reports) — quadratic in size.
std::vector<int> incidence(const Net& net);

std::vector<NodeRef> preset(const Net& net, NodeRef node);
std::vector<NodeRef> postset(const Net& net, NodeRef node);
std::vector<NodeRef> readset(const Net& net, TransitionId t);

// Disjoint union of two nets with selected b-places fused onto a-places
// (map: b place name -> a place name). Non-fused b names must not collide
// with a names; fused pairs must agree on kind, and fusing two initially
// marked standard places is rejected.
Net merge(const Net& a, const Net& b, const std::map<std::string, std::string>& fuse);

// Incremental merge support: accumulate several nets into one without
// re-copying the accumulator. merge() is a thin wrapper over this.
class NetAssembler {
 public:
  NetAssembler() = default;
  explicit NetAssembler(const Net& base);

  // Appends `b`, fusing b places onto existing places by name.
  void append(const Net& b, const std::map<std::string, std::string>& fuse);
  Net take();  // finalizes

  Net& net() { return net_; }

 private:
  Net net_;
};

}  // namespace petri
