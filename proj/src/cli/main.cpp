#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "analyze/analyze.hpp"
#include "blueprints/segment.hpp"
#include "engine/engine.hpp"
#include "io/io.hpp"
#include "refbnn/refbnn.hpp"
#include "verify/envs.hpp"
#include "verify/verify.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// exit contract: 0 success, 1 property failure or mismatch, 2 inconclusive,
// 3 input error
constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kInconclusive = 2;
constexpr int kInputError = 3;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- configuration ----------------------------------------------------------

struct RunConfig {
  blueprints::NetworkSpec spec;  // instrument/budget applied per command
  std::uint32_t epochs = 100;
  std::vector<std::uint64_t> seeds = {1};
  bool instrument = true;
  bool budget = true;
  refbnn::Mode mode = refbnn::Mode::PnExact;
  std::optional<fs::path> out_dir;
};

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) throw InputError("unknown key \"" + it.key() + "\" in " + where);
  }
}

std::vector<int> parse_rates(const json& j) {
  std::vector<json> entries;
  if (j.is_array())
    entries.assign(j.begin(), j.end());
  else
    entries.push_back(j);
  std::vector<int> tenths;
  for (const json& v : entries) {
    util::Rational r;
    if (v.is_number_integer())
      r = util::Rational(v.get<std::int64_t>());
    else if (v.is_string())
      r = io::parse_rational(v.get<std::string>());
    else
      throw InputError(
          "network.learning_rate: write rates as strings (\"0.6\") so they "
          "stay exact");
    util::Rational scaled = r * util::Rational(10);
    if (scaled.den() != 1 || scaled.num() < 1 || scaled.num() > 9)
      throw InputError("network.learning_rate: " + r.to_string() +
                       " is not a tenth between 0.1 and 0.9");
    tenths.push_back(int(scaled.num()));
  }
  return tenths;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);  // comments allowed
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  reject_unknown(doc, {"network", "run", "output"}, "config");

  RunConfig cfg;
  cfg.spec = blueprints::NetworkSpec::xor_default();
  try {
    if (doc.contains("network")) {
      const json& n = doc["network"];
      reject_unknown(n,
                     {"features", "hidden", "dataset", "learning_rate",
                      "weight_seed", "initial_weights"},
                     "network");
      if (n.contains("features")) cfg.spec.features = n["features"].get<std::size_t>();
      if (n.contains("hidden")) cfg.spec.hidden = n["hidden"].get<std::size_t>();
      if (n.contains("dataset")) {
        cfg.spec.dataset.clear();
        for (const json& row : n["dataset"]) {
          reject_unknown(row, {"bits", "label"}, "dataset row");
          blueprints::NetworkSpec::DataRow r;
          r.bits = row.at("bits").get<std::vector<int>>();
          r.label = row.at("label").get<int>();
          cfg.spec.dataset.push_back(std::move(r));
        }
      }
      if (n.contains("learning_rate"))
        cfg.spec.learning_rate_tenths = parse_rates(n["learning_rate"]);
      if (n.contains("weight_seed")) cfg.spec.seed = n["weight_seed"].get<std::uint64_t>();
      if (n.contains("initial_weights")) {
        cfg.spec.initial_weights.clear();
        for (const json& w : n["initial_weights"])
          cfg.spec.initial_weights.push_back(io::parse_hex_bits(w.get<std::string>()));
      }
    }
    if (doc.contains("run")) {
      const json& r = doc["run"];
      reject_unknown(r, {"epochs", "seeds", "instrument", "budget", "mode"}, "run");
      if (r.contains("epochs")) cfg.epochs = r["epochs"].get<std::uint32_t>();
      if (r.contains("seeds")) cfg.seeds = r["seeds"].get<std::vector<std::uint64_t>>();
      if (r.contains("instrument")) cfg.instrument = r["instrument"].get<bool>();
      if (r.contains("budget")) cfg.budget = r["budget"].get<bool>();
      if (r.contains("mode")) {
        std::string m = r["mode"].get<std::string>();
        if (m == "pn-exact") cfg.mode = refbnn::Mode::PnExact;
        else if (m == "native-float") cfg.mode = refbnn::Mode::NativeFloat;
        else throw InputError("run.mode must be pn-exact or native-float");
      }
    }
    if (doc.contains("output")) {
      const json& o = doc["output"];
      reject_unknown(o, {"directory"}, "output");
      if (o.contains("directory")) cfg.out_dir = fs::path(o["directory"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  if (cfg.epochs == 0) throw InputError("run.epochs must be positive");
  if (cfg.seeds.empty()) throw InputError("run.seeds must not be empty");
  try {
    cfg.spec.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return cfg;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  std::cout << "wrote " << path.string() << "\n";
}

// --- report plumbing --------------------------------------------------------

struct CheckLine {
  std::string name;
  verify::Verdict expected = verify::Verdict::Holds;
  verify::Verdict got = verify::Verdict::Holds;
  std::string detail;

  bool pass() const { return got == expected; }
};

CheckLine from_report(std::string name, verify::Verdict expected,
                      const verify::PropertyReport& r) {
  return {std::move(name), expected, r.verdict, r.detail};
}

CheckLine from_bool(std::string name, bool ok, std::string detail) {
  return {std::move(name), verify::Verdict::Holds,
          ok ? verify::Verdict::Holds : verify::Verdict::Violated,
          std::move(detail)};
}

int finish_report(const std::string& title, const std::vector<CheckLine>& lines,
                  const std::optional<fs::path>& out_file) {
  std::ostringstream rep;
  rep << title << "\n";
  int exit = kOk;
  std::size_t passed = 0;
  for (const auto& l : lines) {
    const char* status = "PASS";
    if (!l.pass()) {
      if (l.got == verify::Verdict::Inconclusive) {
        status = "INCONCLUSIVE";
        if (exit == kOk) exit = kInconclusive;
      } else {
        status = "FAIL";
        exit = kFailure;
      }
    } else {
      ++passed;
    }
    rep << "  [" << status << "] " << l.name << ": expected "
        << verify::verdict_name(l.expected) << ", got "
        << verify::verdict_name(l.got);
    if (!l.detail.empty()) rep << " (" << l.detail << ")";
    rep << "\n";
  }
  rep << passed << "/" << lines.size() << " checks as expected\n";
  std::cout << rep.str();
  if (out_file) write_file(*out_file, rep.str());
  return exit;
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (width.size() <= c) width.resize(c + 1, 0);
      width[c] = std::max(width[c], row[c].size());
    }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c) out << "  ";
      // first column left-aligned, the numeric rest right-aligned
      if (c == 0)
        out << rows[r][c] << std::string(width[c] - rows[r][c].size(), ' ');
      else
        out << std::string(width[c] - rows[r][c].size(), ' ') << rows[r][c];
    }
    out << "\n";
    if (r == 0) {
      std::size_t bar = 0;
      for (std::size_t c = 0; c < width.size(); ++c) bar += width[c] + (c ? 2 : 0);
      out << std::string(bar, '-') << "\n";
    }
  }
  return out.str();
}

std::string billions(const util::Rational& v) {
  long double x = static_cast<long double>(v.num()) / static_cast<long double>(v.den());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3Lf", x / 1e9L);
  return buf;
}

std::vector<std::string> group_prefixes(const blueprints::NetworkSpec& spec) {
  // order matters: longer prefixes first where one contains another
  std::vector<std::string> p = {"in.", "lr.", "reg."};
  for (std::size_t i = 1; i <= spec.hidden; ++i)
    p.push_back("n" + std::to_string(i) + ".");
  p.insert(p.end(), {"out.", "loss.", "fork.", "gradr.", "grad.", "ste.",
                     "lrprod.", "upd.", "nv.", "budget.", "inst."});
  return p;
}

std::vector<petri::TransitionId> resolve_transitions(
    const petri::Net& net, const std::vector<std::string>& names) {
  std::vector<petri::TransitionId> out;
  for (const auto& n : names) out.push_back(net.transition_checked(n));
  return out;
}

engine::RunReport run_to_quiescence(const blueprints::ComposedModel& model,
                                    std::uint64_t seed, bool record_trace) {
  auto stop = engine::StopCondition::quiescence();
  stop.cycle_marker = model.net.transition_checked(model.t_next_vector);
  return engine::run_model(model, engine::SchedulePolicy::uniform(seed), stop,
                           record_trace);
}

void write_witness(const fs::path& path, const petri::Net& net,
                   const petri::Trace& trace,
                   const petri::SafetyViolation& violation) {
  std::ostringstream out;
  out << "# safety violation: place " << net.place(violation.place).name
      << " while firing " << net.transition(violation.transition).name << "\n";
  out << "# firing sequence from the initial marking:\n";
  for (const auto& step : trace.steps)
    out << step.index << ' ' << net.transition(step.transition).name << '\n';
  write_file(path, out.str());
}

// --- commands ---------------------------------------------------------------

int cmd_generate(RunConfig cfg, const std::vector<std::string>& formats) {
  cfg.spec.instrument = cfg.instrument;
  cfg.spec.epoch_budget =
      cfg.budget ? std::optional<std::uint32_t>(cfg.epochs) : std::nullopt;
  auto model = blueprints::compose_bnn(cfg.spec);
  fs::path dir = cfg.out_dir.value_or(".");
  write_file(dir / "net.native", io::to_native(model.net));
  for (const auto& f : formats) {
    if (f == "pnml") write_file(dir / "net.pnml", io::to_pnml(model.net));
    if (f == "dot") write_file(dir / "net.dot", io::to_dot(model.net));
  }
  std::cout << "composed net: " << model.net.num_places() << " places, "
            << model.net.num_transitions() << " transitions, "
            << model.net.num_arcs() << " arcs\n";
  return kOk;
}

int cmd_simulate(RunConfig cfg) {
  cfg.spec.instrument = true;  // metrics need the recorders
  cfg.spec.epoch_budget =
      cfg.budget ? std::optional<std::uint32_t>(cfg.epochs) : std::nullopt;
  auto model = blueprints::compose_bnn(cfg.spec);
  fs::path dir = cfg.out_dir.value_or(".");
  std::uint64_t want =
      std::uint64_t(cfg.epochs) * std::uint64_t(cfg.spec.dataset.size());

  auto marker = model.net.transition_checked(model.t_next_vector);
  auto stop = cfg.budget
                  ? engine::StopCondition::quiescence()
                  : engine::StopCondition::cycle_count(marker, want);
  stop.cycle_marker = marker;
  auto rep = engine::run_model(model, engine::SchedulePolicy::uniform(cfg.seeds[0]),
                               stop, true);
  if (rep.violation) {
    write_witness(dir / "witness.txt", model.net, rep.trace, *rep.violation);
    std::cerr << "safety violation after " << rep.firings << " firings, see witness\n";
    return kFailure;
  }
  if (rep.terminal == engine::Terminal::StepLimit) {
    std::cerr << "step limit reached after " << rep.cycles_completed
              << " cycles; no quiescence\n";
    return kInconclusive;
  }

  write_file(dir / "metrics.csv", io::metrics_csv(cfg.spec, rep.metrics_series));
  write_file(dir / "metrics.json", io::metrics_json(cfg.spec, rep.metrics_series));
  double avg = 0;
  for (const auto& m : rep.metrics_series)
    avg += double(m.loss) / double(1 + cfg.spec.hidden);
  if (!rep.metrics_series.empty()) avg /= double(rep.metrics_series.size());
  std::cout << "seed " << cfg.seeds[0] << ": " << rep.cycles_completed
            << " cycles (" << cfg.epochs << " epochs), " << rep.firings
            << " firings, final running average loss " << avg << "\n";
  return rep.cycles_completed == want ? kOk : kFailure;
}

std::vector<CheckLine> segment_tier() {
  std::vector<CheckLine> lines;
  for (auto& env : verify::standard_segment_envs()) {
    auto g = verify::explore(env.net, 10'000'000);
    lines.push_back({env.name + ": state space", verify::Verdict::Holds,
                     g.exhausted ? verify::Verdict::Holds
                                 : verify::Verdict::Inconclusive,
                     std::to_string(g.states.size()) + " states"});
    lines.push_back(
        from_report(env.name + ": 1-safe", verify::Verdict::Holds,
                    verify::check_1safe(env.net, g)));
    lines.push_back(from_report(
        env.name + ": deadlock-free", verify::Verdict::Holds,
        verify::check_deadlock_free(env.net, g, env.allowed_terminal)));
    for (const auto& group : env.mutex_groups) {
      std::vector<petri::PlaceId> places;
      for (const auto& n : group) places.push_back(env.net.place_checked(n));
      lines.push_back(from_report(env.name + ": mutex " + group.front(),
                                  verify::Verdict::Holds,
                                  verify::check_mutex(env.net, g, places)));
    }
  }
  return lines;
}

std::vector<CheckLine> component_tier(const RunConfig& cfg) {
  std::vector<CheckLine> lines;
  auto spec = cfg.spec;
  spec.instrument = false;
  spec.epoch_budget.reset();
  auto model = blueprints::compose_bnn(spec);
  auto marker = model.net.transition_checked(model.t_next_vector);
  constexpr std::uint64_t kCycles = 200;
  auto rep = engine::run_model(
      model, engine::SchedulePolicy::uniform(cfg.seeds[0]),
      engine::StopCondition::cycle_count(marker, kCycles), true);

  lines.push_back(from_bool("free-running composition",
                            rep.cycles_completed == kCycles && !rep.violation,
                            std::to_string(rep.cycles_completed) + " cycles, " +
                                std::to_string(rep.firings) + " firings"));
  lines.push_back(from_report("1-safe along trace", verify::Verdict::Inconclusive,
                              verify::check_1safe(model.net, rep.trace)));
  lines.push_back(from_report(
      "loader strictly cyclic", verify::Verdict::Holds,
      verify::check_cyclic_order(model.net, rep.trace,
                                 resolve_transitions(model.net, model.loader_rows))));

  std::unordered_set<petri::TransitionId> fired;
  for (const auto& step : rep.trace.steps) fired.insert(step.transition);
  auto all_fired = [&](const std::vector<std::string>& names) {
    for (const auto& n : names)
      if (!fired.count(model.net.transition_checked(n))) return false;
    return true;
  };
  // value-indexed groups (sums, clips, ...) hold one transition per value
  // combination; a stage counts as exercised once any of them fires
  auto any_fired = [&](const std::vector<std::string>& names) {
    for (const auto& n : names)
      if (fired.count(model.net.transition_checked(n))) return true;
    return false;
  };
  bool spine = all_fired(model.loader_rows) && any_fired(model.t_output_sum) &&
               any_fired(model.t_prediction) && any_fired(model.t_loss_clip) &&
               any_fired(model.t_gradients) && any_fired(model.t_update_done) &&
               fired.count(marker) > 0;
  lines.push_back(from_bool("token flow reaches every stage", spine,
                            "loader, sums, prediction, loss, updates, next-vector"));

  auto lockstep = engine::lockstep(cfg.spec, 2, {cfg.seeds[0]});
  std::size_t mism = lockstep.seeds.empty() ? 0 : lockstep.seeds[0].mismatches.size();
  lines.push_back(from_bool("arithmetic matches reference (2 epochs)", lockstep.ok,
                            std::to_string(mism) + " mismatches"));
  return lines;
}

std::vector<CheckLine> system_tier(const RunConfig& cfg) {
  std::vector<CheckLine> lines;
  auto spec = cfg.spec;
  spec.instrument = false;
  spec.epoch_budget = cfg.epochs;  // the system tier checks the budgeted run
  auto model = blueprints::compose_bnn(spec);
  const petri::Net& net = model.net;
  std::uint64_t want = std::uint64_t(cfg.epochs) * spec.dataset.size();
  petri::PlaceId pool = net.place_checked("budget.pool");

  auto sums = resolve_transitions(net, model.t_output_sum);
  auto preds = resolve_transitions(net, model.t_prediction);
  auto clips = resolve_transitions(net, model.t_loss_clip);
  auto grads = resolve_transitions(net, model.t_gradients);
  auto dones = resolve_transitions(net, model.t_update_done);
  petri::TransitionId next = net.transition_checked(model.t_next_vector);

  engine::RunReport first_rep;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    std::uint64_t seed = cfg.seeds[i];
    auto rep = run_to_quiescence(model, seed, true);
    std::string tag = " (seed " + std::to_string(seed) + ")";

    lines.push_back(from_report("1-safe along trace" + tag,
                                verify::Verdict::Inconclusive,
                                verify::check_1safe(net, rep.trace)));

    const std::vector<std::pair<const std::vector<petri::TransitionId>*,
                                const std::vector<petri::TransitionId>*>>
        chain = {{&sums, &preds}, {&preds, &clips}, {&clips, &grads},
                 {&grads, &dones}, {&dones, nullptr}};
    verify::PropertyReport worst{"precedence", verify::Verdict::Holds, {}, 0, ""};
    std::vector<petri::TransitionId> next_only = {next};
    for (const auto& [before, after] : chain) {
      auto r = verify::check_precedence(net, rep.trace, *before,
                                        after ? *after : next_only, next);
      if (r.verdict != verify::Verdict::Holds) {
        worst = r;
        break;
      }
      worst.detail = r.detail;
    }
    lines.push_back(from_report("causal chain sum<pred<loss<grad<update<next" + tag,
                                verify::Verdict::Holds, worst));

    bool quiet = rep.terminal == engine::Terminal::Quiescent;
    lines.push_back(
        {"budget drains after " + std::to_string(want) + " cycles" + tag,
         verify::Verdict::Holds,
         rep.terminal == engine::Terminal::StepLimit
             ? verify::Verdict::Inconclusive
             : (quiet && rep.cycles_completed == want ? verify::Verdict::Holds
                                                      : verify::Verdict::Violated),
         std::to_string(rep.cycles_completed) + " cycles"});
    lines.push_back(from_report("budget pool bounded" + tag, verify::Verdict::Holds,
                                verify::check_bounded(net, rep.trace, pool,
                                                      cfg.epochs)));
    lines.push_back(from_report("return to initial marking" + tag,
                                verify::Verdict::Violated,
                                verify::check_irreversible_sink(net, rep.trace)));
    if (i == 0) first_rep = std::move(rep);
  }

  // weight evolution: at least one live register bit differs after training
  bool evolved = false;
  for (const auto& reg : model.register_bits)
    for (const auto& bit : reg.place)
      for (const auto& name : bit) {
        petri::PlaceId p = net.place_checked(name);
        if (net.initial_marking().bit(p) != first_rep.final_marking.bit(p))
          evolved = true;
      }
  lines.push_back(from_bool("weight registers evolved", evolved,
                            "final bit marking vs initial"));

  // a single-row single-neuron system is small enough to explore outright,
  // giving the reversibility refutation an exhaustive footing
  blueprints::NetworkSpec mini;
  mini.features = 1;
  mini.hidden = 1;
  mini.dataset = {{{0}, -1}};
  mini.learning_rate_tenths = {6};
  mini.epoch_budget = 1;
  auto mini_model = blueprints::compose_bnn(mini);
  auto g = verify::explore(mini_model.net, 2'000'000);
  lines.push_back({"exhaustive mini system: state space", verify::Verdict::Holds,
                   g.exhausted ? verify::Verdict::Holds
                               : verify::Verdict::Inconclusive,
                   std::to_string(g.states.size()) + " states"});
  lines.push_back(from_report("exhaustive mini system: 1-safe",
                              verify::Verdict::Holds,
                              verify::check_1safe(mini_model.net, g)));
  std::uint32_t mini_slot =
      mini_model.net.counter_slot(mini_model.net.place_checked("budget.pool"));
  lines.push_back(from_report(
      "exhaustive mini system: deadlock-free until budget drained",
      verify::Verdict::Holds,
      verify::check_deadlock_free(mini_model.net, g, [mini_slot](const petri::Marking& m) {
        return m.count(mini_slot) == 0;
      })));
  lines.push_back(from_report("exhaustive mini system: reversibility",
                              verify::Verdict::Violated,
                              verify::check_reversibility(mini_model.net, g)));
  return lines;
}

int cmd_verify(const RunConfig& cfg, const std::string& tier) {
  std::vector<CheckLine> lines;
  if (tier == "segment") lines = segment_tier();
  else if (tier == "component") lines = component_tier(cfg);
  else lines = system_tier(cfg);
  std::optional<fs::path> out;
  if (cfg.out_dir) out = *cfg.out_dir / ("verify-" + tier + ".txt");
  return finish_report("verification tier: " + tier, lines, out);
}

int cmd_compare(const RunConfig& cfg) {
  if (cfg.mode == refbnn::Mode::PnExact) {
    auto rep = engine::lockstep(cfg.spec, cfg.epochs, cfg.seeds);
    std::size_t shown = 0;
    for (const auto& s : rep.seeds) {
      std::cout << "seed " << s.seed << ": " << s.cycles << " cycles, "
                << s.firings << " firings, " << s.mismatches.size()
                << " mismatches\n";
      for (const auto& m : s.mismatches) {
        if (shown++ >= 20) break;
        std::cout << "  cycle " << m.cycle << " " << m.field << "[" << m.weight
                  << "]: net=" << m.net_value << " ref=" << m.ref_value << "\n";
      }
    }
    std::cout << (rep.ok ? "exact match across all seeds\n"
                         : "mismatches found\n");
    return rep.ok ? kOk : kFailure;
  }

  // native-float comparison is informational: it quantifies how truncating
  // arithmetic drifts from the host's round-to-nearest
  auto spec = cfg.spec;
  spec.instrument = true;
  spec.epoch_budget = cfg.epochs;
  auto model = blueprints::compose_bnn(spec);
  auto rep = run_to_quiescence(model, cfg.seeds[0], false);
  auto rate = engine::marked_rate(model, rep.final_marking);
  auto ref_spec = cfg.spec;
  if (rate) ref_spec.learning_rate_tenths = {*rate};
  auto ref = refbnn::train(ref_spec, cfg.epochs, refbnn::Mode::NativeFloat);

  std::size_t cycles = std::min(rep.metrics_series.size(), ref.metrics.size());
  std::size_t diverging = 0, shown = 0;
  std::optional<std::size_t> first;
  for (std::size_t c = 0; c < cycles; ++c) {
    auto diffs = engine::compare_metrics(rep.metrics_series[c], ref.metrics[c], c);
    if (diffs.empty()) continue;
    ++diverging;
    if (!first) first = c;
    for (const auto& m : diffs) {
      if (shown++ >= 20) break;
      std::cout << "  cycle " << m.cycle << " " << m.field << "[" << m.weight
                << "]: net=" << m.net_value << " native=" << m.ref_value << "\n";
    }
  }
  std::cout << "native-float mode: " << diverging << "/" << cycles
            << " cycles diverge";
  if (first) std::cout << ", first at cycle " << *first;
  std::cout << " (informational)\n";
  return kOk;
}

int cmd_analyze(const std::optional<RunConfig>& cfg, bool presets,
                const std::optional<fs::path>& out_dir) {
  std::ostringstream text;
  if (cfg) {
    auto spec = cfg->spec;
    spec.instrument = cfg->instrument;
    spec.epoch_budget =
        cfg->budget ? std::optional<std::uint32_t>(cfg->epochs) : std::nullopt;
    auto model = blueprints::compose_bnn(spec);
    auto rows = analyze::grouped_report(model.net, group_prefixes(spec));
    auto total = analyze::net_row(model.net, "total");

    std::vector<std::vector<std::string>> table = {
        {"segment group", "places", "transitions", "arcs", "total"}};
    rows.push_back(total);
    for (const auto& r : rows)
      table.push_back({r.name, std::to_string(r.places),
                       std::to_string(r.transitions), std::to_string(r.arcs),
                       std::to_string(r.total())});
    text << "composed model size by segment group\n" << render_table(table) << "\n";

    analyze::ArchitectureSpec arch{
        "configured", spec.features, {spec.hidden, 1}};
    auto est = analyze::estimate(arch, analyze::calibration_unit_sizes());
    text << "projection at calibration unit sizes: " << est.units << " units, "
         << billions(est.total()) << "e9 elements\n\n";
  }
  if (presets || !cfg) {
    std::vector<std::vector<std::string>> table = {
        {"architecture", "units", "places e9", "transitions e9", "arcs e9",
         "total e9"}};
    for (const auto& arch : analyze::architecture_presets()) {
      auto est = analyze::estimate(arch, analyze::calibration_unit_sizes());
      table.push_back({arch.name, std::to_string(est.units),
                       billions(est.places), billions(est.transitions),
                       billions(est.arcs), billions(est.total())});
    }
    text << "projected sizes for larger architectures\n" << render_table(table);
  }
  std::cout << text.str();
  if (out_dir) write_file(*out_dir / "analyze.txt", text.str());
  return kOk;
}

int cmd_export(const fs::path& net_file, const std::string& format,
               const std::optional<fs::path>& out) {
  io::NetDocument doc;
  try {
    doc = io::from_native(read_file(net_file));
  } catch (const std::exception& e) {
    throw InputError(net_file.string() + ": " + e.what());
  }
  std::string text;
  if (format == "pnml") text = io::to_pnml(doc.net);
  else if (format == "dot") text = io::to_dot(doc.net);
  else text = io::to_native(doc.net, doc.ports);
  if (out) write_file(*out, text);
  else std::cout << text;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1-safe Petri net toolkit for binarized neural network training"};
  app.require_subcommand(1);

  std::string config_path, net_path, tier = "system", format = "pnml";
  std::vector<std::string> formats;
  std::string out_path;
  std::uint64_t seed = 1;
  std::uint32_t epochs = 100;

  auto add_config = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("config", config_path, "JSON configuration file");
    if (required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the schedule seed list with one seed");
    sub->add_option("--epochs", epochs, "override the configured epoch count");
    sub->add_option("--out", out_path, "output directory");
  };

  auto* gen = app.add_subcommand("generate", "compose the net and write it out");
  add_config(gen, true);
  gen->add_option("--format", formats, "additional formats beside native")
      ->check(CLI::IsMember({"native", "pnml", "dot"}));

  auto* sim = app.add_subcommand("simulate", "run the instrumented net and dump metrics");
  add_config(sim, true);

  auto* ver = app.add_subcommand("verify", "run one verification tier");
  add_config(ver, true);
  ver->add_option("--tier", tier, "segment, component or system")
      ->check(CLI::IsMember({"segment", "component", "system"}));

  auto* cmp = app.add_subcommand("compare", "lockstep comparison against the reference");
  add_config(cmp, true);

  auto* ana = app.add_subcommand("analyze", "size tables and scaling projections");
  add_config(ana, false);
  ana->add_flag("--presets", "include the built-in architecture projections");

  auto* exp = app.add_subcommand("export", "convert a native net file");
  exp->add_option("net", net_path, "net in native format")->required();
  exp->add_option("--format", format, "pnml, dot or native")
      ->check(CLI::IsMember({"native", "pnml", "dot"}));
  exp->add_option("--out", out_path, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    auto configured = [&](CLI::App* sub) {
      RunConfig cfg = load_config(config_path);
      if (sub->count("--seed")) cfg.seeds = {seed};
      if (sub->count("--epochs")) cfg.epochs = epochs;
      if (sub->count("--out")) cfg.out_dir = fs::path(out_path);
      return cfg;
    };
    if (gen->parsed()) return cmd_generate(configured(gen), formats);
    if (sim->parsed()) return cmd_simulate(configured(sim));
    if (ver->parsed()) return cmd_verify(configured(ver), tier);
    if (cmp->parsed()) return cmd_compare(configured(cmp));
    if (ana->parsed()) {
      std::optional<RunConfig> cfg;
      if (!config_path.empty()) cfg = configured(ana);
      std::optional<fs::path> out;
      if (ana->count("--out")) out = fs::path(out_path);
      else if (cfg && cfg->out_dir) out = cfg->out_dir;
      return cmd_analyze(cfg, ana->count("--presets") > 0, out);
    }
    if (exp->parsed()) {
      std::optional<fs::path> out;
      if (exp->count("--out")) out = fs::path(out_path);
      return cmd_export(net_path, format, out);
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}
