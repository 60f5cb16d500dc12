#pragma once

#include <functional>
#include <string>
#include <vector>

#include "blueprints/segment.hpp"
#include "petri/net.hpp"
#include "verify/verify.hpp"

// Closed environments: each blueprint segment merged with a minimal driver
// that feeds its boundary ports (free choice over every input value) and
// consumes its outputs, re-arming the drivers so the composite is live. The
// resulting nets are small enough for exhaustive exploration.

namespace verify {

struct ClosedEnv {
  std::string name;
  petri::Net net;
  // markings the design declares terminal (budget exhausted, one-shot done);
  // null means the composite is expected to run forever
  TerminalPredicate allowed_terminal;
  // place sets that must be mutually exclusive (binarization result pairs)
  std::vector<std::vector<std::string>> mutex_groups;
};

ClosedEnv closed_mapper_env(const std::string& name,
                            const blueprints::FunctionTable& table);
ClosedEnv closed_loader_env(const blueprints::NetworkSpec& spec);
ClosedEnv closed_register_env(bitfloat::Fp32Bits initial, std::size_t copies);
ClosedEnv closed_ste_env();
ClosedEnv closed_fork_env(std::size_t num_weights);
ClosedEnv closed_learning_rate_env(const std::vector<int>& tenths);
ClosedEnv closed_hinge_env(const blueprints::ValueDomain& z_domain);
ClosedEnv closed_next_vector_env(std::size_t num_weights);
ClosedEnv closed_budget_env(std::uint32_t epochs);
// one-shot: a single J value flows through the update pipeline against a
// fixed register pattern; terminal once the done token is collected
ClosedEnv closed_weight_update_env(bitfloat::Fp32Bits weight, int j_tenths);

// The suite the acceptance run iterates: one environment per blueprint
// segment family, parameterized like the composed XOR model.
std::vector<ClosedEnv> standard_segment_envs();

}  // namespace verify
