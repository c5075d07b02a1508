#pragma once

#include "crl/multipliers.hpp"
#include "crl/net.hpp"
#include "crl/sac.hpp"

#include <iosfwd>
#include <string>

namespace crl {

/// Checkpoint container: magic "CRLCKPT1", u32 version, u32 section count,
/// then named sections (u32 name length, name bytes, u64 payload size,
/// payload). Network payloads are u32 size count, i32 layer sizes, u8
/// activation, u8 layer-norm flag, two pad bytes, then the parameters as
/// row-major 64-bit floats per layer (weights then bias).
///
/// Agent checkpoints hold policy, per-head online/target twins, Adam states,
/// and the multiplier bank, enough to resume training or evaluate.

void save_agent(std::ostream& os, const SacLagrangian& agent,
                const MultiplierBank& bank);
void save_agent_file(const std::string& path, const SacLagrangian& agent,
                     const MultiplierBank& bank);

/// Restores parameters into an agent/bank built with the same configuration.
/// Throws ConfigError on magic/shape mismatch.
void load_agent(std::istream& is, SacLagrangian& agent, MultiplierBank& bank);
void load_agent_file(const std::string& path, SacLagrangian& agent,
                     MultiplierBank& bank);

/// Loads only the policy (for evaluation).
void load_policy_file(const std::string& path, PolicyModel& policy);

}  // namespace crl
