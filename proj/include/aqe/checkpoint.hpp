#pragma once

#include <filesystem>
#include <iosfwd>

#include "aqe/agent.hpp"
#include "aqe/critic.hpp"
#include "aqe/network.hpp"

namespace aqe {

// Binary checkpoint records; all integers and floats little-endian, layout
// documented in docs/formats.md. Readers validate magic strings and sizes
// and throw ParseError on anything malformed.

/// "AQENET01": layer sizes, weights+biases per layer in declaration order,
/// then Adam first/second moments in the same order, then the step counter.
void write_network(std::ostream& out, const NetworkParams& params);
NetworkParams read_network(std::istream& in);

/// "AQEENS01": header (N, heads, layer sizes), N online records, N targets.
void write_ensemble(std::ostream& out, const CriticEnsemble& ensemble);
CriticEnsemble read_ensemble(std::istream& in);

/// "AQEPOL01": action bounds followed by the network record.
void write_policy(std::ostream& out, const PolicyParams& policy);
PolicyParams read_policy(std::istream& in);

/// "AQEAGT01": full training state (policy, temperature, ensemble, replay
/// buffer, rng streams, episode bookkeeping) for exact resume.
void write_agent_checkpoint(std::ostream& out, const AgentCheckpoint& ckpt);
AgentCheckpoint read_agent_checkpoint(std::istream& in);

void save_agent_checkpoint(const std::filesystem::path& path,
                           const AgentCheckpoint& ckpt);
AgentCheckpoint load_agent_checkpoint(const std::filesystem::path& path);

} // namespace aqe
