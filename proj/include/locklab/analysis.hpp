#pragma once

#include "locklab/netlist.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace locklab {

struct ComplexityStats {
	std::int64_t gate_count = 0;
	std::int64_t depth = 0;
	std::int64_t literal_count = 0;
	double area_proxy = 0.0;
	double power_proxy = 0.0;

	bool operator==(const ComplexityStats &) const = default;
};

/// Unit-area weights per gate kind: NOT/BUF, 2-input gates, each extra fanin, MUX.
struct AreaWeights {
	double inverter = 1.0;
	double two_input = 2.0;
	double extra_fanin = 1.0;
	double mux = 4.0;

	double weight(GateKind kind, std::size_t fanins) const;
};

struct StatsOptions {
	AreaWeights weights;
	std::size_t power_vectors = 1024;
	std::uint64_t seed = 0x5eed;
};

ComplexityStats stats(const Netlist &n, const StatsOptions &options = {});

/// Longest gate-level path from any input to each net; constants sit at level 0.
std::vector<std::int64_t> net_levels(const Netlist &n);

using Digest = std::array<std::uint8_t, 32>;

std::string to_hex(const Digest &d);

/// SHA-256 over arbitrary bytes.
Digest sha256(std::string_view bytes);

/**
 * Renaming-invariant serialization: gates in depth-first post-order from the
 * outputs, nets named by interface position or canonical gate index.
 */
std::string canonical_form(const Netlist &n);

Digest structural_signature(const Netlist &n);

/// Transitive-fanin subcircuit of primary output `output`.
Netlist extract_logic_cone(const Netlist &n, std::string_view output);

} // namespace locklab
