#pragma once

#include "locklab/aig.hpp"
#include "locklab/netlist.hpp"

#include <cstdint>
#include <vector>

namespace locklab {

struct CutParams {
	/// Delay mode: minimize arrival, then recover area under required times.
	bool delay = false;
	/// Required output level in delay mode; below the achievable optimum it is raised to it.
	int target_depth = -1;
	/// Adds one reconvergence-driven cut of up to six leaves per node, built by factoring.
	bool refactor = false;
	/// Breaks cost ties with a seeded hash instead of enumeration order.
	bool seed_ties = false;
	std::uint64_t seed = 0;
	/// When non-empty in delay mode, only marked nodes trade area for arrival.
	std::vector<char> critical;
	/// When non-empty, only marked nodes may change structure.
	std::vector<char> restrict;
	std::size_t cut_limit = 8;
};

/// One cover-and-rebuild step; no acceptance check.
Aig cut_resynthesize(const Aig &aig, const CutParams &params);

/// cut_resynthesize, kept only when it is no larger (area) or no deeper (delay).
Aig rewrite_pass(const Aig &aig, const CutParams &params);

/// Nodes on some input-output path longer than `target` levels.
std::vector<char> critical_nodes(const Aig &aig, int target);

/// Constant propagation, dead sweep and two-level hashing rules.
Aig generic_round(const Aig &aig, bool deep);

/// Target gate libraries, from smallest to richest.
enum class CellSet { Low, Medium, High };

/// Gate kinds a cell set may emit.
bool cell_allowed(CellSet cells, GateKind kind);
/// Widest AND/OR-family gate of a cell set.
int cell_arity(CellSet cells);

struct MapParams {
	CellSet cells = CellSet::Medium;
	/// 1 = plain cover; each further iteration adds one peephole round.
	int iterations = 1;
	/// Maximum fanout per net; 0 disables buffering.
	int fanout_limit = 0;
	/// Prefer arrival over gate count everywhere.
	bool delay = false;
	/// Nodes that prefer arrival even in area mode (e.g. the key fanout cone).
	std::vector<char> delay_nodes;
	bool seed_ties = false;
	std::uint64_t seed = 0;
};

/// Covers an AIG with gates from the cell set; XOR/XNOR are never emitted.
Netlist map_to_cells(const Aig &aig, const AigInterface &iface, const MapParams &params);

// Gate-level passes on netlists.

/// Folds constant-driven gates; never adds gates.
Netlist propagate_constants(const Netlist &n);
/// Removes gates that reach no primary output.
Netlist sweep_dead(const Netlist &n);
/// Replaces uses of BUF outputs (and double inversions) by their sources.
Netlist remove_buffers(const Netlist &n);
/// Merges gates with identical kind and fanins.
Netlist hash_gates(const Netlist &n);
/// Regroups single-fanout AND/OR chains into balanced trees of the same maximum arity.
Netlist balance_gates(const Netlist &n);
/// propagate_constants, remove_buffers, hash_gates, sweep_dead and balance_gates.
Netlist simplify_netlist(const Netlist &n);

/// Key input `index` tied to `value`, then constant propagation and dead sweep.
Netlist harden_key_input(const Netlist &n, std::size_t index, bool value);

/// Every key input tied to its bit, then constant propagation and dead sweep.
Netlist harden_all_keys(const Netlist &n, const std::vector<bool> &key);

} // namespace locklab
