#pragma once

#include "locklab/netlist.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace locklab {

/// AIG literal: 2*node + complement. Node 0 is constant false.
using AigLit = std::uint32_t;

constexpr AigLit kAigFalse = 0;
constexpr AigLit kAigTrue = 1;

inline std::uint32_t aig_node(AigLit l) { return l >> 1; }
inline bool aig_compl(AigLit l) { return l & 1; }
inline AigLit aig_lit(std::uint32_t node, bool c = false) { return (node << 1) | (c ? 1u : 0u); }
inline AigLit aig_not(AigLit l) { return l ^ 1; }

/**
 * Structurally hashed and-inverter graph. Nodes are created in topological
 * order: constant, inputs (primary then key), then AND nodes.
 */
class Aig
{
      public:
	Aig() : fanin0_(1, 0), fanin1_(1, 0) {}

	AigLit add_input();
	/// AND with constant folding, idempotence, contradiction and hashing.
	AigLit make_and(AigLit a, AigLit b);
	/// make_and plus two-level absorption/contradiction rules.
	AigLit make_and_deep(AigLit a, AigLit b);
	AigLit make_or(AigLit a, AigLit b) { return aig_not(make_and(aig_not(a), aig_not(b))); }
	AigLit make_xor(AigLit a, AigLit b);
	AigLit make_mux(AigLit s, AigLit d0, AigLit d1);

	void add_output(AigLit l) { outputs_.push_back(l); }
	void set_output(std::size_t i, AigLit l) { outputs_[i] = l; }

	std::size_t node_count() const { return fanin0_.size(); }
	std::size_t input_count() const { return inputs_; }
	std::size_t and_count() const { return fanin0_.size() - 1 - inputs_; }
	bool is_input(std::uint32_t node) const { return node >= 1 && node <= inputs_; }
	bool is_and(std::uint32_t node) const { return node > inputs_; }
	AigLit fanin0(std::uint32_t node) const { return fanin0_[node]; }
	AigLit fanin1(std::uint32_t node) const { return fanin1_[node]; }
	const std::vector<AigLit> &outputs() const { return outputs_; }

	/// Level of each node; inputs and constant at 0.
	std::vector<int> levels() const;
	int depth() const;
	/// References from AND fanins and outputs.
	std::vector<std::uint32_t> fanout_counts() const;
	/// Reachable-from-outputs copy, hashed again from scratch.
	Aig cleanup(bool deep = false) const;

	/// Bit-parallel simulation of one 64-pattern word per input.
	std::vector<std::uint64_t> simulate(const std::vector<std::uint64_t> &input_words) const;

      private:
	std::size_t inputs_ = 0;
	std::vector<AigLit> fanin0_;
	std::vector<AigLit> fanin1_;
	std::vector<AigLit> outputs_;
	std::unordered_map<std::uint64_t, std::uint32_t> hash_;
};

/// Interface names carried alongside an AIG during resynthesis.
struct AigInterface {
	std::vector<std::string> inputs;
	std::vector<std::string> keys;
	std::vector<std::string> outputs;
};

/// XOR/XNOR/MUX are decomposed; wide gates become balanced trees.
Aig aig_from_netlist(const Netlist &n, AigInterface *iface = nullptr);

/// Direct AND/NOT netlist of an AIG (used for certification and debugging).
Netlist aig_to_netlist(const Aig &aig, const AigInterface &iface);

/// Nodes in the transitive fanout of the key inputs.
std::vector<char> aig_key_tfo(const Aig &aig, std::size_t primary_inputs);

/**
 * Rebuilds AND supergates as level-balanced trees. When `restrict` is
 * non-empty only nodes with restrict[node] set are rebalanced.
 */
Aig aig_balance(const Aig &aig, const std::vector<char> &restrict = {});

} // namespace locklab
