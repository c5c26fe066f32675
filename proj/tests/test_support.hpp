#pragma once

// Independent oracles shared by the unit and acceptance suites. Nothing here
// calls into the SAT or resynthesis code paths it is used to check.

#include "locklab/netlist.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace locklab::testing {

/// Reference evaluator: recursive, memo-free, one pattern at a time.
inline bool eval_net_reference(const Netlist &n, NetId net, const std::vector<bool> &value_of_input)
{
	int d = n.driver(net);
	if (d < 0)
		return value_of_input[net];
	const Gate &g = n.gate(d);
	auto in = [&](std::size_t i) { return eval_net_reference(n, g.fanins[i], value_of_input); };
	bool acc;
	switch (g.kind) {
	case GateKind::And:
	case GateKind::Nand:
		acc = true;
		for (std::size_t i = 0; i < g.fanins.size(); ++i)
			acc = acc && in(i);
		return g.kind == GateKind::And ? acc : !acc;
	case GateKind::Or:
	case GateKind::Nor:
		acc = false;
		for (std::size_t i = 0; i < g.fanins.size(); ++i)
			acc = acc || in(i);
		return g.kind == GateKind::Or ? acc : !acc;
	case GateKind::Xor:
	case GateKind::Xnor:
		acc = false;
		for (std::size_t i = 0; i < g.fanins.size(); ++i)
			acc = acc != in(i);
		return g.kind == GateKind::Xor ? acc : !acc;
	case GateKind::Not:
		return !in(0);
	case GateKind::Buf:
		return in(0);
	case GateKind::Mux:
		return in(0) ? in(2) : in(1);
	case GateKind::Const0:
		return false;
	case GateKind::Const1:
		return true;
	}
	return false;
}

/// Memoized variant of the reference evaluator for whole-output vectors.
inline std::vector<bool> reference_outputs(const Netlist &n, const std::vector<bool> &inputs,
					   const std::vector<bool> &key = {})
{
	std::vector<signed char> memo(n.net_count(), -1);
	for (std::size_t i = 0; i < inputs.size(); ++i)
		memo[n.primary_inputs()[i]] = inputs[i];
	for (std::size_t i = 0; i < key.size(); ++i)
		memo[n.key_inputs()[i]] = key[i];
	std::function<bool(NetId)> eval = [&](NetId net) -> bool {
		if (memo[net] >= 0)
			return memo[net];
		const Gate &g = n.gate(n.driver(net));
		std::vector<bool> v;
		for (NetId f : g.fanins)
			v.push_back(eval(f));
		bool r = false;
		switch (g.kind) {
		case GateKind::And:
		case GateKind::Nand:
			r = std::all_of(v.begin(), v.end(), [](bool b) { return b; }) == (g.kind == GateKind::And);
			break;
		case GateKind::Or:
		case GateKind::Nor:
			r = std::any_of(v.begin(), v.end(), [](bool b) { return b; }) == (g.kind == GateKind::Or);
			break;
		case GateKind::Xor:
		case GateKind::Xnor:
			r = (std::count(v.begin(), v.end(), true) % 2 == 1) == (g.kind == GateKind::Xor);
			break;
		case GateKind::Not:
			r = !v[0];
			break;
		case GateKind::Buf:
			r = v[0];
			break;
		case GateKind::Mux:
			r = v[0] ? v[2] : v[1];
			break;
		case GateKind::Const0:
			r = false;
			break;
		case GateKind::Const1:
			r = true;
			break;
		}
		memo[net] = r;
		return r;
	};
	std::vector<bool> out;
	for (NetId o : n.primary_outputs())
		out.push_back(eval(o));
	return out;
}

/// Table of output values over all (input, key) rows; inputs vary fastest.
/// Row index r: bit i of r is primary input i, then key bits follow.
inline std::vector<std::vector<bool>> truth_table(const Netlist &n)
{
	const std::size_t pi = n.primary_inputs().size();
	const std::size_t total = pi + n.key_count();
	std::vector<std::vector<bool>> rows;
	std::vector<bool> value(n.net_count(), false);
	for (std::uint64_t r = 0; r < (1ULL << total); ++r) {
		for (std::size_t i = 0; i < pi; ++i)
			value[n.primary_inputs()[i]] = (r >> i) & 1;
		for (std::size_t k = 0; k < n.key_count(); ++k)
			value[n.key_inputs()[k]] = (r >> (pi + k)) & 1;
		std::vector<bool> out;
		for (NetId o : n.primary_outputs())
			out.push_back(eval_net_reference(n, o, value));
		rows.push_back(std::move(out));
	}
	return rows;
}

inline std::vector<bool> bits_of(std::uint64_t v, std::size_t width)
{
	std::vector<bool> b(width);
	for (std::size_t i = 0; i < width; ++i)
		b[i] = (v >> i) & 1;
	return b;
}

/// Brute-force satisfiability of a clause list over `vars` variables
/// (DIMACS-style signed integers, 1-based).
inline bool brute_force_sat(int vars, const std::vector<std::vector<int>> &clauses)
{
	for (std::uint64_t a = 0; a < (1ULL << vars); ++a) {
		bool all = true;
		for (const auto &c : clauses) {
			bool any = false;
			for (int l : c) {
				bool v = (a >> (std::abs(l) - 1)) & 1;
				if ((l > 0) == v) {
					any = true;
					break;
				}
			}
			if (!any) {
				all = false;
				break;
			}
		}
		if (all)
			return true;
	}
	return false;
}

/// Rebuilds `n` with the listed primary inputs turned into constant gates.
inline Netlist with_constant_inputs(const Netlist &n, const std::map<std::string, bool> &consts)
{
	NetlistBuilder b;
	for (NetId id : n.primary_inputs())
		if (!consts.count(n.net_name(id)))
			b.add_input(n.net_name(id));
	for (NetId id : n.key_inputs())
		b.add_key_input(n.net_name(id));
	for (NetId id : n.primary_outputs())
		b.add_output(n.net_name(id));
	for (auto &[name, v] : consts)
		b.add_gate(name, v ? GateKind::Const1 : GateKind::Const0, {});
	for (const Gate &g : n.gates()) {
		std::vector<std::string> f;
		for (NetId x : g.fanins)
			f.push_back(n.net_name(x));
		b.add_gate(n.net_name(g.output), g.kind, f);
	}
	return std::move(b).build();
}

} // namespace locklab::testing
