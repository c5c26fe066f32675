#include "locklab/synth_passes.hpp"
#include "locklab/analysis.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <unordered_set>

namespace locklab {

namespace {

/// A rebuilt value: a constant bit or an original net that survives under its own name.
struct Sig {
	int constant = -1;
	NetId net = 0;

	bool is_const() const { return constant >= 0; }
	std::uint64_t code() const { return is_const() ? std::uint64_t(constant) : std::uint64_t(net) + 2; }
	bool operator==(const Sig &o) const { return constant == o.constant && (is_const() || net == o.net); }
};

Sig const_sig(bool v) { return {v ? 1 : 0, 0}; }

/**
 * Copies a netlist gate by gate. Each original net is either re-emitted under
 * its name or aliased to another value; aliased outputs are materialized.
 */
class Rebuilder
{
      public:
	explicit Rebuilder(const Netlist &n, const std::vector<NetId> &dropped_keys = {}) : n_(n), sig_(n.net_count())
	{
		is_po_.assign(n.net_count(), 0);
		kind_.assign(n.net_count(), std::nullopt);
		fanins_.resize(n.net_count());
		for (NetId id : n.primary_inputs()) {
			b_.add_input(n.net_name(id));
			sig_[id] = {-1, id};
		}
		for (NetId id : n.key_inputs()) {
			if (std::find(dropped_keys.begin(), dropped_keys.end(), id) != dropped_keys.end())
				continue;
			b_.add_key_input(n.net_name(id));
			sig_[id] = {-1, id};
		}
		for (NetId id : n.primary_outputs()) {
			b_.add_output(n.net_name(id));
			is_po_[id] = 1;
		}
	}

	const Netlist &source() const { return n_; }
	Sig sig(NetId net) const { return sig_[net]; }
	void set(NetId net, Sig s) { sig_[net] = s; }
	bool is_po(NetId net) const { return is_po_[net]; }

	/// Kind and fanins of the gate now driving `s`, if any.
	std::optional<GateKind> kind(const Sig &s) const { return s.is_const() ? std::nullopt : kind_[s.net]; }
	const std::vector<Sig> &fanins(const Sig &s) const { return fanins_[s.net]; }

	void emit(NetId out, GateKind kind, std::vector<Sig> fanins)
	{
		std::vector<std::string> names;
		for (const Sig &s : fanins)
			names.push_back(name(s));
		b_.add_gate(n_.net_name(out), kind, names);
		kind_[out] = kind;
		fanins_[out] = std::move(fanins);
		sig_[out] = {-1, out};
	}

	void alias(NetId out, Sig s)
	{
		if (!is_po_[out] || (!s.is_const() && s.net == out)) {
			sig_[out] = s;
			return;
		}
		if (s.is_const())
			emit(out, s.constant ? GateKind::Const1 : GateKind::Const0, {});
		else
			emit(out, GateKind::Buf, {s});
	}

	/// Emits `out` over already-named fanins.
	void emit_named(NetId out, GateKind kind, const std::vector<std::string> &fanins)
	{
		b_.add_gate(n_.net_name(out), kind, fanins);
		kind_[out] = kind;
		fanins_[out].clear();
		sig_[out] = {-1, out};
	}

	/// Emits a gate under a new name (used for rebalanced trees).
	std::string emit_fresh(GateKind kind, const std::vector<std::string> &fanins)
	{
		std::string out = fresh("bal");
		b_.add_gate(out, kind, fanins);
		return out;
	}

	std::string name(const Sig &s)
	{
		if (!s.is_const())
			return n_.net_name(s.net);
		std::string &c = const_net_[s.constant];
		if (c.empty()) {
			c = fresh(s.constant ? "const1" : "const0");
			b_.add_gate(c, s.constant ? GateKind::Const1 : GateKind::Const0, {});
		}
		return c;
	}

	Netlist finish() && { return std::move(b_).build(); }

      private:
	std::string fresh(const std::string &stem)
	{
		for (;;) {
			std::string s = stem + "_s" + std::to_string(counter_++);
			if (!n_.find_net(s) && used_.insert(s).second)
				return s;
		}
	}

	const Netlist &n_;
	NetlistBuilder b_;
	std::vector<Sig> sig_;
	std::vector<char> is_po_;
	std::vector<std::optional<GateKind>> kind_;
	std::vector<std::vector<Sig>> fanins_;
	std::string const_net_[2];
	std::unordered_set<std::string> used_;
	std::uint64_t counter_ = 0;
};

std::vector<Sig> mapped_fanins(const Rebuilder &r, const Gate &g)
{
	std::vector<Sig> out;
	for (NetId f : g.fanins)
		out.push_back(r.sig(f));
	return out;
}

void fold_gate(Rebuilder &r, const Gate &g)
{
	std::vector<Sig> in = mapped_fanins(r, g);
	const NetId out = g.output;
	switch (g.kind) {
	case GateKind::Const0:
	case GateKind::Const1:
		r.alias(out, const_sig(g.kind == GateKind::Const1));
		return;
	case GateKind::Buf:
		if (in[0].is_const())
			r.alias(out, in[0]);
		else
			r.emit(out, g.kind, in);
		return;
	case GateKind::Not:
		if (in[0].is_const())
			r.alias(out, const_sig(!in[0].constant));
		else
			r.emit(out, g.kind, in);
		return;
	case GateKind::And:
	case GateKind::Nand:
	case GateKind::Or:
	case GateKind::Nor: {
		const int ctrl = (g.kind == GateKind::And || g.kind == GateKind::Nand) ? 0 : 1;
		const bool inv = g.kind == GateKind::Nand || g.kind == GateKind::Nor;
		std::vector<Sig> rest;
		bool had_const = false;
		for (const Sig &s : in) {
			if (s.is_const()) {
				had_const = true;
				if (s.constant == ctrl) {
					r.alias(out, const_sig(ctrl ^ inv));
					return;
				}
				continue;
			}
			rest.push_back(s);
		}
		if (!had_const) {
			r.emit(out, g.kind, in);
			return;
		}
		if (rest.empty())
			r.alias(out, const_sig((!ctrl) ^ inv));
		else if (rest.size() == 1)
			inv ? r.emit(out, GateKind::Not, rest) : r.alias(out, rest[0]);
		else
			r.emit(out, g.kind, rest);
		return;
	}
	case GateKind::Xor:
	case GateKind::Xnor: {
		bool parity = g.kind == GateKind::Xnor;
		std::vector<Sig> rest;
		for (const Sig &s : in) {
			if (s.is_const())
				parity ^= s.constant == 1;
			else
				rest.push_back(s);
		}
		if (rest.size() == in.size()) {
			r.emit(out, g.kind, in);
			return;
		}
		if (rest.empty())
			r.alias(out, const_sig(parity));
		else if (rest.size() == 1)
			parity ? r.emit(out, GateKind::Not, rest) : r.alias(out, rest[0]);
		else
			r.emit(out, parity ? GateKind::Xnor : GateKind::Xor, rest);
		return;
	}
	case GateKind::Mux: {
		const Sig &s = in[0], &d0 = in[1], &d1 = in[2];
		if (s.is_const())
			r.alias(out, s.constant ? d1 : d0);
		else if (d0 == d1)
			r.alias(out, d0);
		else if (d0.is_const() && d1.is_const())
			d1.constant ? r.alias(out, s) : r.emit(out, GateKind::Not, {s});
		else if (d0.is_const() && d0.constant == 0)
			r.emit(out, GateKind::And, {s, d1});
		else if (d1.is_const() && d1.constant == 1)
			r.emit(out, GateKind::Or, {s, d0});
		else
			r.emit(out, g.kind, in);
		return;
	}
	}
}

Netlist fold_constants(const Netlist &n, const std::vector<std::pair<NetId, bool>> &fixed)
{
	std::vector<NetId> dropped;
	for (auto &[id, v] : fixed)
		dropped.push_back(id);
	Rebuilder r(n, dropped);
	for (auto &[id, v] : fixed)
		r.set(id, const_sig(v));
	for (std::uint32_t gi : n.topo_order())
		fold_gate(r, n.gate(gi));
	return std::move(r).finish();
}

bool commutative(GateKind k) { return k != GateKind::Mux; }

} // namespace

Netlist propagate_constants(const Netlist &n) { return fold_constants(n, {}); }

Netlist harden_key_input(const Netlist &n, std::size_t index, bool value)
{
	if (index >= n.key_count())
		throw NetlistError("key index " + std::to_string(index) + " out of range");
	return sweep_dead(fold_constants(n, {{n.key_inputs()[index], value}}));
}

Netlist harden_all_keys(const Netlist &n, const std::vector<bool> &key)
{
	if (key.size() != n.key_count())
		throw NetlistError("key length " + std::to_string(key.size()) + " does not match " + std::to_string(n.key_count()) +
				   " key inputs");
	std::vector<std::pair<NetId, bool>> fixed;
	for (std::size_t i = 0; i < key.size(); ++i)
		fixed.push_back({n.key_inputs()[i], key[i]});
	return sweep_dead(fold_constants(n, fixed));
}

Netlist sweep_dead(const Netlist &n)
{
	std::vector<char> live(n.net_count(), 0);
	std::vector<NetId> stack(n.primary_outputs().begin(), n.primary_outputs().end());
	while (!stack.empty()) {
		NetId x = stack.back();
		stack.pop_back();
		if (live[x])
			continue;
		live[x] = 1;
		if (int d = n.driver(x); d >= 0)
			for (NetId f : n.gate(d).fanins)
				stack.push_back(f);
	}
	Rebuilder r(n);
	for (std::uint32_t gi : n.topo_order()) {
		const Gate &g = n.gate(gi);
		if (live[g.output])
			r.emit(g.output, g.kind, mapped_fanins(r, g));
	}
	return std::move(r).finish();
}

Netlist remove_buffers(const Netlist &n)
{
	Rebuilder r(n);
	for (std::uint32_t gi : n.topo_order()) {
		const Gate &g = n.gate(gi);
		std::vector<Sig> in = mapped_fanins(r, g);
		if (g.kind == GateKind::Buf && !r.is_po(g.output)) {
			r.alias(g.output, in[0]);
			continue;
		}
		if (g.kind == GateKind::Not && !r.is_po(g.output) && r.kind(in[0]) == GateKind::Not) {
			r.alias(g.output, r.fanins(in[0])[0]);
			continue;
		}
		r.emit(g.output, g.kind, in);
	}
	return std::move(r).finish();
}

Netlist hash_gates(const Netlist &n)
{
	Rebuilder r(n);
	std::map<std::pair<GateKind, std::vector<std::uint64_t>>, NetId> table;
	for (std::uint32_t gi : n.topo_order()) {
		const Gate &g = n.gate(gi);
		std::vector<Sig> in = mapped_fanins(r, g);
		std::vector<std::uint64_t> key;
		for (const Sig &s : in)
			key.push_back(s.code());
		if (commutative(g.kind))
			std::sort(key.begin(), key.end());
		auto [it, fresh] = table.try_emplace({g.kind, key}, g.output);
		if (!fresh && !r.is_po(g.output)) {
			r.alias(g.output, Sig{-1, it->second});
			continue;
		}
		r.emit(g.output, g.kind, in);
	}
	return std::move(r).finish();
}

Netlist balance_gates(const Netlist &n)
{
	auto refs = n.fanout_counts();
	auto base_of = [](GateKind k) -> std::optional<GateKind> {
		if (k == GateKind::And || k == GateKind::Nand)
			return GateKind::And;
		if (k == GateKind::Or || k == GateKind::Nor)
			return GateKind::Or;
		return std::nullopt;
	};
	// A gate is absorbed when it is a single-fanout AND/OR feeding a gate of the same base.
	std::vector<char> absorbed(n.net_count(), 0);
	std::vector<char> is_po(n.net_count(), 0);
	for (NetId o : n.primary_outputs())
		is_po[o] = 1;
	for (const Gate &g : n.gates()) {
		auto base = base_of(g.kind);
		if (!base)
			continue;
		for (NetId f : g.fanins) {
			int d = n.driver(f);
			if (d >= 0 && n.gate(d).kind == *base && refs[f] == 1 && !is_po[f])
				absorbed[f] = 1;
		}
	}

	Rebuilder r(n);
	std::vector<int> level(n.net_count(), 0);
	for (std::uint32_t gi : n.topo_order()) {
		const Gate &g = n.gate(gi);
		if (absorbed[g.output])
			continue;
		auto base = base_of(g.kind);
		bool tree = false;
		if (base)
			for (NetId f : g.fanins)
				tree = tree || absorbed[f];
		if (!tree) {
			int lv = 0;
			for (NetId f : g.fanins)
				lv = std::max(lv, level[f] + 1);
			level[g.output] = is_const(g.kind) ? 0 : lv;
			r.emit(g.output, g.kind, mapped_fanins(r, g));
			continue;
		}
		// Collect the tree: leaves, its internal gates and the widest arity.
		std::vector<NetId> leaves;
		std::vector<std::uint32_t> internal;
		std::size_t arity = g.fanins.size();
		std::function<int(NetId)> walk = [&](NetId x) -> int {
			if (!absorbed[x]) {
				leaves.push_back(x);
				return level[x];
			}
			const Gate &ig = n.gate(n.driver(x));
			arity = std::max(arity, ig.fanins.size());
			int lv = 0;
			for (NetId f : ig.fanins)
				lv = std::max(lv, walk(f) + 1);
			internal.push_back(n.driver(x));
			return lv;
		};
		int old_level = 0;
		for (NetId f : g.fanins)
			old_level = std::max(old_level, walk(f) + 1);

		using Item = std::pair<int, std::string>;
		std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
		for (NetId x : leaves)
			heap.push({level[x], r.name(r.sig(x))});
		int new_level = 0;
		{
			// Dry run to compare depths before committing.
			std::priority_queue<int, std::vector<int>, std::greater<>> h;
			for (NetId x : leaves)
				h.push(level[x]);
			while (h.size() > arity) {
				int lv = 0;
				for (std::size_t i = 0; i < arity; ++i) {
					lv = std::max(lv, h.top());
					h.pop();
				}
				h.push(lv + 1);
			}
			while (!h.empty()) {
				new_level = std::max(new_level, h.top() + 1);
				h.pop();
			}
		}
		if (new_level >= old_level) {
			for (std::uint32_t ig : internal)
				r.emit(n.gate(ig).output, n.gate(ig).kind, mapped_fanins(r, n.gate(ig)));
			r.emit(g.output, g.kind, mapped_fanins(r, g));
			level[g.output] = old_level;
			continue;
		}
		while (heap.size() > arity) {
			int lv = 0;
			std::vector<std::string> group;
			for (std::size_t i = 0; i < arity; ++i) {
				lv = std::max(lv, heap.top().first);
				group.push_back(heap.top().second);
				heap.pop();
			}
			heap.push({lv + 1, r.emit_fresh(*base, group)});
		}
		std::vector<std::string> top;
		while (!heap.empty()) {
			top.push_back(heap.top().second);
			heap.pop();
		}
		r.emit_named(g.output, g.kind, top);
		level[g.output] = new_level;
	}
	return std::move(r).finish();
}

Netlist simplify_netlist(const Netlist &n)
{
	return balance_gates(sweep_dead(hash_gates(remove_buffers(propagate_constants(n)))));
}

} // namespace locklab
