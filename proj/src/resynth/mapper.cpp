#include "locklab/synth_passes.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <tuple>
#include <unordered_set>

namespace locklab {

bool cell_allowed(CellSet cells, GateKind kind)
{
	switch (kind) {
	case GateKind::Nand:
	case GateKind::Nor:
	case GateKind::Not:
	case GateKind::Const0:
	case GateKind::Const1:
		return true;
	case GateKind::And:
	case GateKind::Or:
		return cells != CellSet::Low;
	case GateKind::Buf:
	case GateKind::Mux:
		return cells == CellSet::High;
	default:
		return false;
	}
}

int cell_arity(CellSet cells)
{
	switch (cells) {
	case CellSet::Low:
		return 2;
	case CellSet::Medium:
		return 3;
	case CellSet::High:
		return 4;
	}
	return 2;
}

namespace {

std::uint64_t mix(std::uint64_t x)
{
	x ^= x >> 31;
	x *= 0x7fb5d329728ea185ULL;
	x ^= x >> 27;
	x *= 0x81dadef4bc2dd44dULL;
	x ^= x >> 33;
	return x;
}

GateKind complement_kind(GateKind k)
{
	switch (k) {
	case GateKind::And:
		return GateKind::Nand;
	case GateKind::Nand:
		return GateKind::And;
	case GateKind::Or:
		return GateKind::Nor;
	case GateKind::Nor:
		return GateKind::Or;
	default:
		return k;
	}
}

/// Kind computing the same function over inverted inputs.
GateKind dual_kind(GateKind k)
{
	switch (k) {
	case GateKind::And:
		return GateKind::Nor;
	case GateKind::Or:
		return GateKind::Nand;
	case GateKind::Nand:
		return GateKind::Or;
	case GateKind::Nor:
		return GateKind::And;
	default:
		return k;
	}
}

bool and_family(GateKind k)
{
	return k == GateKind::And || k == GateKind::Or || k == GateKind::Nand || k == GateKind::Nor;
}

struct MGate {
	GateKind kind;
	std::vector<int> in;
};

/// How one AIG node is covered: a wide AND over literals, or a multiplexer
/// with lits = {s, d0, d1} computing the complement of the node.
struct Cover {
	bool mux = false;
	std::vector<AigLit> lits;
};

/// A concrete gate choice for a cover: fanin literals and the output polarity.
struct Form {
	GateKind kind;
	std::vector<AigLit> lits;
	bool out_compl;
};

class Mapper
{
      public:
	Mapper(const Aig &aig, const AigInterface &iface, const MapParams &p)
	    : aig_(aig), iface_(iface), p_(p), inputs_(static_cast<int>(aig.input_count())),
	      refs_(aig.fanout_counts()), levels_(aig.levels()), cover_(aig.node_count()),
	      planned_(aig.node_count(), 0), demand_(aig.node_count(), {0, 0}), sig_(aig.node_count(), {-1, -1})
	{
		if (iface.inputs.size() + iface.keys.size() != aig.input_count() || iface.outputs.size() != aig.outputs().size())
			throw NetlistError("map_to_cells: interface does not match the AIG");
		for (int i = 0; i < inputs_; ++i) {
			sig_[i + 1][0] = i;
			level_.push_back(0);
		}
	}

	Netlist run()
	{
		plan();
		realize();
		attach_outputs();
		for (int r = 1; r < p_.iterations; ++r)
			peephole();
		sweep();
		if (p_.fanout_limit > 0)
			limit_fanout();
		return emit();
	}

      private:
	int add_gate(GateKind kind, std::vector<int> in)
	{
		int lv = 0;
		for (int x : in)
			lv = std::max(lv, level_[x] + 1);
		gates_.push_back({kind, std::move(in)});
		level_.push_back(lv);
		return inputs_ + static_cast<int>(gates_.size()) - 1;
	}
	MGate &gate(int id) { return gates_[id - inputs_]; }
	bool is_gate(int id) const { return id >= inputs_; }

	Cover cover_for(std::uint32_t n) const
	{
		AigLit f0 = aig_.fanin0(n), f1 = aig_.fanin1(n);
		if (p_.cells == CellSet::High && aig_compl(f0) && aig_compl(f1)) {
			std::uint32_t a = aig_node(f0), b = aig_node(f1);
			if (aig_.is_and(a) && aig_.is_and(b) && refs_[a] == 1 && refs_[b] == 1) {
				AigLit av[2] = {aig_.fanin0(a), aig_.fanin1(a)};
				AigLit bv[2] = {aig_.fanin0(b), aig_.fanin1(b)};
				for (int i = 0; i < 2; ++i)
					for (int j = 0; j < 2; ++j)
						if (av[i] == aig_not(bv[j]))
							return {true, {av[i], bv[1 - j], av[1 - i]}};
			}
		}
		std::vector<AigLit> leaves{f0, f1};
		const std::size_t arity = static_cast<std::size_t>(cell_arity(p_.cells));
		while (leaves.size() < arity) {
			int pick = -1;
			for (std::size_t i = 0; i < leaves.size(); ++i) {
				AigLit l = leaves[i];
				std::uint32_t m = aig_node(l);
				if (aig_compl(l) || !aig_.is_and(m) || refs_[m] != 1)
					continue;
				AigLit g0 = aig_.fanin0(m), g1 = aig_.fanin1(m);
				auto has = [&](AigLit x) { return std::find(leaves.begin(), leaves.end(), x) != leaves.end(); };
				if (has(aig_not(g0)) || has(aig_not(g1)))
					continue;
				if (pick < 0 || levels_[m] > levels_[aig_node(leaves[pick])])
					pick = static_cast<int>(i);
			}
			if (pick < 0)
				break;
			std::uint32_t m = aig_node(leaves[pick]);
			leaves.erase(leaves.begin() + pick);
			for (AigLit g : {aig_.fanin0(m), aig_.fanin1(m)})
				if (std::find(leaves.begin(), leaves.end(), g) == leaves.end())
					leaves.push_back(g);
		}
		return {false, leaves};
	}

	void plan()
	{
		std::vector<std::uint32_t> stack;
		for (AigLit o : aig_.outputs()) {
			demand_[aig_node(o)][aig_compl(o)]++;
			stack.push_back(aig_node(o));
		}
		while (!stack.empty()) {
			std::uint32_t n = stack.back();
			stack.pop_back();
			if (!aig_.is_and(n) || planned_[n])
				continue;
			planned_[n] = 1;
			cover_[n] = cover_for(n);
			for (AigLit l : cover_[n].lits) {
				demand_[aig_node(l)][aig_compl(l)]++;
				stack.push_back(aig_node(l));
			}
		}
	}

	int get(AigLit l)
	{
		auto &s = sig_[aig_node(l)];
		int c = aig_compl(l);
		if (s[c] < 0)
			s[c] = add_gate(GateKind::Not, {s[1 - c]});
		return s[c];
	}

	std::vector<Form> forms(std::uint32_t n) const
	{
		const Cover &c = cover_[n];
		std::vector<Form> out;
		if (c.mux) {
			AigLit s = c.lits[0], d0 = c.lits[1], d1 = c.lits[2];
			out.push_back({GateKind::Mux, {s, d0, d1}, true});
			out.push_back({GateKind::Mux, {s, aig_not(d0), aig_not(d1)}, false});
			out.push_back({GateKind::Mux, {aig_not(s), d1, d0}, true});
			out.push_back({GateKind::Mux, {aig_not(s), aig_not(d1), aig_not(d0)}, false});
			return out;
		}
		std::vector<AigLit> neg;
		for (AigLit l : c.lits)
			neg.push_back(aig_not(l));
		for (Form f : {Form{GateKind::And, c.lits, false}, Form{GateKind::Nand, c.lits, true},
			       Form{GateKind::Nor, neg, false}, Form{GateKind::Or, neg, true}})
			if (cell_allowed(p_.cells, f.kind))
				out.push_back(f);
		return out;
	}

	void realize()
	{
		for (std::uint32_t n = 0; n < aig_.node_count(); ++n) {
			if (!planned_[n])
				continue;
			const bool fast = p_.delay || (!p_.delay_nodes.empty() && p_.delay_nodes[n]);
			auto fs = forms(n);
			int best = -1;
			std::tuple<int, int, std::uint64_t> best_key{};
			for (std::size_t fi = 0; fi < fs.size(); ++fi) {
				const Form &f = fs[fi];
				int nots = 0, arrival = 0;
				std::vector<AigLit> seen;
				for (AigLit l : f.lits) {
					const auto &s = sig_[aig_node(l)];
					int have = s[aig_compl(l)];
					int lv = have >= 0 ? level_[have] : level_[s[1 - aig_compl(l)]] + 1;
					if (have < 0 && std::find(seen.begin(), seen.end(), l) == seen.end()) {
						++nots;
						seen.push_back(l);
					}
					arrival = std::max(arrival, lv + 1);
				}
				const auto &d = demand_[n];
				if (d[f.out_compl] == 0 && d[!f.out_compl] > 0) {
					++nots;
					++arrival;
				}
				std::uint64_t tie = p_.seed_ties ? mix(p_.seed ^ (std::uint64_t(n) << 3) ^ fi) : fi;
				std::tuple<int, int, std::uint64_t> key =
				    fast ? std::tuple{arrival, nots, tie} : std::tuple{nots, arrival, tie};
				if (best < 0 || key < best_key) {
					best = static_cast<int>(fi);
					best_key = key;
				}
			}
			const Form &f = fs[best];
			std::vector<int> in;
			for (AigLit l : f.lits)
				in.push_back(get(l));
			sig_[n][f.out_compl] = add_gate(f.kind, std::move(in));
		}
	}

	int make_buffer(int src)
	{
		if (cell_allowed(p_.cells, GateKind::Buf))
			return add_gate(GateKind::Buf, {src});
		return add_gate(GateKind::Not, {add_gate(GateKind::Not, {src})});
	}

	void attach_outputs()
	{
		std::unordered_set<std::string> input_names(iface_.inputs.begin(), iface_.inputs.end());
		input_names.insert(iface_.keys.begin(), iface_.keys.end());
		std::unordered_set<std::string> done;
		for (std::size_t i = 0; i < iface_.outputs.size(); ++i) {
			const std::string &name = iface_.outputs[i];
			if (input_names.count(name) || !done.insert(name).second)
				continue;
			AigLit l = aig_.outputs()[i];
			int id;
			if (aig_node(l) == 0)
				id = add_gate(aig_compl(l) ? GateKind::Const1 : GateKind::Const0, {});
			else {
				id = get(l);
				if (!is_gate(id) || claimed_.count(id))
					id = make_buffer(id);
			}
			claimed_[id] = name;
		}
	}

	std::vector<int> use_counts() const
	{
		std::vector<int> cnt(inputs_ + gates_.size(), 0);
		for (const MGate &g : gates_)
			for (int x : g.in)
				cnt[x]++;
		for (auto &[id, name] : claimed_)
			cnt[id]++;
		return cnt;
	}

	void peephole()
	{
		auto cnt = use_counts();
		auto redirect = [&](int &slot, int to) {
			cnt[slot]--;
			cnt[to]++;
			slot = to;
		};
		for (std::size_t gi = 0; gi < gates_.size(); ++gi) {
			MGate &g = gates_[gi];
			for (int &x : g.in)
				if (is_gate(x) && gate(x).kind == GateKind::Not) {
					int y = gate(x).in[0];
					if (is_gate(y) && gate(y).kind == GateKind::Not)
						redirect(x, gate(y).in[0]);
				}
			if (g.kind == GateKind::Not && is_gate(g.in[0])) {
				int h = g.in[0];
				MGate &hg = gate(h);
				if (and_family(hg.kind) && cnt[h] == 1 && cell_allowed(p_.cells, complement_kind(hg.kind))) {
					g.kind = complement_kind(hg.kind);
					cnt[h]--;
					g.in = hg.in;
					for (int x : g.in)
						cnt[x]++;
					continue;
				}
			}
			if (and_family(g.kind) && cell_allowed(p_.cells, dual_kind(g.kind))) {
				bool all = true;
				for (int x : g.in)
					all = all && is_gate(x) && gate(x).kind == GateKind::Not && cnt[x] == 1;
				if (all) {
					for (int &x : g.in) {
						cnt[x]--;
						x = gate(x).in[0];
						cnt[x]++;
					}
					g.kind = dual_kind(g.kind);
				}
			}
		}
	}

	void sweep()
	{
		live_.assign(inputs_ + gates_.size(), 0);
		std::vector<int> stack;
		for (auto &[id, name] : claimed_)
			stack.push_back(id);
		while (!stack.empty()) {
			int x = stack.back();
			stack.pop_back();
			if (live_[x])
				continue;
			live_[x] = 1;
			if (is_gate(x))
				for (int y : gate(x).in)
					stack.push_back(y);
		}
	}

	void limit_fanout()
	{
		const std::size_t limit = static_cast<std::size_t>(p_.fanout_limit);
		std::vector<std::vector<std::pair<int, int>>> users(inputs_ + gates_.size());
		for (std::size_t gi = 0; gi < gates_.size(); ++gi)
			if (live_[inputs_ + gi])
				for (std::size_t s = 0; s < gates_[gi].in.size(); ++s)
					users[gates_[gi].in[s]].push_back({static_cast<int>(gi), static_cast<int>(s)});
		const std::size_t original = users.size();
		for (std::size_t net = 0; net < original; ++net) {
			auto slots = users[net];
			while (slots.size() > limit) {
				std::vector<std::pair<int, int>> next;
				for (std::size_t i = 0; i < slots.size(); i += limit) {
					int b = make_buffer(static_cast<int>(net));
					live_.resize(inputs_ + gates_.size(), 1);
					for (std::size_t j = i; j < std::min(slots.size(), i + limit); ++j)
						gates_[slots[j].first].in[slots[j].second] = b;
					// The gate reading `net` is the buffer itself or the first inverter of a pair.
					int reader = gate(b).in[0] == static_cast<int>(net) ? b : gate(b).in[0];
					next.push_back({reader - inputs_, 0});
				}
				slots = std::move(next);
			}
		}
	}

	Netlist emit()
	{
		NetlistBuilder b;
		std::unordered_set<std::string> used;
		std::vector<std::string> names(inputs_ + gates_.size());
		for (std::size_t i = 0; i < iface_.inputs.size(); ++i) {
			b.add_input(iface_.inputs[i]);
			names[i] = iface_.inputs[i];
		}
		for (std::size_t i = 0; i < iface_.keys.size(); ++i) {
			b.add_key_input(iface_.keys[i]);
			names[iface_.inputs.size() + i] = iface_.keys[i];
		}
		for (const std::string &o : iface_.outputs) {
			b.add_output(o);
			used.insert(o);
		}
		used.insert(iface_.inputs.begin(), iface_.inputs.end());
		used.insert(iface_.keys.begin(), iface_.keys.end());
		for (auto &[id, name] : claimed_)
			names[id] = name;
		std::size_t counter = 0;
		for (std::size_t gi = 0; gi < gates_.size(); ++gi) {
			int id = inputs_ + static_cast<int>(gi);
			if (!live_[id] || !names[id].empty())
				continue;
			std::string s;
			do
				s = "n" + std::to_string(counter++);
			while (used.count(s));
			names[id] = s;
		}
		for (std::size_t gi = 0; gi < gates_.size(); ++gi) {
			int id = inputs_ + static_cast<int>(gi);
			if (!live_[id])
				continue;
			std::vector<std::string> in;
			for (int x : gates_[gi].in)
				in.push_back(names[x]);
			b.add_gate(names[id], gates_[gi].kind, in);
		}
		return std::move(b).build();
	}

	const Aig &aig_;
	const AigInterface &iface_;
	const MapParams &p_;
	const int inputs_;
	std::vector<std::uint32_t> refs_;
	std::vector<int> levels_;
	std::vector<Cover> cover_;
	std::vector<char> planned_;
	std::vector<std::array<int, 2>> demand_;
	std::vector<std::array<int, 2>> sig_;
	std::vector<MGate> gates_;
	std::vector<int> level_;
	std::map<int, std::string> claimed_;
	std::vector<char> live_;
};

} // namespace

Netlist map_to_cells(const Aig &aig, const AigInterface &iface, const MapParams &params)
{
	return Mapper(aig, iface, params).run();
}

} // namespace locklab
