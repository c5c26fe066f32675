#include "locklab/aig.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <set>

namespace locklab {

AigLit Aig::add_input()
{
	if (and_count() != 0)
		throw NetlistError("AIG inputs must be created before AND nodes");
	fanin0_.push_back(0);
	fanin1_.push_back(0);
	++inputs_;
	return aig_lit(static_cast<std::uint32_t>(inputs_));
}

AigLit Aig::make_and(AigLit a, AigLit b)
{
	if (a > b)
		std::swap(a, b);
	if (a == kAigFalse)
		return kAigFalse;
	if (a == kAigTrue)
		return b;
	if (a == b)
		return a;
	if (a == aig_not(b))
		return kAigFalse;
	std::uint64_t key = (std::uint64_t(a) << 32) | b;
	auto it = hash_.find(key);
	if (it != hash_.end())
		return aig_lit(it->second);
	auto node = static_cast<std::uint32_t>(fanin0_.size());
	fanin0_.push_back(a);
	fanin1_.push_back(b);
	hash_.emplace(key, node);
	return aig_lit(node);
}

AigLit Aig::make_and_deep(AigLit a, AigLit b)
{
	if (a > b)
		std::swap(a, b);
	if (a == kAigFalse || a == aig_not(b))
		return kAigFalse;
	if (a == kAigTrue)
		return b;
	if (a == b)
		return a;
	for (int side = 0; side < 2; ++side) {
		AigLit x = side ? b : a;
		AigLit y = side ? a : b;
		std::uint32_t xn = aig_node(x);
		if (!is_and(xn))
			continue;
		AigLit x0 = fanin0_[xn], x1 = fanin1_[xn];
		if (!aig_compl(x)) {
			if (y == x0 || y == x1)
				return x;
			if (y == aig_not(x0) || y == aig_not(x1))
				return kAigFalse;
			std::uint32_t yn = aig_node(y);
			if (!aig_compl(y) && is_and(yn)) {
				AigLit y0 = fanin0_[yn], y1 = fanin1_[yn];
				if (x0 == aig_not(y0) || x0 == aig_not(y1) || x1 == aig_not(y0) || x1 == aig_not(y1))
					return kAigFalse;
			}
		} else {
			// y and NOT(x0 AND x1)
			if (y == aig_not(x0) || y == aig_not(x1))
				return y;
			if (y == x0)
				return make_and_deep(y, aig_not(x1));
			if (y == x1)
				return make_and_deep(y, aig_not(x0));
		}
	}
	return make_and(a, b);
}

AigLit Aig::make_xor(AigLit a, AigLit b)
{
	return make_or(make_and(a, aig_not(b)), make_and(aig_not(a), b));
}

AigLit Aig::make_mux(AigLit s, AigLit d0, AigLit d1)
{
	return make_or(make_and(s, d1), make_and(aig_not(s), d0));
}

std::vector<int> Aig::levels() const
{
	std::vector<int> lvl(node_count(), 0);
	for (std::uint32_t n = static_cast<std::uint32_t>(inputs_) + 1; n < node_count(); ++n)
		lvl[n] = 1 + std::max(lvl[aig_node(fanin0_[n])], lvl[aig_node(fanin1_[n])]);
	return lvl;
}

int Aig::depth() const
{
	auto lvl = levels();
	int d = 0;
	for (AigLit o : outputs_)
		d = std::max(d, lvl[aig_node(o)]);
	return d;
}

std::vector<std::uint32_t> Aig::fanout_counts() const
{
	std::vector<std::uint32_t> refs(node_count(), 0);
	for (std::uint32_t n = static_cast<std::uint32_t>(inputs_) + 1; n < node_count(); ++n) {
		++refs[aig_node(fanin0_[n])];
		++refs[aig_node(fanin1_[n])];
	}
	for (AigLit o : outputs_)
		++refs[aig_node(o)];
	return refs;
}

Aig Aig::cleanup(bool deep) const
{
	std::vector<char> live(node_count(), 0);
	for (AigLit o : outputs_)
		live[aig_node(o)] = 1;
	for (std::size_t n = node_count(); n-- > inputs_ + 1;)
		if (live[n]) {
			live[aig_node(fanin0_[n])] = 1;
			live[aig_node(fanin1_[n])] = 1;
		}
	Aig out;
	std::vector<AigLit> map(node_count(), kAigFalse);
	for (std::size_t i = 1; i <= inputs_; ++i)
		map[i] = out.add_input();
	auto tr = [&](AigLit l) { return map[aig_node(l)] ^ (l & 1); };
	for (std::size_t n = inputs_ + 1; n < node_count(); ++n)
		if (live[n])
			map[n] = deep ? out.make_and_deep(tr(fanin0_[n]), tr(fanin1_[n]))
				      : out.make_and(tr(fanin0_[n]), tr(fanin1_[n]));
	for (AigLit o : outputs_)
		out.add_output(tr(o));
	return out;
}

std::vector<std::uint64_t> Aig::simulate(const std::vector<std::uint64_t> &input_words) const
{
	std::vector<std::uint64_t> v(node_count(), 0);
	for (std::size_t i = 0; i < inputs_; ++i)
		v[i + 1] = input_words.at(i);
	auto w = [&](AigLit l) { return aig_compl(l) ? ~v[aig_node(l)] : v[aig_node(l)]; };
	for (std::size_t n = inputs_ + 1; n < node_count(); ++n)
		v[n] = w(fanin0_[n]) & w(fanin1_[n]);
	std::vector<std::uint64_t> out;
	for (AigLit o : outputs_)
		out.push_back(w(o));
	return out;
}

namespace {

template <class F> AigLit reduce_balanced(std::vector<AigLit> lits, F combine)
{
	while (lits.size() > 1) {
		std::vector<AigLit> next;
		for (std::size_t i = 0; i + 1 < lits.size(); i += 2)
			next.push_back(combine(lits[i], lits[i + 1]));
		if (lits.size() % 2)
			next.push_back(lits.back());
		lits = std::move(next);
	}
	return lits.front();
}

} // namespace

Aig aig_from_netlist(const Netlist &n, AigInterface *iface)
{
	Aig aig;
	std::vector<AigLit> lit(n.net_count(), kAigFalse);
	for (NetId id : n.primary_inputs())
		lit[id] = aig.add_input();
	for (NetId id : n.key_inputs())
		lit[id] = aig.add_input();
	auto conj = [&](AigLit a, AigLit b) { return aig.make_and(a, b); };
	auto disj = [&](AigLit a, AigLit b) { return aig.make_or(a, b); };
	auto exor = [&](AigLit a, AigLit b) { return aig.make_xor(a, b); };
	for (std::uint32_t gi : n.topo_order()) {
		const Gate &g = n.gate(gi);
		std::vector<AigLit> in;
		for (NetId f : g.fanins)
			in.push_back(lit[f]);
		AigLit r = kAigFalse;
		switch (g.kind) {
		case GateKind::And:
			r = reduce_balanced(in, conj);
			break;
		case GateKind::Nand:
			r = aig_not(reduce_balanced(in, conj));
			break;
		case GateKind::Or:
			r = reduce_balanced(in, disj);
			break;
		case GateKind::Nor:
			r = aig_not(reduce_balanced(in, disj));
			break;
		case GateKind::Xor:
			r = reduce_balanced(in, exor);
			break;
		case GateKind::Xnor:
			r = aig_not(reduce_balanced(in, exor));
			break;
		case GateKind::Not:
			r = aig_not(in[0]);
			break;
		case GateKind::Buf:
			r = in[0];
			break;
		case GateKind::Mux:
			r = aig.make_mux(in[0], in[1], in[2]);
			break;
		case GateKind::Const0:
			r = kAigFalse;
			break;
		case GateKind::Const1:
			r = kAigTrue;
			break;
		}
		lit[g.output] = r;
	}
	for (NetId o : n.primary_outputs())
		aig.add_output(lit[o]);
	if (iface) {
		iface->inputs.clear();
		iface->keys.clear();
		iface->outputs.clear();
		for (NetId id : n.primary_inputs())
			iface->inputs.push_back(n.net_name(id));
		for (NetId id : n.key_inputs())
			iface->keys.push_back(n.net_name(id));
		for (NetId id : n.primary_outputs())
			iface->outputs.push_back(n.net_name(id));
	}
	return aig;
}

Netlist aig_to_netlist(const Aig &aig, const AigInterface &iface)
{
	NetlistBuilder b;
	std::vector<std::string> name(aig.node_count());
	std::size_t idx = 0;
	for (const auto &s : iface.inputs) {
		b.add_input(s);
		name[++idx] = s;
	}
	for (const auto &s : iface.keys) {
		b.add_key_input(s);
		name[++idx] = s;
	}
	for (const auto &s : iface.outputs)
		b.add_output(s);
	std::vector<std::string> neg(aig.node_count());
	std::string zero;
	auto signal = [&](AigLit l) -> std::string {
		std::uint32_t n = aig_node(l);
		if (n == 0) {
			if (zero.empty()) {
				zero = b.fresh_name("const0");
				b.add_gate(zero, GateKind::Const0, {});
			}
			if (!aig_compl(l))
				return zero;
		}
		if (!aig_compl(l))
			return name[n];
		if (neg[n].empty()) {
			neg[n] = b.fresh_name("inv");
			b.add_gate(neg[n], GateKind::Not, {n == 0 ? zero : name[n]});
		}
		return neg[n];
	};
	for (std::size_t n = aig.input_count() + 1; n < aig.node_count(); ++n) {
		name[n] = b.fresh_name("and");
		b.add_gate(name[n], GateKind::And, {signal(aig.fanin0(n)), signal(aig.fanin1(n))});
	}
	std::set<std::string> driven(iface.inputs.begin(), iface.inputs.end());
	driven.insert(iface.keys.begin(), iface.keys.end());
	for (std::size_t i = 0; i < iface.outputs.size(); ++i)
		if (driven.insert(iface.outputs[i]).second)
			b.add_gate(iface.outputs[i], GateKind::Buf, {signal(aig.outputs()[i])});
	return std::move(b).build();
}

std::vector<char> aig_key_tfo(const Aig &aig, std::size_t primary_inputs)
{
	std::vector<char> mark(aig.node_count(), 0);
	for (std::size_t i = primary_inputs + 1; i <= aig.input_count(); ++i)
		mark[i] = 1;
	for (std::size_t n = aig.input_count() + 1; n < aig.node_count(); ++n)
		mark[n] = mark[aig_node(aig.fanin0(n))] || mark[aig_node(aig.fanin1(n))];
	return mark;
}

Aig aig_balance(const Aig &aig, const std::vector<char> &restrict)
{
	auto refs = aig.fanout_counts();
	Aig out;
	std::vector<AigLit> map(aig.node_count(), kAigFalse);
	std::vector<char> done(aig.node_count(), 0);
	done[0] = 1;
	for (std::size_t i = 1; i <= aig.input_count(); ++i) {
		map[i] = out.add_input();
		done[i] = 1;
	}
	std::vector<int> lvl(out.node_count(), 0);
	auto level_of = [&](AigLit l) {
		std::uint32_t n = aig_node(l);
		while (lvl.size() < out.node_count()) {
			std::size_t m = lvl.size();
			lvl.push_back(1 + std::max(lvl[aig_node(out.fanin0(m))], lvl[aig_node(out.fanin1(m))]));
		}
		return lvl[n];
	};
	auto allowed = [&](std::uint32_t n) { return restrict.empty() || restrict[n]; };

	std::function<AigLit(std::uint32_t)> build = [&](std::uint32_t node) -> AigLit {
		if (done[node])
			return map[node];
		AigLit f0 = aig.fanin0(node), f1 = aig.fanin1(node);
		AigLit result;
		if (!allowed(node)) {
			AigLit a = build(aig_node(f0)) ^ (f0 & 1);
			AigLit b = build(aig_node(f1)) ^ (f1 & 1);
			result = out.make_and(a, b);
		} else {
			std::vector<AigLit> leaves, stack{f1, f0};
			while (!stack.empty()) {
				AigLit l = stack.back();
				stack.pop_back();
				std::uint32_t n = aig_node(l);
				if (!aig_compl(l) && aig.is_and(n) && refs[n] == 1 && allowed(n)) {
					stack.push_back(aig.fanin1(n));
					stack.push_back(aig.fanin0(n));
				} else {
					leaves.push_back(l);
				}
			}
			using Item = std::pair<int, AigLit>;
			std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
			for (AigLit l : leaves) {
				AigLit nl = build(aig_node(l)) ^ (l & 1);
				heap.push({level_of(nl), nl});
			}
			while (heap.size() > 1) {
				AigLit a = heap.top().second;
				heap.pop();
				AigLit b = heap.top().second;
				heap.pop();
				AigLit c = out.make_and(a, b);
				heap.push({level_of(c), c});
			}
			result = heap.top().second;
		}
		done[node] = 1;
		map[node] = result;
		return result;
	};
	for (AigLit o : aig.outputs())
		out.add_output(build(aig_node(o)) ^ (o & 1));
	return out;
}

} // namespace locklab
