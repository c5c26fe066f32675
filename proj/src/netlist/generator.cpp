#include "locklab/generator.hpp"
#include "locklab/simulate.hpp"

#include <algorithm>
#include <deque>
#include <random>

namespace locklab {

namespace {

std::uint64_t uniform(std::mt19937_64 &rng, std::uint64_t bound) { return bound == 0 ? 0 : rng() % bound; }

double unit(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0); }

/**
 * Marks nets whose flip never reaches a sink over random patterns, scanning
 * from the last net down so that a net made into a sink can carry the
 * observability of its own fanin cone.
 */
void mark_unobservable_as_sinks(const std::vector<GateKind> &kind_of,
				const std::vector<std::vector<std::size_t>> &fanin_of, std::size_t inputs,
				std::vector<bool> &is_sink, std::mt19937_64 &rng)
{
	constexpr std::size_t W = 8;
	const std::size_t n = kind_of.size();
	std::vector<std::uint64_t> value(n * W), diff(n * W, 0);
	for (std::size_t i = 0; i < n; ++i)
		for (std::size_t w = 0; w < W; ++w) {
			if (i < inputs) {
				value[i * W + w] = rng();
				continue;
			}
			std::vector<std::uint64_t> in;
			for (std::size_t f : fanin_of[i])
				in.push_back(value[f * W + w]);
			value[i * W + w] = eval_gate_word(kind_of[i], in);
		}
	std::vector<bool> dirty(n, false);
	std::vector<std::size_t> touched;
	for (std::size_t x = n; x-- > inputs;) {
		if (is_sink[x])
			continue;
		bool observable = false;
		dirty[x] = true;
		touched.push_back(x);
		for (std::size_t w = 0; w < W; ++w)
			diff[x * W + w] = ~0ULL;
		for (std::size_t y = x + 1; y < n && !observable; ++y) {
			if (std::none_of(fanin_of[y].begin(), fanin_of[y].end(), [&](std::size_t f) { return dirty[f]; }))
				continue;
			bool changed = false;
			for (std::size_t w = 0; w < W; ++w) {
				std::vector<std::uint64_t> in;
				for (std::size_t f : fanin_of[y])
					in.push_back(value[f * W + w] ^ diff[f * W + w]);
				diff[y * W + w] = eval_gate_word(kind_of[y], in) ^ value[y * W + w];
				changed = changed || diff[y * W + w] != 0;
			}
			if (changed) {
				dirty[y] = true;
				touched.push_back(y);
				observable = is_sink[y];
			}
		}
		for (std::size_t t : touched) {
			dirty[t] = false;
			for (std::size_t w = 0; w < W; ++w)
				diff[t * W + w] = 0;
		}
		touched.clear();
		if (!observable)
			is_sink[x] = true;
	}
}

} // namespace

Netlist random_circuit(const RandomCircuitSpec &spec)
{
	if (spec.inputs == 0)
		throw NetlistError("random circuit needs at least one input");
	std::mt19937_64 rng(spec.seed);
	NetlistBuilder b;
	std::vector<std::string> nets;
	for (std::size_t i = 0; i < spec.inputs; ++i) {
		nets.push_back("G" + std::to_string(i + 1));
		b.add_input(nets.back());
	}
	std::vector<std::uint32_t> fanout(spec.inputs, 0);
	std::vector<std::vector<std::size_t>> fanin_of(spec.inputs);
	std::vector<GateKind> kind_of(spec.inputs, GateKind::Buf);
	std::size_t next_id = spec.inputs + 1;

	auto pick = [&](std::size_t limit) -> std::size_t {
		if (limit > spec.window && unit(rng) < spec.locality)
			return limit - 1 - uniform(rng, spec.window);
		return uniform(rng, limit);
	};
	auto add = [&](GateKind kind, std::vector<std::size_t> fanin_idx) {
		std::vector<std::string> fanins;
		for (auto f : fanin_idx) {
			fanins.push_back(nets[f]);
			++fanout[f];
		}
		nets.push_back("N" + std::to_string(next_id++));
		fanout.push_back(0);
		fanin_of.push_back(fanin_idx);
		kind_of.push_back(kind);
		b.add_gate(nets.back(), kind, fanins);
	};

	static constexpr GateKind basic[] = {GateKind::And, GateKind::Or, GateKind::Nand, GateKind::Nor};
	for (std::size_t g = 0; g < spec.gates; ++g) {
		double r = unit(rng);
		GateKind kind;
		std::size_t arity;
		if (r < spec.mux_fraction && nets.size() >= 3) {
			kind = GateKind::Mux;
			arity = 3;
		} else if (r < spec.mux_fraction + spec.xor_fraction) {
			kind = (rng() & 1) ? GateKind::Xor : GateKind::Xnor;
			arity = 2;
		} else if (r < spec.mux_fraction + spec.xor_fraction + 0.08) {
			kind = GateKind::Not;
			arity = 1;
		} else {
			kind = basic[uniform(rng, 4)];
			arity = 2 + uniform(rng, spec.max_fanin > 2 ? spec.max_fanin - 1 : 1);
		}
		if (nets.size() < arity) {
			kind = GateKind::Not;
			arity = 1;
		}
		// Fanins that directly feed one another, as in AND(a, NOR(a, b)), are
		// the main source of redundant logic; reject them a bounded number of times.
		auto feeds = [&](std::size_t x, std::size_t y) {
			return std::find(fanin_of[y].begin(), fanin_of[y].end(), x) != fanin_of[y].end();
		};
		std::vector<std::size_t> fanins;
		int retries = 0;
		while (fanins.size() < arity) {
			std::size_t f = pick(nets.size());
			bool near = std::any_of(fanins.begin(), fanins.end(),
						[&](std::size_t c) { return feeds(f, c) || feeds(c, f); });
			if (near && retries++ < 20)
				continue;
			if (std::find(fanins.begin(), fanins.end(), f) == fanins.end())
				fanins.push_back(f);
			else if (nets.size() <= arity)
				fanins.push_back(f);
		}
		add(kind, std::move(fanins));
	}

	// Dangling nets become sinks, and so does any net that random patterns
	// show to be masked, which keeps redundant logic rare.
	std::vector<bool> is_sink(nets.size(), false);
	for (std::size_t i = spec.inputs; i < nets.size(); ++i)
		is_sink[i] = fanout[i] == 0;
	mark_unobservable_as_sinks(kind_of, fanin_of, spec.inputs, is_sink, rng);
	std::deque<std::size_t> sinks;
	for (std::size_t i = spec.inputs; i < nets.size(); ++i)
		if (is_sink[i])
			sinks.push_back(i);
	const std::size_t want = std::max<std::size_t>(spec.outputs, 1);
	while (sinks.size() > want) {
		std::size_t a = sinks.front();
		sinks.pop_front();
		std::size_t c = sinks.front();
		sinks.pop_front();
		add(basic[uniform(rng, 4)], {a, c});
		sinks.push_back(nets.size() - 1);
	}
	std::vector<std::size_t> outs(sinks.begin(), sinks.end());
	for (std::size_t i = spec.inputs; outs.size() < want && i < nets.size(); ++i) {
		std::size_t cand = nets.size() - 1 - (i - spec.inputs);
		if (cand >= spec.inputs && std::find(outs.begin(), outs.end(), cand) == outs.end())
			outs.push_back(cand);
	}
	// Nets the fold left masked are xored into an output, which makes their
	// flips visible without turning the whole fold into a parity tree.
	if (!outs.empty()) {
		std::vector<bool> is_out(nets.size(), false);
		for (auto o : outs)
			is_out[o] = true;
		std::vector<bool> marked = is_out;
		mark_unobservable_as_sinks(kind_of, fanin_of, spec.inputs, marked, rng);
		std::size_t next_out = 0;
		for (std::size_t x = spec.inputs; x < is_out.size(); ++x) {
			if (!marked[x] || is_out[x])
				continue;
			std::size_t &o = outs[next_out++ % outs.size()];
			add((rng() & 1) ? GateKind::Xor : GateKind::Xnor, {o, x});
			o = nets.size() - 1;
		}
	}
	if (outs.empty())
		outs.push_back(0);
	std::sort(outs.begin(), outs.end());
	for (auto o : outs)
		b.add_output(nets[o]);
	return std::move(b).build();
}

Netlist majority_circuit()
{
	return parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(f)\n"
			   "t1 = AND(a, b)\nt2 = AND(b, c)\nt3 = AND(a, c)\nf = OR(t1, t2, t3)\n");
}

Netlist locked_majority_circuit()
{
	return parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(keyinput0)\nINPUT(keyinput1)\nOUTPUT(f)\n"
			   "t1 = AND(a, b)\nt2 = AND(b, c)\nt3 = AND(a, c)\n"
			   "l1 = XOR(t1, keyinput0)\nl2 = XNOR(t2, keyinput1)\nf = OR(l1, l2, t3)\n");
}

Netlist c17_circuit()
{
	return parse_bench("INPUT(G1)\nINPUT(G2)\nINPUT(G3)\nINPUT(G6)\nINPUT(G7)\n"
			   "OUTPUT(G22)\nOUTPUT(G23)\n"
			   "G10 = NAND(G1, G3)\nG11 = NAND(G3, G6)\nG16 = NAND(G2, G11)\nG19 = NAND(G11, G7)\n"
			   "G22 = NAND(G10, G16)\nG23 = NAND(G16, G19)\n");
}

} // namespace locklab
