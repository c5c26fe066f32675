#include "locklab/simulate.hpp"

namespace locklab {

std::uint64_t eval_gate_word(GateKind kind, std::span<const std::uint64_t> in)
{
	std::uint64_t v = 0;
	switch (kind) {
	case GateKind::And:
	case GateKind::Nand:
		v = ~0ULL;
		for (auto w : in)
			v &= w;
		return kind == GateKind::And ? v : ~v;
	case GateKind::Or:
	case GateKind::Nor:
		for (auto w : in)
			v |= w;
		return kind == GateKind::Or ? v : ~v;
	case GateKind::Xor:
	case GateKind::Xnor:
		for (auto w : in)
			v ^= w;
		return kind == GateKind::Xor ? v : ~v;
	case GateKind::Not:
		return ~in[0];
	case GateKind::Buf:
		return in[0];
	case GateKind::Mux:
		return (~in[0] & in[1]) | (in[0] & in[2]);
	case GateKind::Const0:
		return 0;
	case GateKind::Const1:
		return ~0ULL;
	}
	return 0;
}

std::vector<std::uint64_t> simulate_words(const Netlist &n, std::span<const std::uint64_t> inputs,
					  std::span<const std::uint64_t> keys)
{
	if (inputs.size() != n.primary_inputs().size())
		throw NetlistError("input vector length " + std::to_string(inputs.size()) + " does not match " +
				   std::to_string(n.primary_inputs().size()) + " primary inputs");
	if (keys.size() != n.key_count())
		throw NetlistError("key length " + std::to_string(keys.size()) + " does not match " +
				   std::to_string(n.key_count()) + " key inputs");
	std::vector<std::uint64_t> value(n.net_count(), 0);
	for (std::size_t i = 0; i < inputs.size(); ++i)
		value[n.primary_inputs()[i]] = inputs[i];
	for (std::size_t i = 0; i < keys.size(); ++i)
		value[n.key_inputs()[i]] = keys[i];
	std::uint64_t buf[8];
	std::vector<std::uint64_t> wide;
	for (std::uint32_t gi : n.topo_order()) {
		const Gate &g = n.gate(gi);
		std::span<std::uint64_t> args;
		if (g.fanins.size() <= 8) {
			args = std::span<std::uint64_t>(buf, g.fanins.size());
		} else {
			wide.resize(g.fanins.size());
			args = wide;
		}
		for (std::size_t j = 0; j < g.fanins.size(); ++j)
			args[j] = value[g.fanins[j]];
		value[g.output] = eval_gate_word(g.kind, args);
	}
	return value;
}

std::vector<std::uint64_t> simulate_output_words(const Netlist &n, std::span<const std::uint64_t> inputs,
						 std::span<const std::uint64_t> keys)
{
	auto value = simulate_words(n, inputs, keys);
	std::vector<std::uint64_t> out;
	out.reserve(n.primary_outputs().size());
	for (NetId o : n.primary_outputs())
		out.push_back(value[o]);
	return out;
}

std::vector<bool> simulate(const Netlist &n, const std::vector<bool> &inputs, const KeyVector &key)
{
	std::vector<std::uint64_t> in(inputs.size());
	for (std::size_t i = 0; i < inputs.size(); ++i)
		in[i] = inputs[i] ? 1 : 0;
	std::vector<std::uint64_t> k(key.size());
	for (std::size_t i = 0; i < key.size(); ++i)
		k[i] = key.bits[i] ? 1 : 0;
	auto words = simulate_output_words(n, in, k);
	std::vector<bool> out(words.size());
	for (std::size_t i = 0; i < words.size(); ++i)
		out[i] = words[i] & 1;
	return out;
}

std::vector<std::uint64_t> random_words(std::mt19937_64 &rng, std::size_t count)
{
	std::vector<std::uint64_t> w(count);
	for (auto &x : w)
		x = rng();
	return w;
}

} // namespace locklab
