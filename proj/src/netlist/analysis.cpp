#include "locklab/analysis.hpp"
#include "locklab/simulate.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <random>
#include <sstream>

namespace locklab {

double AreaWeights::weight(GateKind kind, std::size_t fanins) const
{
	switch (kind) {
	case GateKind::Const0:
	case GateKind::Const1:
		return 0.0;
	case GateKind::Not:
	case GateKind::Buf:
		return inverter;
	case GateKind::Mux:
		return mux;
	default:
		return two_input + extra_fanin * static_cast<double>(fanins > 2 ? fanins - 2 : 0);
	}
}

std::vector<std::int64_t> net_levels(const Netlist &n)
{
	std::vector<std::int64_t> level(n.net_count(), 0);
	for (std::uint32_t gi : n.topo_order()) {
		const Gate &g = n.gate(gi);
		if (is_const(g.kind))
			continue;
		std::int64_t l = 0;
		for (NetId f : g.fanins)
			l = std::max(l, level[f]);
		level[g.output] = l + 1;
	}
	return level;
}

ComplexityStats stats(const Netlist &n, const StatsOptions &options)
{
	ComplexityStats s;
	s.gate_count = static_cast<std::int64_t>(n.gates().size());
	if (s.gate_count == 0)
		return s;
	auto level = net_levels(n);
	for (NetId o : n.primary_outputs())
		s.depth = std::max(s.depth, level[o]);
	for (const Gate &g : n.gates()) {
		s.literal_count += static_cast<std::int64_t>(g.fanins.size());
		s.area_proxy += options.weights.weight(g.kind, g.fanins.size());
	}

	const std::size_t vectors = std::max<std::size_t>(options.power_vectors, 1);
	const std::size_t words = (vectors + 63) / 64;
	std::mt19937_64 rng(options.seed);
	std::vector<std::vector<std::uint64_t>> in_words(words), key_words(words);
	for (std::size_t w = 0; w < words; ++w) {
		in_words[w] = random_words(rng, n.primary_inputs().size());
		key_words[w] = random_words(rng, n.key_count());
	}
	std::vector<std::uint64_t> toggles(n.net_count(), 0);
	std::vector<int> last_bit(n.net_count(), -1);
	for (std::size_t w = 0; w < words; ++w) {
		std::size_t valid = std::min<std::size_t>(64, vectors - w * 64);
		std::uint64_t mask = valid == 64 ? ~0ULL : ((1ULL << valid) - 1);
		auto value = simulate_words(n, in_words[w], key_words[w]);
		for (const Gate &g : n.gates()) {
			std::uint64_t v = value[g.output] & mask;
			std::uint64_t pair_mask = valid <= 1 ? 0 : (mask >> 1);
			toggles[g.output] += std::popcount((v ^ (v >> 1)) & pair_mask);
			int first = static_cast<int>(v & 1);
			if (last_bit[g.output] >= 0 && last_bit[g.output] != first)
				++toggles[g.output];
			last_bit[g.output] = static_cast<int>((v >> (valid - 1)) & 1);
		}
	}
	for (const Gate &g : n.gates())
		s.power_proxy += static_cast<double>(toggles[g.output]) / static_cast<double>(vectors) *
				 options.weights.weight(g.kind, g.fanins.size());
	return s;
}

std::string to_hex(const Digest &d)
{
	static const char *digits = "0123456789abcdef";
	std::string s;
	s.reserve(64);
	for (auto b : d) {
		s.push_back(digits[b >> 4]);
		s.push_back(digits[b & 15]);
	}
	return s;
}

Digest sha256(std::string_view bytes)
{
	Digest d{};
	unsigned int len = 0;
	EVP_Digest(bytes.data(), bytes.size(), d.data(), &len, EVP_sha256(), nullptr);
	return d;
}

std::string canonical_form(const Netlist &n)
{
	std::vector<std::string> canon(n.net_count());
	for (std::size_t i = 0; i < n.primary_inputs().size(); ++i)
		canon[n.primary_inputs()[i]] = "i" + std::to_string(i);
	for (std::size_t i = 0; i < n.key_inputs().size(); ++i)
		canon[n.key_inputs()[i]] = "k" + std::to_string(i);

	std::vector<std::uint32_t> order;
	std::vector<char> seen(n.gates().size(), 0);
	auto visit = [&](NetId root) {
		// Iterative post-order DFS, fanins in stored order.
		std::vector<std::pair<std::uint32_t, std::size_t>> stack;
		int d = n.driver(root);
		if (d < 0 || seen[d])
			return;
		seen[d] = 1;
		stack.emplace_back(static_cast<std::uint32_t>(d), 0);
		while (!stack.empty()) {
			auto &[gi, next] = stack.back();
			const Gate &g = n.gate(gi);
			if (next < g.fanins.size()) {
				int fd = n.driver(g.fanins[next++]);
				if (fd >= 0 && !seen[fd]) {
					seen[fd] = 1;
					stack.emplace_back(static_cast<std::uint32_t>(fd), 0);
				}
				continue;
			}
			order.push_back(gi);
			stack.pop_back();
		}
	};
	for (NetId o : n.primary_outputs())
		visit(o);
	// Gates outside every output cone follow in topological order.
	for (std::uint32_t gi : n.topo_order())
		if (!seen[gi]) {
			seen[gi] = 1;
			order.push_back(gi);
		}

	std::ostringstream os;
	os << "pi " << n.primary_inputs().size() << " key " << n.key_count() << "\n";
	for (std::size_t idx = 0; idx < order.size(); ++idx)
		canon[n.gate(order[idx]).output] = "g" + std::to_string(idx);
	for (std::uint32_t gi : order) {
		const Gate &g = n.gate(gi);
		os << canon[g.output] << "=" << to_string(g.kind);
		for (NetId f : g.fanins)
			os << " " << canon[f];
		os << "\n";
	}
	os << "po";
	for (NetId o : n.primary_outputs())
		os << " " << canon[o];
	os << "\n";
	return os.str();
}

Digest structural_signature(const Netlist &n) { return sha256(canonical_form(n)); }

Netlist extract_logic_cone(const Netlist &n, std::string_view output)
{
	auto root = n.find_net(output);
	if (!root || std::find(n.primary_outputs().begin(), n.primary_outputs().end(), *root) ==
			 n.primary_outputs().end())
		throw NetlistError("'" + std::string(output) + "' is not a primary output");

	std::vector<char> in_cone(n.net_count(), 0);
	std::vector<NetId> stack{*root};
	in_cone[*root] = 1;
	while (!stack.empty()) {
		NetId net = stack.back();
		stack.pop_back();
		int d = n.driver(net);
		if (d < 0)
			continue;
		for (NetId f : n.gate(d).fanins)
			if (!in_cone[f]) {
				in_cone[f] = 1;
				stack.push_back(f);
			}
	}

	NetlistBuilder b;
	for (NetId id : n.primary_inputs())
		if (in_cone[id])
			b.add_input(n.net_name(id));
	for (NetId id : n.key_inputs())
		if (in_cone[id])
			b.add_key_input(n.net_name(id));
	b.add_output(n.net_name(*root));
	for (const Gate &g : n.gates())
		if (in_cone[g.output]) {
			std::vector<std::string> fanins;
			for (NetId f : g.fanins)
				fanins.push_back(n.net_name(f));
			b.add_gate(n.net_name(g.output), g.kind, fanins);
		}
	return std::move(b).build();
}

} // namespace locklab
