#include "doctest.h"

#include "locklab/analysis.hpp"
#include "locklab/generator.hpp"
#include "locklab/netlist.hpp"
#include "locklab/simulate.hpp"
#include "test_support.hpp"

#include <map>
#include <random>
#include <set>

using namespace locklab;
using locklab::testing::bits_of;
using locklab::testing::truth_table;

namespace {

RandomCircuitSpec small_spec(std::uint64_t seed, std::size_t gates = 40, std::size_t inputs = 8)
{
	RandomCircuitSpec s;
	s.inputs = inputs;
	s.outputs = 3;
	s.gates = gates;
	s.seed = seed;
	s.xor_fraction = 0.1;
	return s;
}

/// Independent structural comparison: walks both netlists from the outputs
/// maintaining a gate bijection, then compares unreachable gates in order.
bool isomorphic(const Netlist &a, const Netlist &b)
{
	if (a.primary_inputs().size() != b.primary_inputs().size() || a.key_count() != b.key_count() ||
	    a.primary_outputs().size() != b.primary_outputs().size() || a.gates().size() != b.gates().size())
		return false;
	std::map<NetId, NetId> ab, ba;
	for (std::size_t i = 0; i < a.primary_inputs().size(); ++i) {
		ab[a.primary_inputs()[i]] = b.primary_inputs()[i];
		ba[b.primary_inputs()[i]] = a.primary_inputs()[i];
	}
	for (std::size_t i = 0; i < a.key_count(); ++i) {
		ab[a.key_inputs()[i]] = b.key_inputs()[i];
		ba[b.key_inputs()[i]] = a.key_inputs()[i];
	}
	std::function<bool(NetId, NetId)> match = [&](NetId x, NetId y) -> bool {
		auto it = ab.find(x);
		auto jt = ba.find(y);
		if (it != ab.end() || jt != ba.end())
			return it != ab.end() && jt != ba.end() && it->second == y && jt->second == x;
		int dx = a.driver(x), dy = b.driver(y);
		if (dx < 0 || dy < 0)
			return false;
		const Gate &gx = a.gate(dx);
		const Gate &gy = b.gate(dy);
		if (gx.kind != gy.kind || gx.fanins.size() != gy.fanins.size())
			return false;
		ab[x] = y;
		ba[y] = x;
		for (std::size_t i = 0; i < gx.fanins.size(); ++i)
			if (!match(gx.fanins[i], gy.fanins[i]))
				return false;
		return true;
	};
	for (std::size_t i = 0; i < a.primary_outputs().size(); ++i)
		if (!match(a.primary_outputs()[i], b.primary_outputs()[i]))
			return false;
	std::vector<std::uint32_t> dead_a, dead_b;
	for (auto g : a.topo_order())
		if (!ab.count(a.gate(g).output))
			dead_a.push_back(g);
	for (auto g : b.topo_order())
		if (!ba.count(b.gate(g).output))
			dead_b.push_back(g);
	if (dead_a.size() != dead_b.size())
		return false;
	for (std::size_t i = 0; i < dead_a.size(); ++i) {
		const Gate &gx = a.gate(dead_a[i]);
		const Gate &gy = b.gate(dead_b[i]);
		if (gx.kind != gy.kind || gx.fanins.size() != gy.fanins.size())
			return false;
		ab[gx.output] = gy.output;
		ba[gy.output] = gx.output;
		for (std::size_t j = 0; j < gx.fanins.size(); ++j) {
			auto it = ab.find(gx.fanins[j]);
			if (it == ab.end() || it->second != gy.fanins[j])
				return false;
		}
	}
	return true;
}

Netlist rename_internal(const Netlist &n, const std::string &prefix)
{
	std::vector<std::string> name(n.net_count());
	for (NetId id = 0; id < n.net_count(); ++id)
		name[id] = n.net_name(id);
	std::set<NetId> keep;
	for (NetId id : n.primary_inputs())
		keep.insert(id);
	for (NetId id : n.key_inputs())
		keep.insert(id);
	for (NetId id : n.primary_outputs())
		keep.insert(id);
	for (NetId id = 0; id < n.net_count(); ++id)
		if (!keep.count(id))
			name[id] = prefix + std::to_string(n.net_count() - id);
	NetlistBuilder b;
	for (NetId id : n.primary_inputs())
		b.add_input(name[id]);
	for (NetId id : n.key_inputs())
		b.add_key_input(name[id]);
	for (NetId id : n.primary_outputs())
		b.add_output(name[id]);
	for (const Gate &g : n.gates()) {
		std::vector<std::string> f;
		for (NetId x : g.fanins)
			f.push_back(name[x]);
		b.add_gate(name[g.output], g.kind, f);
	}
	return std::move(b).build();
}

} // namespace

TEST_CASE("parse_bench: identity circuit")
{
	Netlist n = parse_bench("INPUT(a)\nOUTPUT(f)\nf = BUF(a)\n");
	CHECK(n.primary_inputs().size() == 1);
	CHECK(n.primary_outputs().size() == 1);
	CHECK(n.gates().size() == 1);
	CHECK(n.key_count() == 0);
	CHECK(write_bench(n) == "INPUT(a)\nOUTPUT(f)\nf = BUF(a)\n");
}

TEST_CASE("parse_bench: locked majority has two key inputs")
{
	Netlist n = locked_majority_circuit();
	CHECK(n.key_count() == 2);
	CHECK(n.net_name(n.key_inputs()[0]) == "keyinput0");
	CHECK(n.net_name(n.key_inputs()[1]) == "keyinput1");
	CHECK(n.primary_inputs().size() == 3);
}

TEST_CASE("parse_bench: key inputs sorted by numeric suffix, comments and BUFF accepted")
{
	Netlist n = parse_bench("# header\nINPUT(keyinput10)\nINPUT(a)\nINPUT(keyinput2)\nOUTPUT(f)\n"
				"t = XOR(a, keyinput10)  # trailing\nf = BUFF(t2)\nt2 = XNOR(t, keyinput2)\n");
	REQUIRE(n.key_count() == 2);
	CHECK(n.net_name(n.key_inputs()[0]) == "keyinput2");
	CHECK(n.net_name(n.key_inputs()[1]) == "keyinput10");
	CHECK(n.gates().size() == 3);

	BenchOptions opt;
	opt.key_prefix = "k_";
	Netlist m = parse_bench("INPUT(k_0)\nINPUT(keyinput0)\nOUTPUT(f)\nf = AND(k_0, keyinput0)\n", opt);
	CHECK(m.key_count() == 1);
	CHECK(m.primary_inputs().size() == 1);
}

TEST_CASE("parse_bench: error reporting")
{
	SUBCASE("syntax error carries line and column")
	{
		try {
			parse_bench("INPUT(a)\nOUTPUT(f)\nf = AND(a b)\n");
			FAIL("expected ParseError");
		} catch (const ParseError &e) {
			CHECK(e.line() == 3);
			CHECK(e.column() == 11);
		}
	}
	SUBCASE("unknown gate")
	{
		CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(f)\nf = FOO(a)\n"), ParseError);
	}
	SUBCASE("arity mismatch")
	{
		CHECK_THROWS_AS(parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nf = NOT(a, b)\n"), ParseError);
		CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(f)\nf = AND(a)\n"), ParseError);
		CHECK_THROWS_AS(parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nf = MUX(a, b)\n"), ParseError);
	}
	SUBCASE("undriven net")
	{
		CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(f)\nf = AND(a, x)\n"), NetlistError);
		CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(g)\nf = NOT(a)\n"), NetlistError);
	}
	SUBCASE("duplicate driver")
	{
		CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(f)\nf = NOT(a)\nf = BUF(a)\n"), NetlistError);
		CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(a)\na = NOT(a)\n"), NetlistError);
	}
	SUBCASE("cycle")
	{
		CHECK_THROWS_WITH_AS(parse_bench("INPUT(a)\nOUTPUT(f)\nf = AND(a, g)\ng = NOT(f)\n"),
				     doctest::Contains("cycle"), NetlistError);
	}
}

TEST_CASE("write_bench: majority emits three inputs and one output")
{
	std::string text = write_bench(majority_circuit());
	std::size_t inputs = 0, outputs = 0, pos = 0;
	while ((pos = text.find("INPUT(", pos)) != std::string::npos)
		++inputs, ++pos;
	pos = 0;
	while ((pos = text.find("OUTPUT(", pos)) != std::string::npos)
		++outputs, ++pos;
	CHECK(inputs == 3);
	CHECK(outputs == 1);
}

TEST_CASE("property: parse(write(n)) is structurally n and serialization is byte-stable")
{
	for (std::uint64_t seed = 1; seed <= 100; ++seed) {
		auto spec = small_spec(seed, 10 + seed % 50);
		Netlist n = random_circuit(spec);
		std::string once = write_bench(n);
		Netlist back = parse_bench(once);
		REQUIRE(structurally_equal(n, back));
		CHECK(write_bench(back) == once);
	}
}

TEST_CASE("simulate: majority and locked majority")
{
	Netlist maj = majority_circuit();
	CHECK(simulate(maj, {false, false, false}) == std::vector<bool>{false});
	CHECK(simulate(maj, {true, false, true}) == std::vector<bool>{true});

	Netlist locked = locked_majority_circuit();
	KeyVector correct = KeyVector::from_string("01");
	for (std::uint64_t x = 0; x < 8; ++x) {
		auto in = bits_of(x, 3);
		CHECK(simulate(locked, in, correct) == simulate(maj, in));
	}
	CHECK_THROWS_AS(simulate(maj, {true, false}), NetlistError);
	CHECK_THROWS_AS(simulate(locked, {true, false, true}, KeyVector::from_string("1")), NetlistError);
}

TEST_CASE("simulate: constant-driven cone is zero for every input")
{
	Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nz = CONST0()\nf = AND(z, a, b)\n");
	for (std::uint64_t x = 0; x < 4; ++x)
		CHECK(simulate(n, bits_of(x, 2)) == std::vector<bool>{false});
}

TEST_CASE("property: bit-parallel simulation agrees with the reference evaluator")
{
	for (std::uint64_t seed = 1; seed <= 20; ++seed) {
		Netlist n = random_circuit(small_spec(seed, 30, 6));
		auto table = truth_table(n);
		for (std::uint64_t r = 0; r < table.size(); ++r)
			REQUIRE(simulate(n, bits_of(r, 6)) == table[r]);
	}
}

TEST_CASE("stats: pass-through and majority")
{
	auto s = stats(parse_bench("INPUT(a)\nOUTPUT(f)\nf = BUF(a)\n"));
	CHECK(s.gate_count == 1);
	CHECK(s.depth == 1);
	CHECK(s.literal_count == 1);
	CHECK(s.area_proxy == doctest::Approx(1.0));

	auto m = stats(majority_circuit());
	CHECK(m.gate_count == 4);
	CHECK(m.depth == 2);
	CHECK(m.literal_count == 9);
	CHECK(m.area_proxy == doctest::Approx(2 * 3 + 3));

	Netlist empty = parse_bench("INPUT(a)\nOUTPUT(a)\n");
	auto e = stats(empty);
	CHECK(e.gate_count == 0);
	CHECK(e.depth == 0);
	CHECK(e.area_proxy == 0.0);
	CHECK(e.power_proxy == 0.0);
}

TEST_CASE("property: stats recount and longest path")
{
	for (std::uint64_t seed = 1; seed <= 25; ++seed) {
		Netlist n = random_circuit(small_spec(seed, 50, 10));
		auto s = stats(n);
		// Literal recount from the BENCH text: one literal per comma-separated fanin.
		std::int64_t literals = 0;
		for (char c : write_bench(n))
			literals += c == ',' ? 1 : 0;
		for (const Gate &g : n.gates())
			literals += g.fanins.empty() ? 0 : 1;
		CHECK(s.literal_count == literals);
		// Longest path by memoized recursion from the outputs.
		std::map<NetId, std::int64_t> memo;
		std::function<std::int64_t(NetId)> depth = [&](NetId net) -> std::int64_t {
			int d = n.driver(net);
			if (d < 0 || is_const(n.gate(d).kind))
				return 0;
			if (auto it = memo.find(net); it != memo.end())
				return it->second;
			std::int64_t best = 0;
			for (NetId f : n.gate(d).fanins)
				best = std::max(best, depth(f));
			return memo[net] = best + 1;
		};
		std::int64_t expect = 0;
		for (NetId o : n.primary_outputs())
			expect = std::max(expect, depth(o));
		CHECK(s.depth == expect);
		CHECK(s.depth <= s.gate_count);
		CHECK(s.power_proxy >= 0.0);
		CHECK(stats(n) == s);
	}
}

TEST_CASE("structural_signature: renaming invariance and sensitivity")
{
	Netlist n = random_circuit(small_spec(7, 60));
	CHECK(structural_signature(n) == structural_signature(rename_internal(n, "zz")));

	Netlist changed;
	{
		auto text = write_bench(n);
		auto pos = text.find("= AND(");
		REQUIRE(pos != std::string::npos);
		text.replace(pos, 6, "= OR(");
		changed = parse_bench(text);
	}
	CHECK(structural_signature(n) != structural_signature(changed));
}

TEST_CASE("property: digest inequality agrees with exact comparison over random mutations")
{
	Netlist base = random_circuit(small_spec(11, 40));
	const std::string base_text = write_bench(base);
	std::mt19937_64 rng(2024);
	int equal_count = 0, different_count = 0;
	for (int trial = 0; trial < 1000; ++trial) {
		Netlist mutated;
		int kind = static_cast<int>(rng() % 3);
		if (kind == 0) {
			mutated = rename_internal(base, "r" + std::to_string(trial) + "_");
		} else {
			NetlistBuilder b;
			for (NetId id : base.primary_inputs())
				b.add_input(base.net_name(id));
			for (NetId id : base.primary_outputs())
				b.add_output(base.net_name(id));
			std::size_t target = rng() % base.gates().size();
			auto topo = base.topo_order();
			std::vector<std::size_t> position(base.gates().size());
			for (std::size_t i = 0; i < topo.size(); ++i)
				position[topo[i]] = i;
			for (std::size_t gi = 0; gi < base.gates().size(); ++gi) {
				Gate g = base.gate(gi);
				if (gi == target) {
					if (kind == 1 && g.fanins.size() >= 2) {
						static constexpr GateKind wide[] = {GateKind::And, GateKind::Or, GateKind::Nand,
										    GateKind::Nor, GateKind::Xor, GateKind::Xnor};
						if (g.kind != GateKind::Mux)
							g.kind = wide[rng() % 6];
					} else if (kind == 2) {
						// Rewire one fanin to an input or an earlier gate.
						std::size_t j = rng() % g.fanins.size();
						std::vector<NetId> candidates(base.primary_inputs().begin(), base.primary_inputs().end());
						for (std::size_t i = 0; i < position[gi]; ++i)
							candidates.push_back(base.gate(topo[i]).output);
						g.fanins[j] = candidates[rng() % candidates.size()];
					}
				}
				std::vector<std::string> f;
				for (NetId x : g.fanins)
					f.push_back(base.net_name(x));
				b.add_gate(base.net_name(g.output), g.kind, f);
			}
			mutated = std::move(b).build();
		}
		bool same_digest = structural_signature(base) == structural_signature(mutated);
		bool same_structure = isomorphic(base, mutated);
		REQUIRE(same_digest == same_structure);
		(same_digest ? equal_count : different_count)++;
	}
	CHECK(equal_count > 0);
	CHECK(different_count > 0);
}

TEST_CASE("extract_logic_cone")
{
	SUBCASE("single-output netlist is its own cone")
	{
		Netlist m = majority_circuit();
		Netlist cone = extract_logic_cone(m, "f");
		CHECK(structurally_equal(m, cone));
	}
	SUBCASE("disjoint cones partition the gates")
	{
		Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(x)\nOUTPUT(y)\n"
					"x1 = AND(a, b)\nx = NOT(x1)\ny = OR(c, c)\n");
		auto cx = extract_logic_cone(n, "x");
		auto cy = extract_logic_cone(n, "y");
		CHECK(cx.gates().size() + cy.gates().size() == n.gates().size());
		CHECK(cx.primary_inputs().size() == 2);
		CHECK(cy.primary_inputs().size() == 1);
	}
	SUBCASE("unknown output")
	{
		CHECK_THROWS_AS(extract_logic_cone(majority_circuit(), "t1"), NetlistError);
		CHECK_THROWS_AS(extract_logic_cone(majority_circuit(), "nope"), NetlistError);
	}
	SUBCASE("property: cone output agrees with the full netlist")
	{
		for (std::uint64_t seed = 1; seed <= 10; ++seed) {
			Netlist n = random_circuit(small_spec(seed, 60, 10));
			for (NetId o : n.primary_outputs()) {
				Netlist cone = extract_logic_cone(n, n.net_name(o));
				std::size_t po_index =
				    std::find(n.primary_outputs().begin(), n.primary_outputs().end(), o) - n.primary_outputs().begin();
				for (std::uint64_t r = 0; r < 1024; ++r) {
					auto in = bits_of(r, 10);
					std::vector<bool> cin;
					for (NetId pi : cone.primary_inputs()) {
						auto full = *n.find_net(cone.net_name(pi));
						auto idx = std::find(n.primary_inputs().begin(), n.primary_inputs().end(), full) -
							   n.primary_inputs().begin();
						cin.push_back(in[idx]);
					}
					REQUIRE(simulate(cone, cin)[0] == simulate(n, in)[po_index]);
				}
			}
		}
	}
}
