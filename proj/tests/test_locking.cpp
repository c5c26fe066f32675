#include "doctest.h"

#include "locklab/analysis.hpp"
#include "locklab/cnf.hpp"
#include "locklab/generator.hpp"
#include "locklab/locking.hpp"
#include "locklab/simulate.hpp"
#include "test_support.hpp"

#include <random>
#include <set>

using namespace locklab;
using locklab::testing::bits_of;
using locklab::testing::reference_outputs;

namespace {

Netlist circuit(std::uint64_t seed, std::size_t inputs = 10, std::size_t gates = 80)
{
	RandomCircuitSpec s;
	s.inputs = inputs;
	s.outputs = 3;
	s.gates = gates;
	s.seed = seed;
	return random_circuit(s);
}

/// Exhaustive when the input count allows, else 10^4 random vectors.
bool agrees_under_key(const Netlist &orig, const Netlist &locked, const KeyVector &key)
{
	const std::size_t w = orig.primary_inputs().size();
	std::mt19937_64 rng(17);
	const bool exhaustive = w <= 16;
	const std::uint64_t rows = exhaustive ? (1ULL << w) : 10000;
	for (std::uint64_t r = 0; r < rows; ++r) {
		std::vector<bool> in = exhaustive ? bits_of(r, w) : bits_of(rng(), w);
		if (simulate(locked, in, key) != reference_outputs(orig, in))
			return false;
	}
	return true;
}

/// SAT miter with the locked copy's key fixed: unsatisfiable iff equivalent.
bool miter_equivalent(const Netlist &orig, const Netlist &locked, const KeyVector &key)
{
	Miter m = build_miter(orig, locked, MiterSharing::InputsOnly);
	for (std::size_t i = 0; i < key.size(); ++i)
		m.formula.add_clause({m.keys_b[i] ^ !key.bits[i]});
	return solve(m.formula).unsat();
}

KeyVector full_key(const Netlist &locked, const LockRecord &r)
{
	REQUIRE(locked.key_count() == r.true_key.size());
	return r.true_key;
}

} // namespace

TEST_CASE("rll: majority locked on t1 and t2 with key 01")
{
	RllOptions opt;
	opt.sites = {"t1", "t2"};
	opt.key = {false, true};
	auto res = lock_rll(majority_circuit(), 2, 0, opt);
	CHECK(res.record.true_key.to_string() == "01");
	CHECK(structural_signature(res.netlist) == structural_signature(locked_majority_circuit()));
	CHECK(agrees_under_key(majority_circuit(), res.netlist, res.record.true_key));
	CHECK_FALSE(agrees_under_key(majority_circuit(), res.netlist, KeyVector::from_string("10")));
}

TEST_CASE("rll: p=0 is the identity")
{
	Netlist n = circuit(3);
	auto res = lock_rll(n, 0, 9);
	CHECK(structurally_equal(res.netlist, n));
	CHECK(res.record.true_key.size() == 0);
}

TEST_CASE("property: every scheme restores function under the true key")
{
	for (std::uint64_t seed = 1; seed <= 12; ++seed) {
		Netlist n = circuit(seed);
		std::vector<LockResult> locks;
		locks.push_back(lock_rll(n, 8, seed));
		locks.push_back(lock_antisat(n, 8, seed));
		locks.push_back(lock_caslock(n, 8, seed));
		locks.push_back(lock_sfll_point(n, 6, seed));
		locks.push_back(lock_compound(n, 6, 4, seed));
		for (const auto &l : locks) {
			CAPTURE(to_string(l.record.scheme));
			KeyVector k = full_key(l.netlist, l.record);
			CHECK(agrees_under_key(n, l.netlist, k));
			CHECK(miter_equivalent(n, l.netlist, k));
		}
	}
}

TEST_CASE("property: wide circuits agree on random vectors")
{
	Netlist n = circuit(77, 24, 200);
	for (auto scheme : {LockScheme::Rll, LockScheme::AntiSat, LockScheme::CasLock, LockScheme::SfllPoint,
			    LockScheme::Compound}) {
		auto l = lock(n, scheme, 8, 8, 5);
		CHECK(agrees_under_key(n, l.netlist, l.record.true_key));
		CHECK(miter_equivalent(n, l.netlist, l.record.true_key));
	}
}

TEST_CASE("overhead: exact gate counts per scheme")
{
	Netlist n = circuit(4);
	const std::size_t base = n.gates().size();
	for (std::size_t p : {1u, 5u, 16u})
		CHECK(lock_rll(n, p, 2).netlist.gates().size() == base + p);
	for (std::size_t p : {2u, 4u, 6u, 10u}) {
		// p/2 XORs per tree, p-2 tree gates, the flip AND and the output XOR.
		CHECK(lock_antisat(n, p, 2).netlist.gates().size() == base + 2 * (p / 2) + (p - 2) + 1 + 1);
		CHECK(lock_caslock(n, p, 2).netlist.gates().size() == base + 2 * (p / 2) + (p - 2) + 1 + 1);
	}
	for (std::size_t p : {1u, 3u, 7u}) {
		auto l = lock_sfll_point(n, p, 8);
		std::size_t zeros = std::count(l.record.protected_pattern.begin(), l.record.protected_pattern.end(), false);
		std::size_t ands = p >= 2 ? 2 : 0;
		CHECK(l.netlist.gates().size() == base + zeros + ands + p + 2);
	}
}

TEST_CASE("determinism: same inputs give the same netlist and record")
{
	Netlist n = circuit(5);
	for (auto scheme : {LockScheme::Rll, LockScheme::AntiSat, LockScheme::CasLock, LockScheme::SfllPoint,
			    LockScheme::Compound}) {
		auto a = lock(n, scheme, 6, 4, 42);
		auto b = lock(n, scheme, 6, 4, 42);
		CHECK(structurally_equal(a.netlist, b.netlist));
		CHECK(write_bench(a.netlist) == write_bench(b.netlist));
		CHECK(a.record == b.record);
	}
	CHECK(lock_rll(n, 6, 1).record.insertion_sites != lock_rll(n, 6, 2).record.insertion_sites);
}

TEST_CASE("antisat: one wrong first-half bit flips exactly one pattern over the chosen inputs")
{
	for (std::uint64_t seed = 1; seed <= 6; ++seed) {
		Netlist n = circuit(seed);
		const std::size_t p = 8, half = p / 2;
		auto l = lock_antisat(n, p, seed);
		REQUIRE(l.record.compared_inputs.size() == half);
		std::vector<std::size_t> pos;
		for (const auto &name : l.record.compared_inputs) {
			auto pis = n.primary_inputs();
			pos.push_back(std::find(pis.begin(), pis.end(), *n.find_net(name)) - pis.begin());
		}
		std::size_t out = std::find(n.primary_outputs().begin(), n.primary_outputs().end(),
					    *n.find_net(l.record.protected_output)) -
				  n.primary_outputs().begin();
		for (std::size_t bit = 0; bit < half; ++bit) {
			KeyVector wrong = l.record.true_key;
			wrong.bits[bit] = !wrong.bits[bit];
			std::mt19937_64 rng(seed * 31 + bit);
			auto rest = bits_of(rng(), n.primary_inputs().size());
			int flips = 0;
			for (std::uint64_t r = 0; r < (1ULL << half); ++r) {
				auto in = rest;
				for (std::size_t j = 0; j < half; ++j)
					in[pos[j]] = (r >> j) & 1;
				flips += simulate(l.netlist, in, wrong)[out] != reference_outputs(n, in)[out];
			}
			CHECK(flips == 1);
		}
	}
}

TEST_CASE("antisat: p=2 on a one-gate circuit has the key class {00, 11}")
{
	Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nf = AND(a, b)\n");
	auto l = lock_antisat(n, 2, 3);
	std::set<std::string> correct;
	for (std::uint64_t k = 0; k < 4; ++k) {
		KeyVector key{bits_of(k, 2)};
		if (agrees_under_key(n, l.netlist, key))
			correct.insert(key.to_string());
	}
	CHECK(correct == std::set<std::string>{"00", "11"});
	CHECK(correct.count(l.record.true_key.to_string()) == 1);
}

TEST_CASE("caslock: all-AND pattern reduces to Anti-SAT")
{
	Netlist n = circuit(6);
	for (std::size_t p : {2u, 6u, 10u}) {
		auto as = lock_antisat(n, p, 11);
		TreeLockOptions opt;
		opt.level_kinds.assign(as.record.level_kinds.size(), GateKind::And);
		auto cas = lock_caslock(n, p, 11, opt);
		CHECK(structural_signature(as.netlist) == structural_signature(cas.netlist));
		CHECK(as.record.true_key == cas.record.true_key);
	}
}

TEST_CASE("caslock: seeded patterns mix AND and OR levels and are recorded")
{
	Netlist n = circuit(8, 12, 80);
	std::set<std::vector<GateKind>> seen;
	for (std::uint64_t seed = 1; seed <= 20; ++seed) {
		auto l = lock_caslock(n, 16, seed);
		CHECK(l.record.level_kinds.size() == 3);
		seen.insert(l.record.level_kinds);
	}
	CHECK(seen.size() > 1);
}

TEST_CASE("caslock: p=4 brute force over all keys")
{
	Netlist n = circuit(9, 6, 40);
	for (std::uint64_t seed = 1; seed <= 8; ++seed) {
		auto l = lock_caslock(n, 4, seed);
		std::set<std::uint64_t> cls;
		for (std::uint64_t k = 0; k < 16; ++k)
			if (agrees_under_key(n, l.netlist, KeyVector{bits_of(k, 4)}))
				cls.insert(k);
		REQUIRE_FALSE(cls.empty());
		std::uint64_t truth = 0;
		for (std::size_t i = 0; i < 4; ++i)
			truth |= std::uint64_t(l.record.true_key.bits[i]) << i;
		CHECK(cls.count(truth) == 1);
		// Within the class the two key halves coincide.
		for (auto k : cls)
			CHECK((k & 3) == (k >> 2));
	}
}

TEST_CASE("sfll_point: wrong keys corrupt exactly the pattern and key rows")
{
	for (std::uint64_t seed = 1; seed <= 6; ++seed) {
		Netlist n = circuit(seed);
		const std::size_t p = 5;
		auto l = lock_sfll_point(n, p, seed);
		REQUIRE(l.record.protected_pattern == l.record.true_key.bits);
		std::vector<std::size_t> pos;
		for (const auto &name : l.record.compared_inputs) {
			auto pis = n.primary_inputs();
			pos.push_back(std::find(pis.begin(), pis.end(), *n.find_net(name)) - pis.begin());
		}
		std::mt19937_64 rng(seed);
		for (int trial = 0; trial < 6; ++trial) {
			std::uint64_t kv = rng() % (1ULL << p);
			KeyVector k{bits_of(kv, p)};
			if (k == l.record.true_key)
				continue;
			auto rest = bits_of(rng(), n.primary_inputs().size());
			for (std::uint64_t r = 0; r < (1ULL << p); ++r) {
				auto in = rest;
				for (std::size_t j = 0; j < p; ++j)
					in[pos[j]] = (r >> j) & 1;
				bool differs = simulate(l.netlist, in, k) != reference_outputs(n, in);
				bool expected = bits_of(r, p) == l.record.protected_pattern || r == kv;
				CHECK(differs == expected);
			}
		}
	}
}

TEST_CASE("sfll_point: majority with pattern 101 under key 000")
{
	SfllOptions opt;
	opt.pattern = {true, false, true};
	auto l = lock_sfll_point(majority_circuit(), 3, 1, opt);
	std::set<std::uint64_t> corrupted;
	for (std::uint64_t r = 0; r < 8; ++r)
		if (simulate(l.netlist, bits_of(r, 3), KeyVector::from_string("000")) !=
		    reference_outputs(majority_circuit(), bits_of(r, 3)))
			corrupted.insert(r);
	// Row index has input a in bit 0, so pattern 101 is row 5; key 000 matches row 0.
	CHECK(corrupted == std::set<std::uint64_t>{0, 5});
	CHECK(agrees_under_key(majority_circuit(), l.netlist, KeyVector::from_string("101")));
}

TEST_CASE("point-function schemes: some wrong key corrupts some input (SAT)")
{
	Netlist n = circuit(10);
	SUBCASE("sfll")
	{
		auto l = lock_sfll_point(n, 6, 3);
		Miter m = build_miter(n, l.netlist, MiterSharing::InputsOnly);
		std::vector<Lit> differs;
		for (std::size_t i = 0; i < m.keys_b.size(); ++i)
			differs.push_back(m.keys_b[i] ^ l.record.true_key.bits[i]);
		m.formula.add_clause(differs);
		CHECK(solve(m.formula).sat());
	}
	SUBCASE("antisat outside the equal-halves class")
	{
		auto l = lock_antisat(n, 6, 3);
		Miter m = build_miter(n, l.netlist, MiterSharing::InputsOnly);
		std::vector<Lit> any;
		for (std::size_t j = 0; j < 3; ++j) {
			Lit a = m.keys_b[j], b = m.keys_b[j + 3];
			Lit d = Lit::make(m.formula.new_var());
			m.formula.add_clause({~d, a, b});
			m.formula.add_clause({~d, ~a, ~b});
			any.push_back(d);
		}
		m.formula.add_clause(any);
		CHECK(solve(m.formula).sat());
	}
}

TEST_CASE("compound: disjoint key ranges and the p_rll=0 case")
{
	Netlist n = circuit(12);
	auto only = lock_sfll_point(n, 5, 7);
	auto comp0 = lock_compound(n, 0, 5, 7);
	CHECK(structurally_equal(only.netlist, comp0.netlist));

	auto c = lock_compound(n, 8, 5, 7);
	CHECK(c.record.true_key.size() == 13);
	REQUIRE(c.record.key_ranges.size() == 2);
	CHECK(c.record.key_ranges[0] == KeyRange{LockScheme::SfllPoint, 0, 5});
	CHECK(c.record.key_ranges[1] == KeyRange{LockScheme::Rll, 5, 13});
	std::set<std::string> keys;
	for (NetId k : c.netlist.key_inputs())
		keys.insert(c.netlist.net_name(k));
	CHECK(keys.size() == 13);
	for (const auto &s : c.record.insertion_sites)
		CHECK(n.find_net(s).has_value());
}

TEST_CASE("compound: 40/40 split on a mid-size circuit")
{
	Netlist n = circuit(13, 48, 600);
	auto c = lock_compound(n, 40, 40, 1);
	CHECK(c.netlist.key_count() == 80);
	CHECK(agrees_under_key(n, c.netlist, c.record.true_key));
}

TEST_CASE("errors")
{
	Netlist n = circuit(14, 6, 30);
	CHECK_THROWS_AS(lock_antisat(n, 3, 1), LockError);
	CHECK_THROWS_AS(lock_caslock(n, 14, 1), LockError);
	CHECK_THROWS_AS(lock_sfll_point(n, 7, 1), LockError);
	CHECK_THROWS_AS(lock_rll(n, 1000, 1), LockError);
	NetlistBuilder b;
	b.add_input("a").add_input("b").add_key_input("keyinput0").add_output("f");
	b.add_gate("t", GateKind::And, {"a", "b"});
	b.add_gate("f", GateKind::Xor, {"t", "keyinput0"});
	Netlist keyed = std::move(b).build();
	// New keys continue numbering after existing ones.
	auto l = lock_rll(keyed, 1, 1, RllOptions{false, {"t"}, {}, {}});
	CHECK(l.netlist.key_count() == 2);
	CHECK(l.netlist.net_name(l.netlist.key_inputs()[1]) == "keyinput1");
	NetlistBuilder c;
	c.add_input("a").add_input("keyinput0").add_output("f");
	c.add_gate("t", GateKind::And, {"a", "keyinput0"});
	c.add_gate("f", GateKind::Not, {"t"});
	CHECK_THROWS_AS(lock_rll(std::move(c).build(), 1, 1), LockError);
}

TEST_CASE("lock record JSON round trip")
{
	Netlist n = circuit(15);
	for (auto scheme : {LockScheme::Rll, LockScheme::CasLock, LockScheme::Compound}) {
		auto l = lock(n, scheme, 6, 4, 3);
		auto j = to_json(l.record);
		CHECK(lock_record_from_json(nlohmann::json::parse(j.dump())) == l.record);
	}
	CHECK_THROWS_AS(lock_record_from_json(nlohmann::json::parse(R"({"scheme": "nope"})")), LockError);
	CHECK_THROWS_AS(lock_scheme_from_string("xyz"), LockError);
}

TEST_CASE("generator: flipping any internal net changes some output")
{
	// Checked with a SAT miter, independent of the simulation the generator uses.
	for (std::uint64_t seed = 1; seed <= 3; ++seed) {
		Netlist n = circuit(seed, 12, 120);
		std::set<NetId> outputs(n.primary_outputs().begin(), n.primary_outputs().end());
		std::size_t checked = 0;
		for (const Gate &g : n.gates()) {
			if (outputs.count(g.output))
				continue;
			RllOptions o;
			o.sites = {n.net_name(g.output)};
			o.key = {false};
			Miter m = build_miter(n, lock_rll(n, 1, 1, o).netlist, MiterSharing::InputsOnly);
			m.formula.add_clause({m.keys_b[0]});
			CHECK(solve(m.formula).sat());
			++checked;
		}
		CHECK(checked > 100);
	}
}
