#include "doctest.h"

#include "locklab/analysis.hpp"
#include "locklab/cnf.hpp"
#include "locklab/generator.hpp"
#include "locklab/locking.hpp"
#include "locklab/og_attack.hpp"
#include "locklab/resynth.hpp"
#include "test_support.hpp"

#include <random>
#include <set>
#include <thread>

using namespace locklab;
using locklab::testing::bits_of;
using locklab::testing::reference_outputs;

namespace {

Netlist circuit(std::uint64_t seed, std::size_t inputs = 8, std::size_t gates = 60, std::size_t outputs = 3)
{
	RandomCircuitSpec s;
	s.inputs = inputs;
	s.outputs = outputs;
	s.gates = gates;
	s.seed = seed;
	return random_circuit(s);
}

std::vector<bool> with_bit(std::vector<bool> v, std::size_t i, bool b)
{
	v[i] = b;
	return v;
}

/// Keys consistent with the oracle on every query, by exhaustive simulation.
std::set<std::vector<bool>> brute_force_keys(const Netlist &locked, const Netlist &orig, const std::vector<Query> &qs)
{
	std::set<std::vector<bool>> out;
	const std::size_t p = locked.key_count();
	for (std::uint64_t k = 0; k < (1ULL << p); ++k) {
		std::vector<bool> key = bits_of(k, p);
		bool ok = true;
		for (const Query &q : qs)
			ok = ok && reference_outputs(locked, q, key) == reference_outputs(orig, q);
		if (ok)
			out.insert(key);
	}
	return out;
}

/// Independent equivalence check of locked under `key` against orig.
bool unlocks(const Netlist &orig, const Netlist &locked, const KeyVector &key)
{
	const std::size_t w = orig.primary_inputs().size();
	std::mt19937_64 rng(3);
	const bool exhaustive = w <= 14;
	const std::uint64_t rows = exhaustive ? (1ULL << w) : 20000;
	for (std::uint64_t r = 0; r < rows; ++r) {
		std::vector<bool> in = exhaustive ? bits_of(r, w) : bits_of(rng(), w);
		if (reference_outputs(locked, in, key.bits) != reference_outputs(orig, in))
			return false;
	}
	Miter m = build_miter(orig, locked, MiterSharing::InputsOnly);
	for (std::size_t i = 0; i < key.size(); ++i)
		m.formula.add_clause({m.keys_b[i] ^ !key.bits[i]});
	return solve(m.formula).unsat();
}

ProvenBit proven(bool v) { return {v, BitProof::Proven}; }

} // namespace

TEST_CASE("oracle memoizes and counts distinct queries")
{
	Oracle o = Oracle::from_original(majority_circuit());
	CHECK(o.input_width() == 3);
	CHECK(o.output_width() == 1);
	CHECK(o.query({false, true, true}) == std::vector<bool>{true});
	CHECK(o.query({false, true, true}) == std::vector<bool>{true});
	CHECK(o.query_count() == 1);
	CHECK(o.query({false, false, true}) == std::vector<bool>{false});
	CHECK(o.query_count() == 2);
	CHECK_THROWS(o.query({true}));
	CHECK_THROWS(Oracle::from_original(locked_majority_circuit()));

	Oracle locked = Oracle::from_locked(locked_majority_circuit(), KeyVector::from_string("01"));
	for (std::uint64_t r = 0; r < 8; ++r)
		CHECK(locked.query(bits_of(r, 3)) == reference_outputs(majority_circuit(), bits_of(r, 3)));
	CHECK(locked.query_count() == 8);

	Oracle shared = Oracle::from_original(circuit(1, 10));
	std::vector<std::thread> pool;
	for (int t = 0; t < 4; ++t)
		pool.emplace_back([&] {
			for (std::uint64_t r = 0; r < 256; ++r)
				shared.query(bits_of(r, 10));
		});
	for (auto &t : pool)
		t.join();
	CHECK(shared.query_count() == 256);
}

TEST_CASE("majority query 000 yields the single key 01")
{
	Netlist locked = locked_majority_circuit();
	Oracle oracle = Oracle::from_original(majority_circuit());
	Query q{false, false, false};
	std::vector<bool> f = oracle.query(q);
	CHECK(f == std::vector<bool>{false});

	// Under 000 the output still depends on both key bits.
	std::set<bool> seen;
	for (std::uint64_t k = 0; k < 4; ++k)
		seen.insert(reference_outputs(locked, q, bits_of(k, 2))[0]);
	CHECK(seen.size() == 2);

	KeyConstraints c(locked);
	c.derive_constraints(q, f);
	CHECK(c.constraint_count() == 1);
	std::vector<KeyVector> keys = c.enumerate_keys(4);
	REQUIRE(keys.size() == 1);
	CHECK(keys[0] == KeyVector::from_string("01"));
	auto cand = c.solve_candidate();
	REQUIRE(cand);
	CHECK(*cand == KeyVector::from_string("01"));
	CHECK(c.prove_bit(0, false) == BitProof::Proven);
	CHECK(c.prove_bit(1, true) == BitProof::Proven);

	ProvenSolution s = query_attack(locked, oracle);
	CHECK(s.proven_count() == 2);
	REQUIRE(s.candidate);
	CHECK(*s.candidate == KeyVector::from_string("01"));
	CHECK(s.bits[0].candidate == false);
	CHECK(s.bits[1].candidate == true);
}

TEST_CASE("constraint errors")
{
	KeyConstraints c(locked_majority_circuit());
	CHECK_THROWS_AS(c.derive_constraints({false, false}, {false}), AttackError);
	CHECK_THROWS_AS(c.derive_constraints({false, false, false}, {false, true}), AttackError);
	// a = c = 1 forces f = 1 whatever the key.
	CHECK_THROWS_AS(c.derive_constraints({true, false, true}, {false}), AttackError);
}

TEST_CASE("a key-free output cone adds no key constraint")
{
	// o1 ignores the key; o2 = a ^ k.
	NetlistBuilder b;
	b.add_input("a").add_input("b").add_key_input("keyinput0");
	b.add_output("o1").add_output("o2");
	b.add_gate("o1", GateKind::And, {"a", "b"});
	b.add_gate("o2", GateKind::Xor, {"a", "keyinput0"});
	Netlist n = std::move(b).build();
	NetlistBuilder cb;
	cb.add_input("a").add_input("b").add_key_input("keyinput0");
	cb.add_output("o1");
	cb.add_gate("o1", GateKind::And, {"a", "b"});
	KeyConstraints c(std::move(cb).build());
	c.derive_constraints({true, false}, {false});
	CHECK(c.enumerate_keys(4).size() == 2);

	KeyConstraints full(n);
	full.derive_constraints({true, true}, {true, true});
	auto keys = full.enumerate_keys(4);
	REQUIRE(keys.size() == 1);
	CHECK(keys[0] == KeyVector::from_string("0"));
}

TEST_CASE("sensitization queries flip an output for some completion")
{
	for (std::uint64_t seed = 1; seed <= 6; ++seed) {
		const std::size_t p = 6;
		Netlist locked = lock(circuit(seed), seed % 2 ? LockScheme::Rll : LockScheme::AntiSat, p, 0, seed).netlist;
		SensitizationResult r = gen_sensitization_queries(locked);
		CHECK(r.budget_exhausted.empty());
		CHECK(r.sensitized.size() + r.skipped.size() == p);
		std::set<Query> distinct(r.queries.begin(), r.queries.end());
		CHECK(distinct.size() == r.queries.size());
		for (auto [bit, qi] : r.sensitized) {
			REQUIRE(qi < r.queries.size());
			const Query &x = r.queries[qi];
			bool flips = false;
			for (std::uint64_t k = 0; k < (1u << p) && !flips; ++k) {
				std::vector<bool> key = bits_of(k, p);
				flips = reference_outputs(locked, x, with_bit(key, bit, false)) !=
					reference_outputs(locked, x, with_bit(key, bit, true));
			}
			CHECK(flips);
		}
		// A skipped bit is unobservable for every input.
		for (std::size_t bit : r.skipped)
			for (std::uint64_t row = 0; row < (1u << (8 + p)); ++row) {
				std::vector<bool> all = bits_of(row, 8 + p);
				std::vector<bool> x(all.begin(), all.begin() + 8), key(all.begin() + 8, all.end());
				REQUIRE(reference_outputs(locked, x, with_bit(key, bit, false)) ==
					reference_outputs(locked, x, with_bit(key, bit, true)));
			}
	}
}

TEST_CASE("a key gate on a dead net is skipped")
{
	NetlistBuilder b;
	b.add_input("a").add_input("b").add_key_input("keyinput0").add_key_input("keyinput1");
	b.add_output("o");
	b.add_gate("t", GateKind::And, {"a", "b"});
	b.add_gate("o", GateKind::Xor, {"t", "keyinput0"});
	b.add_gate("dead", GateKind::Xor, {"a", "keyinput1"});
	Netlist n = std::move(b).build();
	SensitizationResult r = gen_sensitization_queries(n);
	REQUIRE(r.sensitized.size() == 1);
	CHECK(r.sensitized[0].first == 0);
	CHECK(r.skipped == std::vector<std::size_t>{1});
	CHECK(r.queries.size() == 1);
}

TEST_CASE("random queries")
{
	Netlist locked = lock(circuit(2, 12), LockScheme::Rll, 8, 0, 2).netlist;
	CHECK(gen_random_queries(locked, 0, 5).empty());
	auto a = gen_random_queries(locked, 40, 5);
	auto b = gen_random_queries(locked, 40, 5);
	CHECK(a == b);
	CHECK(a.size() == 40);
	CHECK(std::set<Query>(a.begin(), a.end()).size() == 40);
	for (const Query &q : a)
		CHECK(q.size() == 12);
	CHECK(gen_random_queries(locked, 40, 6) != a);
	std::vector<Query> excl(a.begin(), a.begin() + 20);
	for (const Query &q : gen_random_queries(locked, 40, 5, excl))
		CHECK(std::find(excl.begin(), excl.end(), q) == excl.end());
	// Only eight inputs exist for a three-input circuit.
	auto small = gen_random_queries(locked_majority_circuit(), 100, 1);
	CHECK(small.size() == 8);
	auto fewer = gen_random_queries(locked_majority_circuit(), 100, 1, {{false, false, false}});
	CHECK(fewer.size() == 7);
}

TEST_CASE("p = 32 plans 2p = 64 queries")
{
	Netlist locked = lock(circuit(4, 24, 200, 6), LockScheme::Rll, 32, 0, 4).netlist;
	QueryPlan plan = plan_queries(locked);
	CHECK(plan.queries.size() == 64);
	CHECK(plan.queries.size() == plan.sensitization.queries.size() + plan.random_count);
	CHECK(std::set<Query>(plan.queries.begin(), plan.queries.end()).size() == 64);
	QueryAttackOptions o;
	o.query_count = 10;
	CHECK(plan_queries(locked, o).queries.size() == 10);
	CHECK(plan_queries(locked).queries == plan.queries);

	Oracle oracle = Oracle::from_original(circuit(4, 24, 200, 6));
	ProvenSolution s = query_attack(locked, oracle);
	CHECK(s.queries == 64);
	CHECK(oracle.query_count() == 64);
}

TEST_CASE("key solution set matches brute force and always holds the true key")
{
	for (std::uint64_t seed = 1; seed <= 5; ++seed) {
		Netlist orig = circuit(seed, 8, 50);
		LockResult lr = lock(orig, LockScheme::Rll, 10, 0, seed);
		std::vector<Query> qs = gen_random_queries(lr.netlist, 6, seed);
		Oracle oracle = Oracle::from_original(orig);
		KeyConstraints c(lr.netlist);
		std::vector<Query> so_far;
		for (const Query &q : qs) {
			c.derive_constraints(q, oracle.query(q));
			so_far.push_back(q);
			std::vector<KeyVector> keys = c.enumerate_keys(1u << 10);
			std::set<std::vector<bool>> got;
			for (const KeyVector &k : keys)
				got.insert(k.bits);
			CHECK(got.size() == keys.size());
			CHECK(got == brute_force_keys(lr.netlist, orig, so_far));
			CHECK(got.count(lr.record.true_key.bits) == 1);
		}
	}
}

TEST_CASE("candidates replay the oracle and zero queries prove nothing")
{
	for (std::uint64_t seed = 1; seed <= 8; ++seed) {
		Netlist orig = circuit(seed, 10, 80);
		LockScheme scheme = seed % 3 == 0 ? LockScheme::SfllPoint : seed % 3 == 1 ? LockScheme::Rll : LockScheme::CasLock;
		LockResult lr = lock(orig, scheme, 8, 0, seed);
		Oracle oracle = Oracle::from_original(orig);
		QueryAttackOptions o;
		o.seed = seed;
		ProvenSolution s = query_attack(lr.netlist, oracle, o);
		REQUIRE(s.candidate);
		for (const Query &q : plan_queries(lr.netlist, o).queries)
			CHECK(reference_outputs(lr.netlist, q, s.candidate->bits) == reference_outputs(orig, q));

		ProvenSolution none = prove_with_queries(lr.netlist, {}, {});
		CHECK(none.proven_count() == 0);
		CHECK(none.candidate);
		for (const ProvenBit &b : none.bits)
			CHECK(b.status == BitProof::Unproven);
	}
}

TEST_CASE("proven bits are always correct over randomized trials")
{
	const LockScheme schemes[] = {LockScheme::Rll, LockScheme::AntiSat, LockScheme::CasLock, LockScheme::SfllPoint,
				      LockScheme::Compound};
	std::size_t trials = 0, proven = 0;
	for (std::uint64_t seed = 1; seed <= 20; ++seed)
		for (LockScheme scheme : schemes) {
			Netlist orig = circuit(seed * 7, 10, 70);
			LockResult lr = scheme == LockScheme::Compound ? lock(orig, scheme, 4, 4, seed) : lock(orig, scheme, 8, 0, seed);
			Oracle oracle = Oracle::from_locked(lr.netlist, lr.record.true_key);
			QueryAttackOptions o;
			o.seed = seed;
			ProvenSolution s = query_attack(lr.netlist, oracle, o);
			for (std::size_t i = 0; i < s.bits.size(); ++i)
				if (s.bits[i].status == BitProof::Proven) {
					REQUIRE(s.bits[i].candidate == lr.record.true_key.bits[i]);
					++proven;
				}
			++trials;
		}
	CHECK(trials >= 100);
	CHECK(proven > 0);
	MESSAGE("proven bits over " << trials << " trials: " << proven);
}

TEST_CASE("RLL p=16 on a 200-gate circuit")
{
	Netlist orig = circuit(11, 20, 200, 5);
	LockResult lr = lock(orig, LockScheme::Rll, 16, 0, 11);
	Oracle oracle = Oracle::from_original(orig);
	ProvenSolution s = query_attack(lr.netlist, oracle);
	for (std::size_t i = 0; i < 16; ++i)
		if (s.bits[i].status == BitProof::Proven)
			CHECK(s.bits[i].candidate == lr.record.true_key.bits[i]);
	MESSAGE("RLL p=16 proven: " << s.proven_count() << "/16");
	CHECK(oracle.query_count() == 32);
}

TEST_CASE("SFLL restore bits stay unproven when queries miss the pattern")
{
	Netlist orig = circuit(5, 10, 80);
	LockResult lr = lock(orig, LockScheme::SfllPoint, 6, 0, 5);
	const LockRecord &rec = lr.record;
	REQUIRE(rec.protected_pattern.size() == 6);
	std::vector<std::size_t> compared;
	for (const std::string &name : rec.compared_inputs)
		for (std::size_t i = 0; i < orig.primary_inputs().size(); ++i)
			if (orig.net_name(orig.primary_inputs()[i]) == name)
				compared.push_back(i);
	REQUIRE(compared.size() == 6);
	std::vector<Query> qs;
	for (const Query &q : gen_random_queries(lr.netlist, 12, 9)) {
		bool hits = true;
		for (std::size_t j = 0; j < 6; ++j)
			hits = hits && q[compared[j]] == rec.protected_pattern[j];
		if (!hits)
			qs.push_back(q);
	}
	REQUIRE(qs.size() >= 8);
	Oracle oracle = Oracle::from_original(orig);
	QueryAttackOptions o;
	o.queries = qs;
	ProvenSolution s = query_attack(lr.netlist, oracle, o);
	for (const KeyRange &kr : rec.key_ranges)
		if (kr.scheme == LockScheme::SfllPoint)
			for (std::size_t i = kr.begin; i < kr.end; ++i)
				CHECK(s.bits[i].status != BitProof::Proven);
	CHECK(oracle.query_count() == qs.size());
}

TEST_CASE("combine_proofs precedence over all single-bit matrices")
{
	// Per-variant states: 0 proven Zero, 1 proven One, 2 unproven, 3 budget.
	for (int variants = 1; variants <= 3; ++variants) {
		int combos = 1;
		for (int v = 0; v < variants; ++v)
			combos *= 4;
		for (int c = 0; c < combos; ++c)
			for (Guess olg : {Guess::Zero, Guess::One, Guess::Unknown}) {
				std::vector<ProvenSolution> per(variants);
				bool any0 = false, any1 = false, budget = false;
				std::size_t provers = 0;
				for (int v = 0, code = c; v < variants; ++v, code /= 4) {
					int st = code % 4;
					per[v].bits.push_back(st == 0 ? proven(false) : st == 1 ? proven(true)
							: ProvenBit{false, st == 2 ? BitProof::Unproven : BitProof::Budget});
					any0 = any0 || st == 0;
					any1 = any1 || st == 1;
					budget = budget || st == 3;
					provers += st < 2;
				}
				EnsembleSolution ol;
				ol.solutions = 1;
				ol.bits.resize(1);
				ol.bits[0].merged.value = olg;
				if (any0 && any1) {
					CHECK_THROWS_AS(combine_proofs(per, &ol), AttackError);
					continue;
				}
				FinalBit f = combine_proofs(per, &ol).bits[0];
				CHECK(f.budget_flag == budget);
				CHECK(f.proving_variants == provers);
				if (any0 || any1) {
					CHECK(f.provenance == Provenance::Proven);
					CHECK(f.value == (any1 ? Guess::One : Guess::Zero));
				} else if (olg != Guess::Unknown) {
					CHECK(f.provenance == Provenance::OlGuess);
					CHECK(f.value == olg);
				} else {
					CHECK(f.provenance == Provenance::Unknown);
					CHECK(f.value == Guess::Unknown);
				}
				FinalBit bare = combine_proofs(per, nullptr).bits[0];
				CHECK(bare.provenance == (provers ? Provenance::Proven : Provenance::Unknown));
			}
	}
	CHECK_THROWS_AS(combine_proofs({}, nullptr), AttackError);
}

TEST_CASE("ensemble query attack on resynthesized variants")
{
	Netlist orig = circuit(21, 12, 120, 4);
	LockResult lr = lock(orig, LockScheme::Compound, 6, 6, 21);
	RecipeConfig cfg;
	cfg.syn_gen = {Effort::Low, Effort::High};
	cfg.syn_map = {Effort::Low, Effort::High};
	cfg.syn_opt = {OptEffort::Medium};
	cfg.delay_point = {0};
	cfg.max_transition = {MaxTransition::P10};
	cfg.key_constraint = {false};
	VariantOptions vo;
	vo.certify = Certify::Sim;
	VariantSet vs = generate_variants(lr.netlist, enumerate_recipes(cfg), vo);
	std::vector<Netlist> variants;
	for (const Variant &v : vs.variants)
		variants.push_back(v.netlist);
	REQUIRE(!variants.empty());

	EnsembleSolution ol;
	ol.solutions = 1;
	ol.bits.resize(12);
	for (auto &b : ol.bits)
		b.merged.value = Guess::One;
	Oracle oracle = Oracle::from_original(orig);
	EnsembleOgOptions eo;
	eo.jobs = 2;
	KeySolution s = ensemble_og_attack(lr.netlist, variants, oracle, &ol, eo);
	CHECK(s.per_variant.size() == variants.size());
	CHECK(s.queries.size() == 24);
	CHECK(s.oracle_queries == 24);
	std::size_t rll_proven = 0, sfll_proven = 0;
	for (std::size_t i = 0; i < 12; ++i) {
		const FinalBit &f = s.bits[i];
		if (f.provenance == Provenance::Proven) {
			CHECK(f.value == (lr.record.true_key.bits[i] ? Guess::One : Guess::Zero));
			(i < 6 ? rll_proven : sfll_proven)++;
		} else {
			CHECK(f.provenance == Provenance::OlGuess);
			CHECK(f.value == Guess::One);
		}
	}
	MESSAGE("compound proven: rll " << rll_proven << "/6, sfll " << sfll_proven << "/6");
	nlohmann::json j = to_json(s);
	CHECK(j["bits"].size() == 12);
	CHECK(j["bits"][0].contains("provenance"));
	CHECK(j["bits"][0].contains("budget_flag"));
	CHECK(j["query_log"].size() == 24);

	std::vector<Netlist> bad{orig};
	CHECK_THROWS_AS(ensemble_og_attack(lr.netlist, bad, oracle), AttackError);
}

TEST_CASE("DIP attack recovers a working RLL key")
{
	Netlist orig = circuit(31, 20, 200, 5);
	LockResult lr = lock(orig, LockScheme::Rll, 16, 0, 31);
	Oracle oracle = Oracle::from_original(orig);
	DipResult r = dip_attack(lr.netlist, oracle);
	CHECK(r.success);
	CHECK_FALSE(r.timeout);
	CHECK(r.verified);
	CHECK(r.key.size() == 16);
	CHECK(oracle.query_count() == r.iterations);
	CHECK(unlocks(orig, lr.netlist, r.key));
	CHECK(to_json(r)["iterations"] == r.iterations);
}

TEST_CASE("DIP attack edge cases")
{
	Netlist orig = circuit(32, 8, 40);
	Oracle oracle = Oracle::from_original(orig);
	DipResult r = dip_attack(orig, oracle);
	CHECK(r.success);
	CHECK(r.iterations == 0);
	CHECK(r.key.size() == 0);

	LockResult lr = lock(circuit(33, 12, 80), LockScheme::AntiSat, 16, 0, 33);
	Oracle o2 = Oracle::from_original(circuit(33, 12, 80));
	DipOptions tight;
	tight.max_iterations = 3;
	DipResult t = dip_attack(lr.netlist, o2, tight);
	CHECK_FALSE(t.success);
	CHECK(t.timeout);
	CHECK(t.iterations == 3);

	Oracle wrong = Oracle::from_original(majority_circuit());
	CHECK_THROWS_AS(dip_attack(lr.netlist, wrong), AttackError);
}

TEST_CASE("proven solution JSON")
{
	Oracle oracle = Oracle::from_original(majority_circuit());
	ProvenSolution s = query_attack(locked_majority_circuit(), oracle);
	nlohmann::json j = to_json(s);
	CHECK(j["bits"].size() == 2);
	CHECK(to_string(BitProof::Budget) != to_string(BitProof::Proven));
	CHECK(to_string(Provenance::OlGuess) != to_string(Provenance::Proven));
}
