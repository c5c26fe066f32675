#include "doctest.h"

#include "locklab/cnf.hpp"
#include "locklab/generator.hpp"
#include "locklab/sat_solver.hpp"
#include "locklab/simulate.hpp"
#include "test_support.hpp"

#include <random>
#include <sstream>

using namespace locklab;
using locklab::testing::bits_of;
using locklab::testing::brute_force_sat;

namespace {

Lit pos(Var v) { return Lit::make(v); }
Lit neg(Var v) { return Lit::make(v, true); }

std::vector<std::vector<int>> random_3cnf(std::mt19937_64 &rng, int vars, int clauses)
{
	std::vector<std::vector<int>> out;
	for (int c = 0; c < clauses; ++c) {
		std::vector<int> cl;
		for (int j = 0; j < 3; ++j) {
			int v = static_cast<int>(rng() % vars) + 1;
			cl.push_back(rng() % 2 ? v : -v);
		}
		out.push_back(cl);
	}
	return out;
}

/// Pigeonhole: `holes + 1` pigeons into `holes` holes.
void add_pigeonhole(Solver &s, int holes)
{
	int pigeons = holes + 1;
	std::vector<std::vector<Var>> x(pigeons, std::vector<Var>(holes));
	for (auto &row : x)
		for (auto &v : row)
			v = s.new_var();
	for (int p = 0; p < pigeons; ++p) {
		std::vector<Lit> c;
		for (int h = 0; h < holes; ++h)
			c.push_back(pos(x[p][h]));
		s.add_clause(c);
	}
	for (int h = 0; h < holes; ++h)
		for (int p = 0; p < pigeons; ++p)
			for (int q = p + 1; q < pigeons; ++q)
				s.add_clause({neg(x[p][h]), neg(x[q][h])});
}

RandomCircuitSpec spec_for(std::uint64_t seed, std::size_t inputs, std::size_t gates)
{
	RandomCircuitSpec s;
	s.inputs = inputs;
	s.outputs = 2;
	s.gates = gates;
	s.seed = seed;
	s.xor_fraction = 0.15;
	s.mux_fraction = 0.1;
	return s;
}

} // namespace

TEST_CASE("solver: trivial instances")
{
	Solver s;
	Var x = s.new_var();
	CHECK(s.solve() == SatStatus::Satisfiable);
	s.add_clause({pos(x)});
	CHECK(s.solve() == SatStatus::Satisfiable);
	CHECK(s.model_value(x));
	s.add_clause({neg(x)});
	CHECK(s.solve() == SatStatus::Unsatisfiable);
	CHECK_FALSE(s.okay());
}

TEST_CASE("solver: tautologies and duplicate literals are harmless")
{
	Solver s;
	Var a = s.new_var(), b = s.new_var();
	s.add_clause({pos(a), neg(a)});
	s.add_clause({pos(b), pos(b), pos(b)});
	REQUIRE(s.solve() == SatStatus::Satisfiable);
	CHECK(s.model_value(b));
}

TEST_CASE("property: random 3-CNF agrees with brute force")
{
	std::mt19937_64 rng(99);
	int sat_count = 0, unsat_count = 0;
	for (int trial = 0; trial < 400; ++trial) {
		int vars = 4 + static_cast<int>(rng() % 11);
		int clauses = static_cast<int>(vars * (3.5 + (rng() % 20) / 10.0));
		auto cnf = random_3cnf(rng, vars, clauses);
		Solver s;
		s.reserve_vars(vars);
		for (const auto &c : cnf) {
			std::vector<Lit> lits;
			for (int l : c)
				lits.push_back(Lit::make(std::abs(l) - 1, l < 0));
			s.add_clause(lits);
		}
		SatStatus st = s.solve();
		bool expect = brute_force_sat(vars, cnf);
		REQUIRE((st == SatStatus::Satisfiable) == expect);
		if (expect) {
			++sat_count;
			for (const auto &c : cnf) {
				bool any = false;
				for (int l : c)
					any = any || s.model_value(Lit::make(std::abs(l) - 1, l < 0));
				REQUIRE(any);
			}
		} else {
			++unsat_count;
		}
	}
	CHECK(sat_count > 50);
	CHECK(unsat_count > 50);
}

TEST_CASE("solver: assumptions and incremental clauses")
{
	Solver s;
	Var a = s.new_var(), b = s.new_var(), c = s.new_var();
	s.add_clause({pos(a), pos(b)});
	s.add_clause({neg(a), pos(c)});
	CHECK(s.solve({neg(b)}) == SatStatus::Satisfiable);
	CHECK(s.model_value(a));
	CHECK(s.model_value(c));
	CHECK(s.solve({neg(b), neg(c)}) == SatStatus::Unsatisfiable);
	// The assumption failure must not poison later calls.
	CHECK(s.solve() == SatStatus::Satisfiable);
	CHECK(s.okay());
	s.add_clause({neg(c)});
	CHECK(s.solve() == SatStatus::Satisfiable);
	CHECK_FALSE(s.model_value(a));
	CHECK(s.model_value(b));
	s.add_clause({neg(b)});
	CHECK(s.solve() == SatStatus::Unsatisfiable);
}

TEST_CASE("property: incremental solving matches fresh solving")
{
	std::mt19937_64 rng(5);
	for (int trial = 0; trial < 50; ++trial) {
		const int vars = 10;
		Solver inc;
		inc.reserve_vars(vars);
		std::vector<std::vector<int>> so_far;
		for (int step = 0; step < 12; ++step) {
			auto extra = random_3cnf(rng, vars, 4);
			for (const auto &c : extra) {
				so_far.push_back(c);
				std::vector<Lit> lits;
				for (int l : c)
					lits.push_back(Lit::make(std::abs(l) - 1, l < 0));
				inc.add_clause(lits);
			}
			Lit assume = Lit::make(static_cast<Var>(rng() % vars), rng() % 2);
			auto with_assume = so_far;
			with_assume.push_back({assume.dimacs()});
			REQUIRE((inc.solve({assume}) == SatStatus::Satisfiable) == brute_force_sat(vars, with_assume));
			REQUIRE((inc.solve() == SatStatus::Satisfiable) == brute_force_sat(vars, so_far));
		}
	}
}

TEST_CASE("solver: pigeonhole is unsatisfiable and respects a conflict budget")
{
	{
		Solver s;
		add_pigeonhole(s, 6);
		CHECK(s.solve() == SatStatus::Unsatisfiable);
	}
	{
		Solver s;
		add_pigeonhole(s, 10);
		s.set_conflict_budget(50);
		CHECK(s.solve() == SatStatus::Unknown);
		CHECK(s.conflicts() <= 51);
	}
}

TEST_CASE("cnf: empty clause and unknown variables are rejected")
{
	CnfFormula f;
	CHECK_THROWS_AS(f.add_clause(std::span<const Lit>{}), CnfError);
	CHECK_THROWS_AS(f.add_clause({pos(0)}), CnfError);
	Var v = f.new_var();
	CHECK_NOTHROW(f.add_clause({pos(v)}));
}

TEST_CASE("cnf: constant literals simplify clauses")
{
	CnfFormula f;
	Var v = f.new_var();
	Lit t = f.constant(true);
	std::size_t before = f.clauses().size();
	f.add_clause({t, pos(v)});
	CHECK(f.clauses().size() == before);
	f.add_clause({~t, pos(v)});
	CHECK(f.clauses().back() == std::vector<Lit>{pos(v)});
	f.add_clause({~t});
	CHECK(solve(f).unsat());
}

TEST_CASE("tseitin: per-gate clause counts")
{
	CHECK(tseitin_clause_count(GateKind::And, 2) == 3);
	CHECK(tseitin_clause_count(GateKind::Or, 3) == 4);
	CHECK(tseitin_clause_count(GateKind::Nand, 4) == 5);
	CHECK(tseitin_clause_count(GateKind::Nor, 2) == 3);
	CHECK(tseitin_clause_count(GateKind::Not, 1) == 2);
	CHECK(tseitin_clause_count(GateKind::Buf, 1) == 2);
	CHECK(tseitin_clause_count(GateKind::Xor, 2) == 4);
	CHECK(tseitin_clause_count(GateKind::Xnor, 3) == 8);
	CHECK(tseitin_clause_count(GateKind::Mux, 3) == 4);
	CHECK(tseitin_clause_count(GateKind::Const0, 0) == 1);
}

TEST_CASE("tseitin: majority encoding size")
{
	CnfFormula f = tseitin_encode(majority_circuit());
	CHECK(f.num_vars() == 7);
	CHECK(f.clauses().size() == 3 * 3 + 4);
	CHECK(f.lookup("n", "f").has_value());
	CHECK(f.lookup("n", "a")->var() == 0);
	CHECK_FALSE(f.lookup("m", "f").has_value());
}

TEST_CASE("property: clause total equals the per-gate sum")
{
	for (std::uint64_t seed = 1; seed <= 20; ++seed) {
		Netlist n = random_circuit(spec_for(seed, 8, 60));
		std::size_t expect = 0;
		for (const Gate &g : n.gates())
			expect += tseitin_clause_count(g.kind, g.fanins.size());
		CnfFormula f = tseitin_encode(n);
		CHECK(f.clauses().size() == expect);
		CHECK(f.num_vars() == static_cast<int>(n.net_count()));
	}
}

TEST_CASE("property: encodings are functional for both modes")
{
	for (std::uint64_t seed = 1; seed <= 15; ++seed) {
		Netlist n = random_circuit(spec_for(seed, 6, 40));
		for (bool simplify : {false, true}) {
			CnfFormula f;
			std::vector<Lit> ins;
			for (std::size_t i = 0; i < 6; ++i)
				ins.push_back(pos(f.new_var()));
			EncodeOptions opt;
			opt.simplify = simplify;
			auto lits = encode_into(f, n, ins, {}, opt);
			SatContext ctx;
			ctx.formula() = f;
			for (std::uint64_t r = 0; r < 64; ++r) {
				auto in = bits_of(r, 6);
				std::vector<Lit> assume;
				for (std::size_t i = 0; i < 6; ++i)
					assume.push_back(ins[i] ^ !in[i]);
				auto expect = simulate(n, in);
				auto out = ctx.solve(assume);
				REQUIRE(out.sat());
				for (std::size_t o = 0; o < expect.size(); ++o) {
					Lit ol = lits[n.primary_outputs()[o]];
					REQUIRE(out.value(ol) == expect[o]);
					// The opposite output value must be infeasible.
					auto flipped = assume;
					flipped.push_back(ol ^ expect[o]);
					if (!f.is_constant(ol))
						REQUIRE(ctx.solve(flipped).unsat());
				}
			}
		}
	}
}

TEST_CASE("encode: constant-fed cone folds away in simplify mode")
{
	Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nz = CONST0()\nt = AND(z, a)\nf = OR(t, b)\n");
	CnfFormula f;
	std::vector<Lit> ins{pos(f.new_var()), pos(f.new_var())};
	EncodeOptions opt;
	opt.simplify = true;
	auto lits = encode_into(f, n, ins, {}, opt);
	CHECK(lits[*n.find_net("f")] == ins[1]);
	CHECK(f.is_constant(lits[*n.find_net("t")]));
}

TEST_CASE("miter: equivalence outcomes")
{
	Netlist maj = majority_circuit();
	{
		Miter m = build_miter(maj, maj, MiterSharing::InputsOnly);
		CHECK(solve(m.formula).unsat());
	}
	{
		Netlist and3 = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(f)\nf = AND(a, b, c)\n");
		Miter m = build_miter(maj, and3, MiterSharing::InputsOnly);
		auto out = solve(m.formula);
		REQUIRE(out.sat());
		std::vector<bool> in;
		for (Lit l : m.inputs)
			in.push_back(out.value(l));
		CHECK(simulate(maj, in) != simulate(and3, in));
	}
	{
		Netlist locked = locked_majority_circuit();
		Miter m = build_miter(locked, locked, MiterSharing::InputsOnly);
		CHECK(m.keys_a.size() == 2);
		CHECK(m.keys_a != m.keys_b);
		CHECK(solve(m.formula).sat());
		Miter shared = build_miter(locked, locked, MiterSharing::InputsAndKeys);
		CHECK(solve(shared.formula).unsat());
		CHECK_THROWS_AS(build_miter(locked, maj, MiterSharing::InputsAndKeys), CnfError);
	}
	{
		Netlist other = parse_bench("INPUT(a)\nINPUT(b)\nINPUT(d)\nOUTPUT(f)\nf = AND(a, b, d)\n");
		CHECK_THROWS_AS(build_miter(maj, other, MiterSharing::InputsOnly), CnfError);
	}
}

TEST_CASE("check_equivalence: restructured xor and a wrong variant")
{
	Netlist x1 = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nf = XOR(a, b)\n");
	Netlist x2 = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nn = NAND(a, b)\np = NAND(a, n)\nq = NAND(b, n)\n"
				 "f = NAND(p, q)\n");
	Netlist x3 = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(f)\nf = OR(a, b)\n");
	CHECK(check_equivalence(x1, x2).verdict == Equivalence::Equivalent);
	auto r = check_equivalence(x1, x3);
	REQUIRE(r.verdict == Equivalence::Different);
	CHECK(simulate(x1, r.inputs) != simulate(x3, r.inputs));
}

TEST_CASE("property: near-miss variants are caught by the miter proof")
{
	// One-minterm difference: random simulation rarely hits it, the SAT step must.
	std::string wide = "INPUT(a0)\nINPUT(a1)\nINPUT(a2)\nINPUT(a3)\nINPUT(a4)\nINPUT(a5)\nINPUT(a6)\n"
			   "INPUT(a7)\nINPUT(a8)\nINPUT(a9)\nINPUT(a10)\nINPUT(a11)\nINPUT(a12)\nINPUT(a13)\n"
			   "INPUT(a14)\nINPUT(a15)\nINPUT(a16)\nINPUT(a17)\nINPUT(a18)\nINPUT(a19)\nOUTPUT(f)\n";
	Netlist base = parse_bench(wide + "f = BUF(a0)\n");
	Netlist off = parse_bench(wide + "t = AND(a0, a1, a2, a3, a4, a5, a6, a7, a8, a9, a10, a11, a12, a13, a14, a15, "
					 "a16, a17, a18, a19)\nf = XOR(a0, t)\n");
	auto r = check_equivalence(base, off);
	REQUIRE(r.verdict == Equivalence::Different);
	CHECK(std::all_of(r.inputs.begin(), r.inputs.end(), [](bool b) { return b; }));
}

TEST_CASE("dimacs: header and clause lines round-trip through brute force")
{
	CnfFormula f = tseitin_encode(majority_circuit());
	std::string text = f.to_dimacs();
	std::istringstream is(text);
	std::string p, cnf;
	int vars = 0, count = 0;
	is >> p >> cnf >> vars >> count;
	CHECK(p == "p");
	CHECK(cnf == "cnf");
	CHECK(vars == f.num_vars());
	CHECK(count == static_cast<int>(f.clauses().size()));
	std::vector<std::vector<int>> clauses;
	std::vector<int> cur;
	int lit;
	while (is >> lit) {
		if (lit == 0) {
			clauses.push_back(cur);
			cur.clear();
		} else {
			cur.push_back(lit);
		}
	}
	CHECK(static_cast<int>(clauses.size()) == count);
	CHECK(brute_force_sat(vars, clauses));
	// Forcing f=1 with two inputs low is impossible.
	clauses.push_back({-1});
	clauses.push_back({-2});
	clauses.push_back({f.lookup("n", "f")->dimacs()});
	CHECK_FALSE(brute_force_sat(vars, clauses));
}

TEST_CASE("property: swept equivalence agrees with truth tables on near-identical pairs")
{
	// A copy with one gate changed shares most internal nets with the
	// original, which drives the sweep through matches and refutations.
	std::mt19937_64 rng(41);
	int same = 0, different = 0;
	for (std::uint64_t seed = 1; seed <= 60; ++seed) {
		Netlist a = random_circuit(spec_for(seed, 10, 70));
		NetlistBuilder nb;
		for (NetId i : a.primary_inputs())
			nb.add_input(a.net_name(i));
		for (NetId o : a.primary_outputs())
			nb.add_output(a.net_name(o));
		const std::size_t victim = rng() % a.gates().size();
		for (std::size_t gi = 0; gi < a.gates().size(); ++gi) {
			const Gate &g = a.gate(gi);
			std::vector<std::string> fanins;
			for (NetId x : g.fanins)
				fanins.push_back(a.net_name(x));
			GateKind kind = g.kind;
			if (gi == victim && seed % 3 != 0) {
				if (kind == GateKind::And)
					kind = GateKind::Or;
				else if (kind == GateKind::Or)
					kind = GateKind::And;
				else if (kind == GateKind::Nand)
					kind = GateKind::Nor;
				else if (kind == GateKind::Nor)
					kind = GateKind::Nand;
			}
			nb.add_gate(a.net_name(g.output), kind, fanins);
		}
		Netlist b = std::move(nb).build();
		const bool expect = locklab::testing::truth_table(a) == locklab::testing::truth_table(b);
		EquivalenceResult r = check_equivalence(a, b);
		REQUIRE(r.verdict != Equivalence::Unknown);
		CHECK((r.verdict == Equivalence::Equivalent) == expect);
		if (r.verdict == Equivalence::Different)
			CHECK(simulate(a, r.inputs) != simulate(b, r.inputs));
		(expect ? same : different)++;
	}
	CHECK(same > 10);
	CHECK(different > 10);
}
