#pragma once

#include "locklab/netlist.hpp"
#include "locklab/sat_solver.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace locklab {

class CnfError : public std::runtime_error
{
      public:
	using std::runtime_error::runtime_error;
};

/**
 * Clause database with per-instance net-to-variable maps.
 *
 * A constant-true variable is created on first use of `constant`; once it
 * exists, clauses mentioning it are simplified on insertion.
 */
class CnfFormula
{
      public:
	Var new_var() { return num_vars_++; }
	int num_vars() const { return num_vars_; }

	/// Throws CnfError on an empty clause or an out-of-range literal.
	void add_clause(std::span<const Lit> lits);
	void add_clause(std::initializer_list<Lit> lits) { add_clause(std::span<const Lit>(lits.begin(), lits.size())); }

	const std::vector<std::vector<Lit>> &clauses() const { return clauses_; }

	Lit constant(bool value);
	bool is_constant(Lit l) const { return true_var_ >= 0 && l.var() == true_var_; }
	/// Value of a constant literal; only meaningful when is_constant(l).
	bool constant_value(Lit l) const { return !l.negated(); }

	void bind(const std::string &instance, const std::string &net, Lit lit);
	std::optional<Lit> lookup(const std::string &instance, const std::string &net) const;

	std::string to_dimacs() const;

      private:
	int num_vars_ = 0;
	Var true_var_ = -1;
	std::vector<std::vector<Lit>> clauses_;
	std::map<std::string, std::map<std::string, Lit>> net_to_var_;
};

struct EncodeOptions {
	/// Fold constants, alias NOT/BUF outputs to fanin literals and skip
	/// gates whose value is implied; the solution set over the interface
	/// literals is unchanged.
	bool simplify = false;
	/// Non-empty: bind every net under this instance tag.
	std::string instance;
};

/**
 * Encodes one copy of `n` into `f` with the given literals for primary and
 * key inputs. Returns the literal of every net, indexed by NetId.
 */
std::vector<Lit> encode_into(CnfFormula &f, const Netlist &n, std::span<const Lit> inputs,
			     std::span<const Lit> keys, const EncodeOptions &options = {});

/// Standalone Tseitin encoding: one variable per net, no simplification.
CnfFormula tseitin_encode(const Netlist &n, const std::string &instance = "n");

/// Per-gate clause count of the plain Tseitin encoding.
std::size_t tseitin_clause_count(GateKind kind, std::size_t fanins);

enum class MiterSharing { InputsOnly, InputsAndKeys };

struct Miter {
	CnfFormula formula;
	std::vector<Lit> inputs;
	std::vector<Lit> keys_a;
	std::vector<Lit> keys_b;
	std::vector<Lit> outputs_a;
	std::vector<Lit> outputs_b;
};

/// Two copies with tied inputs, one XOR per output pair and a clause asserting
/// some output differs. Unsatisfiable iff equivalent under the sharing regime.
Miter build_miter(const Netlist &a, const Netlist &b, MiterSharing share);

struct SatOutcome {
	SatStatus status = SatStatus::Unknown;
	std::vector<bool> model;

	bool sat() const { return status == SatStatus::Satisfiable; }
	bool unsat() const { return status == SatStatus::Unsatisfiable; }
	bool value(Lit l) const { return model[l.var()] != l.negated(); }
};

constexpr std::int64_t kDefaultConflictBudget = 10'000'000;

/// One-shot solve of `f` under assumptions.
SatOutcome solve(const CnfFormula &f, std::span<const Lit> assumptions = {},
		 std::int64_t conflict_budget = kDefaultConflictBudget);

/// Clause-by-clause check of a full assignment.
bool satisfies(const CnfFormula &f, const std::vector<bool> &model);

/**
 * A formula bound to a persistent solver. Clauses appended to `formula()`
 * are forwarded to the solver on the next `solve`.
 */
class SatContext
{
      public:
	explicit SatContext(std::int64_t conflict_budget = kDefaultConflictBudget);

	CnfFormula &formula() { return formula_; }
	const CnfFormula &formula() const { return formula_; }

	SatOutcome solve(std::span<const Lit> assumptions = {});
	SatOutcome solve(std::initializer_list<Lit> assumptions)
	{
		return solve(std::span<const Lit>(assumptions.begin(), assumptions.size()));
	}

	void set_conflict_budget(std::int64_t budget) { solver_.set_conflict_budget(budget); }
	std::uint64_t conflicts() const { return solver_.conflicts(); }

      private:
	void sync();

	CnfFormula formula_;
	Solver solver_;
	std::size_t synced_ = 0;
};

enum class Equivalence { Equivalent, Different, Unknown };

struct EquivalenceResult {
	Equivalence verdict = Equivalence::Unknown;
	/// Distinguishing assignment when Different.
	std::vector<bool> inputs;
	std::vector<bool> keys_a;
	std::vector<bool> keys_b;
};

/// Random-simulation screen followed by a miter proof.
EquivalenceResult check_equivalence(const Netlist &a, const Netlist &b,
				    MiterSharing share = MiterSharing::InputsAndKeys,
				    std::int64_t conflict_budget = kDefaultConflictBudget);

} // namespace locklab
