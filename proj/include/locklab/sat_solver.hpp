#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace locklab {

using Var = int;

/// Literal encoded as 2*var + sign, sign set for the negative phase.
struct Lit {
	std::uint32_t code = 0;

	static constexpr Lit make(Var v, bool negated = false)
	{
		return Lit{static_cast<std::uint32_t>(2 * v + (negated ? 1 : 0))};
	}
	constexpr Var var() const { return static_cast<Var>(code >> 1); }
	constexpr bool negated() const { return code & 1; }
	constexpr Lit operator~() const { return Lit{code ^ 1}; }
	constexpr Lit operator^(bool flip) const { return Lit{code ^ (flip ? 1u : 0u)}; }
	constexpr bool operator==(const Lit &) const = default;
	constexpr auto operator<=>(const Lit &) const = default;

	/// DIMACS integer: +(var+1) or -(var+1).
	int dimacs() const { return negated() ? -(var() + 1) : var() + 1; }
};

enum class SatStatus { Satisfiable, Unsatisfiable, Unknown };

/**
 * Conflict-driven clause-learning solver with two-watched-literal
 * propagation, VSIDS branching, phase saving, Luby restarts and
 * activity-based learnt clause reduction.
 *
 * Incremental: clauses may be added between `solve` calls and persist.
 * Assumptions are enforced as the first decisions of each call.
 */
class Solver
{
      public:
	Solver();

	Var new_var();
	int num_vars() const { return static_cast<int>(assigns_.size()); }
	void reserve_vars(int count);

	/// Returns false once the clause database is trivially unsatisfiable.
	bool add_clause(std::span<const Lit> lits);
	bool add_clause(std::initializer_list<Lit> lits) { return add_clause(std::span<const Lit>(lits.begin(), lits.size())); }

	SatStatus solve(std::span<const Lit> assumptions = {});
	SatStatus solve(std::initializer_list<Lit> assumptions)
	{
		return solve(std::span<const Lit>(assumptions.begin(), assumptions.size()));
	}

	/// Model value after Satisfiable.
	bool model_value(Var v) const { return model_[v]; }
	bool model_value(Lit l) const { return model_[l.var()] != l.negated(); }
	const std::vector<bool> &model() const { return model_; }

	/// Maximum conflicts per `solve` call; negative means unlimited.
	void set_conflict_budget(std::int64_t conflicts) { conflict_budget_ = conflicts; }

	bool okay() const { return ok_; }
	std::uint64_t conflicts() const { return total_conflicts_; }
	std::uint64_t decisions() const { return total_decisions_; }

      private:
	using CRef = std::uint32_t;
	static constexpr CRef kNoReason = 0xffffffffu;
	static constexpr std::int8_t kTrue = 0, kFalse = 1, kUndef = 2;

	struct ClauseHeader {
		std::uint32_t start;
		std::uint32_t size;
		float activity;
		std::uint32_t lbd;
		bool learnt;
		bool deleted;
	};
	struct Watcher {
		CRef cref;
		Lit blocker;
	};

	std::int8_t value(Lit l) const
	{
		std::int8_t a = assigns_[l.var()];
		return a == kUndef ? kUndef : static_cast<std::int8_t>(a ^ static_cast<std::int8_t>(l.negated()));
	}
	Lit *lits_of(CRef c) { return lit_arena_.data() + clauses_[c].start; }
	int decision_level() const { return static_cast<int>(trail_lim_.size()); }

	CRef alloc_clause(std::span<const Lit> lits, bool learnt);
	void attach(CRef c);
	void enqueue(Lit l, CRef reason);
	CRef propagate();
	void analyze(CRef conflict, std::vector<Lit> &learnt, int &backtrack_level, std::uint32_t &lbd);
	bool literal_redundant(Lit l, std::uint32_t abstract_levels);
	void cancel_until(int level);
	Lit pick_branch();
	void bump_var(Var v);
	void bump_clause(CRef c);
	void reduce_learnts();
	void collect_garbage();
	bool locked(CRef c);
	SatStatus search(std::int64_t conflicts_allowed, std::span<const Lit> assumptions);

	// Binary max-heap over variable activity.
	void heap_insert(Var v);
	void heap_up(int pos);
	void heap_down(int pos);
	Var heap_pop();
	bool heap_contains(Var v) const { return v < static_cast<Var>(heap_index_.size()) && heap_index_[v] >= 0; }

	bool ok_ = true;
	std::vector<std::int8_t> assigns_;
	std::vector<int> level_;
	std::vector<CRef> reason_;
	std::vector<double> activity_;
	std::vector<char> polarity_;
	std::vector<char> seen_;
	std::vector<Lit> trail_;
	std::vector<int> trail_lim_;
	std::size_t qhead_ = 0;

	std::vector<Lit> lit_arena_;
	std::vector<ClauseHeader> clauses_;
	std::vector<CRef> learnts_;
	std::vector<std::vector<Watcher>> watches_;
	std::size_t wasted_lits_ = 0;

	std::vector<Var> heap_;
	std::vector<int> heap_index_;

	double var_inc_ = 1.0;
	double var_decay_ = 0.95;
	double clause_inc_ = 1.0;
	double clause_decay_ = 0.999;
	double max_learnts_ = 0;

	std::int64_t conflict_budget_ = -1;
	std::uint64_t total_conflicts_ = 0;
	std::uint64_t total_decisions_ = 0;

	std::vector<bool> model_;
	std::vector<Lit> analyze_stack_;
	std::vector<Lit> analyze_clear_;
};

} // namespace locklab
