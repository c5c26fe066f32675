#pragma once

#include "locklab/cnf.hpp"
#include "locklab/netlist.hpp"
#include "locklab/ol_attack.hpp"

#include <json.hpp>

#include <map>
#include <mutex>
#include <optional>
#include <vector>

namespace locklab {

using Query = std::vector<bool>;

/**
 * A correctly keyed reference answering input queries. Answers are memoized;
 * the counter tracks distinct queries evaluated. Safe to share between threads.
 */
class Oracle
{
      public:
	/// Unlocked reference circuit (no key inputs).
	static Oracle from_original(Netlist original);
	/// Locked circuit programmed with its secret key.
	static Oracle from_locked(Netlist locked, KeyVector key);

	std::vector<bool> query(const Query &q);
	std::size_t query_count() const;
	std::size_t input_width() const { return reference_.primary_inputs().size(); }
	std::size_t output_width() const { return reference_.primary_outputs().size(); }
	/// The reference with the key applied, for verification.
	const Netlist &unlocked() const { return unlocked_; }

	Oracle(const Oracle &other);

      private:
	Oracle(Netlist reference, KeyVector key);

	Netlist reference_;
	KeyVector key_;
	Netlist unlocked_;
	mutable std::mutex mutex_;
	std::map<Query, std::vector<bool>> cache_;
};

/// All key inputs of `n` tied to `key`, then simplified; no key inputs remain.
Netlist apply_key(const Netlist &n, const KeyVector &key);

struct SensitizationResult {
	std::vector<Query> queries;
	/// Bits for which a sensitizing input was found, and the query index used.
	std::vector<std::pair<std::size_t, std::size_t>> sensitized;
	/// Unobservable bits (UNSAT) and bits whose search ran out of budget.
	std::vector<std::size_t> skipped;
	std::vector<std::size_t> budget_exhausted;
};

/// One query per observable key bit: an input under which flipping that bit
/// changes some output for some setting of the other bits. Deduplicated.
SensitizationResult gen_sensitization_queries(const Netlist &locked, std::int64_t conflict_budget = kDefaultConflictBudget);

/// `count` distinct uniform vectors (fewer when the input space is smaller),
/// avoiding any in `exclude`.
std::vector<Query> gen_random_queries(const Netlist &locked, std::size_t count, std::uint64_t seed,
				      const std::vector<Query> &exclude = {});

enum class BitProof { Proven, Unproven, Budget };

std::string to_string(BitProof b);

/**
 * The accumulated key-constraint formula: one simplified circuit copy per
 * query, with key variables shared across copies.
 */
class KeyConstraints
{
      public:
	explicit KeyConstraints(const Netlist &locked, std::int64_t conflict_budget = kDefaultConflictBudget);

	/// Adds the copy for (q, response). Throws AttackError on width mismatch
	/// or when the response contradicts the circuit for every key.
	void derive_constraints(const Query &q, const std::vector<bool> &response);

	/// Any key consistent with all constraints; nullopt when the budget runs out.
	std::optional<KeyVector> solve_candidate();

	/// Solves with k_i = !value; UNSAT proves the bit. On SAT the model is kept
	/// as an alternative candidate.
	BitProof prove_bit(std::size_t i, bool value);

	/// The last alternative model found by prove_bit, if any.
	const std::optional<KeyVector> &alternative() const { return alternative_; }

	/// Up to `limit` distinct keys satisfying all constraints.
	std::vector<KeyVector> enumerate_keys(std::size_t limit);

	std::size_t constraint_count() const { return copies_; }
	std::size_t key_count() const { return keys_.size(); }

      private:
	KeyVector key_of(const SatOutcome &o) const;

	Netlist locked_;
	SatContext ctx_;
	std::vector<Lit> keys_;
	std::optional<KeyVector> alternative_;
	std::size_t copies_ = 0;
};

struct ProvenBit {
	bool candidate = false;
	BitProof status = BitProof::Unproven;
};

struct ProvenSolution {
	std::vector<ProvenBit> bits;
	std::optional<KeyVector> candidate;
	std::size_t queries = 0;

	std::size_t proven_count() const;
};

struct QueryPlan {
	std::vector<Query> queries;
	SensitizationResult sensitization;
	std::size_t random_count = 0;
};

struct QueryAttackOptions {
	/// Explicit query list; when set the generators are skipped.
	std::optional<std::vector<Query>> queries;
	/// Total query target; 0 means 2p.
	std::size_t query_count = 0;
	std::uint64_t seed = 1;
	std::int64_t conflict_budget = kDefaultConflictBudget;
};

/// Sensitization queries first, then random ones up to the target.
QueryPlan plan_queries(const Netlist &locked, const QueryAttackOptions &options = {});

/// Constraints from given (query, response) pairs, candidate and per-bit proofs.
ProvenSolution prove_with_queries(const Netlist &netlist, const std::vector<Query> &queries,
				  const std::vector<std::vector<bool>> &responses,
				  std::int64_t conflict_budget = kDefaultConflictBudget);

ProvenSolution query_attack(const Netlist &locked, Oracle &oracle, const QueryAttackOptions &options = {});

enum class Provenance { Proven, OlGuess, Unknown };

std::string to_string(Provenance p);

struct FinalBit {
	Guess value = Guess::Unknown;
	Provenance provenance = Provenance::Unknown;
	/// Some variant ran out of budget on this bit.
	bool budget_flag = false;
	std::size_t proving_variants = 0;
};

struct KeySolution {
	std::vector<FinalBit> bits;
	std::vector<ProvenSolution> per_variant;
	std::vector<Query> queries;
	std::size_t oracle_queries = 0;

	std::vector<Guess> guesses() const;
	std::size_t proven_count() const;
};

/// Proven values take precedence; the OL ensemble fills the rest. Throws
/// AttackError when two variants prove opposite values.
KeySolution combine_proofs(const std::vector<ProvenSolution> &per_variant, const EnsembleSolution *ol);

struct EnsembleOgOptions {
	QueryAttackOptions query;
	unsigned jobs = 1;
};

/// Queries are planned once on `locked` and replayed on every variant.
KeySolution ensemble_og_attack(const Netlist &locked, const std::vector<Netlist> &variants, Oracle &oracle,
			       const EnsembleSolution *ol = nullptr, const EnsembleOgOptions &options = {});

struct DipOptions {
	std::size_t max_iterations = 1u << 14;
	std::int64_t conflict_budget = kDefaultConflictBudget;
	/// Wall-clock limit in seconds; 0 disables it.
	double time_limit = 0.0;
};

struct DipResult {
	bool success = false;
	bool timeout = false;
	KeyVector key;
	std::size_t iterations = 0;
	/// The returned key was checked equivalent to the oracle by a miter.
	bool verified = false;
};

DipResult dip_attack(const Netlist &locked, Oracle &oracle, const DipOptions &options = {});

KeyScore score(const KeySolution &s, const KeyVector &truth);

nlohmann::json to_json(const ProvenSolution &s);
nlohmann::json to_json(const KeySolution &s);
nlohmann::json to_json(const DipResult &r);

} // namespace locklab
