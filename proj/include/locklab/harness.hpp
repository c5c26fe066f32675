#pragma once

#include "locklab/generator.hpp"
#include "locklab/locking.hpp"
#include "locklab/og_attack.hpp"
#include "locklab/ol_attack.hpp"
#include "locklab/resynth.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace locklab {

/// Invalid or unreadable experiment configuration (CLI exit code 3).
class ConfigError : public std::runtime_error
{
      public:
	using std::runtime_error::runtime_error;
};

/**
 * Seed split scheme: every random stream in a run is derived from the run
 * seed and a stage tag as splitmix64(base ^ fnv1a64(tag) ^ splitmix64(index)).
 */
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

enum class FileMode { Read, Write };

struct FileAccess {
	std::string stage;
	std::string path;
	FileMode mode = FileMode::Read;
};

/// Every file the harness touches, tagged with the stage that touched it.
class FileAccessLog
{
      public:
	void record(std::string stage, std::string path, FileMode mode);
	std::vector<FileAccess> entries() const;
	/// Reads of `.key` files by any stage other than "score".
	std::vector<FileAccess> key_reads_outside_scoring() const;
	nlohmann::json to_json() const;

      private:
	mutable std::mutex mutex_;
	std::vector<FileAccess> entries_;
};

/// Key files hold one '0'/'1' character per bit, index 0 first.
KeyVector read_key_file(const std::string &path, FileAccessLog *log = nullptr, const std::string &stage = "score");
void write_key_file(const std::string &path, const KeyVector &key, FileAccessLog *log = nullptr,
		    const std::string &stage = "lock");

struct CircuitSource {
	std::string name;
	/// Exactly one of the three is set: a .bench path, a built-in name
	/// (majority, c17) or a random-circuit spec.
	std::string path;
	std::string builtin;
	std::optional<RandomCircuitSpec> random;
};

struct LockSpec {
	LockScheme scheme = LockScheme::Rll;
	std::size_t p = 8;
	/// Compound only: the SFLL share.
	std::size_t p2 = 0;
};

enum class AttackKind { Ol, Og, Dip };

/// x-axis of the convergence series: unique variants, or every executed recipe.
enum class ConvergenceMode { Unique, All };

std::string to_string(AttackKind a);
std::string to_string(ConvergenceMode m);
Certify certify_from_string(const std::string &s);
std::string to_string(Certify c);

struct ExperimentConfig {
	std::vector<CircuitSource> circuits;
	std::vector<LockSpec> locks;
	RecipeConfig recipes;
	/// Evenly strided subset of the grid when nonzero.
	std::size_t max_recipes = 0;
	std::set<AttackKind> attacks;
	OlOptions ol;
	/// 0 means 2p.
	std::size_t og_queries = 0;
	std::int64_t conflict_budget = kDefaultConflictBudget;
	DipOptions dip;
	Certify certify = Certify::Sim;
	std::uint64_t seed = 1;
	std::string output_dir = "locklab_out";
	unsigned jobs = 1;
	/// Run cone mode on the protected output of point-function and tree locks.
	bool cone = false;
	ConvergenceMode convergence = ConvergenceMode::Unique;
};

/// Relative circuit paths resolve against `base_dir`. Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir = {});
nlohmann::json to_json(const ExperimentConfig &c);
/// Parses, applies LOCKLAB_SEED and validates.
ExperimentConfig load_config(const std::string &path);
/// LOCKLAB_SEED, when set, replaces the config seed.
void apply_env_overrides(ExperimentConfig &c);
/// Every referenced file exists and parses; lock budgets are positive.
void validate(const ExperimentConfig &c);

Netlist load_circuit(const CircuitSource &s, FileAccessLog *log = nullptr);
/// The recipe list a config selects, seeds included.
std::vector<SynthesisRecipe> select_recipes(const ExperimentConfig &c);

struct ConvergencePoint {
	std::size_t n_used = 0;
	std::size_t dk = 0;
	std::size_t cdk = 0;

	bool operator==(const ConvergencePoint &) const = default;
};

/// Score of the merge of the first n solutions, for n = 1..N.
std::vector<ConvergencePoint> convergence_analysis(std::span<const SolutionVector> solutions, const KeyVector &truth);
/// Smallest n whose dk already equals the final dk.
std::size_t minimal_netlists_for_final_dk(const std::vector<ConvergencePoint> &series);
/// Orders per-variant solutions for the chosen x-axis; All repeats a variant's
/// solution for every recipe that produced it.
std::vector<SolutionVector> convergence_inputs(const VariantSet &v, const std::vector<SolutionVector> &per_variant,
					       ConvergenceMode mode);

/// Slack classes of the variants with the most deciphered bits.
struct SlackReport {
	std::size_t population = 0;
	/// ceil(10% of population).
	std::size_t top_size = 0;
	/// Class one: slack <= 0.
	std::size_t top_non_positive = 0;
	/// Class two: slack > 0, unconstrained variants included.
	std::size_t top_positive = 0;
	std::size_t top_unconstrained = 0;
	std::size_t all_non_positive = 0;
	std::size_t all_positive = 0;
	std::size_t all_unconstrained = 0;
	std::vector<std::size_t> top_indices;
};

/// Sorts variants by per-netlist dk (descending, stable) and buckets the top 10%.
SlackReport slack_analysis(const VariantSet &v, const std::vector<SolutionVector> &solutions);

struct ConeResult {
	std::string output;
	std::size_t whole_gate_count = 0;
	std::size_t cone_gate_count = 0;
	/// Locked-netlist key index of each cone key input.
	std::vector<std::size_t> key_indices;
	std::size_t recipes = 0;
	std::size_t unique_variants = 0;
	/// One entry per locked key bit; Unknown outside the cone.
	std::vector<Guess> guesses;
	double seconds = 0.0;
};

/// Resynthesis and OL ensemble attack on the transitive fanin of `output`.
ConeResult cone_mode(const Netlist &locked, const std::string &output, const std::vector<SynthesisRecipe> &recipes,
		     const OlOptions &ol = {}, const VariantOptions &variant_options = {});

struct OgSummary {
	std::size_t queries = 0;
	std::size_t oracle_queries = 0;
	std::size_t proven = 0;
	std::size_t single_proven = 0;
	std::vector<Guess> final_guesses;
	std::vector<Guess> single_guesses;
};

struct AttackReport {
	std::string circuit;
	std::string scheme;
	std::size_t p = 0;
	std::size_t gate_count = 0;
	std::size_t recipes = 0;
	std::size_t unique_variant_count = 0;
	DiversityReport diversity;

	std::optional<KeyScore> ol_single;
	std::optional<KeyScore> ol_ensemble;
	std::optional<KeyScore> og_single;
	std::optional<KeyScore> og_ensemble;
	std::optional<OgSummary> og;
	std::optional<DipResult> dip;
	std::vector<ConvergencePoint> convergence;
	std::size_t convergence_min_n = 0;
	std::optional<SlackReport> slack;
	std::optional<ConeResult> cone;
	std::optional<KeyScore> cone_score;

	/// Seconds per stage; reported separately from the deterministic JSON.
	std::map<std::string, double> wall_times;
	std::vector<std::string> errors;
};

/// Violations of cdk <= dk <= p, proven <= dk and the slack bucket sums.
std::vector<std::string> check_report_invariants(const AttackReport &r);

nlohmann::json to_json(const AttackReport &r);
nlohmann::json to_json(const SlackReport &s);
nlohmann::json to_json(const ConeResult &c);
/// Deterministic: no wall times, no host data.
nlohmann::json report_json(const std::vector<AttackReport> &reports);
nlohmann::json timing_json(const std::vector<AttackReport> &reports);
/// Per (circuit, scheme): recipes, unique variants, stat means and deviations.
std::string resynth_table_csv(const std::vector<AttackReport> &reports);
/// Per (circuit, scheme): cdk/dk for each attack, proven counts, DIP iterations.
std::string attack_table_csv(const std::vector<AttackReport> &reports);

struct PipelineResult {
	std::vector<AttackReport> reports;
	std::vector<std::string> failures;
	std::filesystem::path output_dir;

	/// 0 on success, 2 when some circuit failed.
	int exit_code() const { return failures.empty() ? 0 : 2; }
};

/**
 * lock -> resynthesize + certify -> attacks -> score -> persist, one
 * (circuit, lock) pair at a time. Stage outputs are cached under
 * <output>/cache by content hash, so a rerun only recomputes what changed.
 * A failing pair is recorded and the run continues.
 */
PipelineResult run_pipeline(const ExperimentConfig &cfg, FileAccessLog *log = nullptr);

} // namespace locklab
