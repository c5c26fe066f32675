#pragma once

#include "locklab/analysis.hpp"
#include "locklab/netlist.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace locklab {

class ResynthError : public std::runtime_error
{
      public:
	using std::runtime_error::runtime_error;
};

enum class Effort { Low, Medium, High };
enum class OptEffort { Low, Medium, High, Extreme };
enum class MaxTransition { P5, P10, P15 };

struct SynthesisRecipe {
	Effort syn_gen = Effort::Low;
	Effort syn_map = Effort::Low;
	OptEffort syn_opt = OptEffort::Low;
	/// 0 = no delay target, otherwise i in 1..4 selects (dcp/5)*i.
	int delay_point = 0;
	MaxTransition max_transition = MaxTransition::P5;
	bool key_constraint = false;
	std::uint64_t seed = 0;
	/// Position in the enumerated grid.
	std::size_t index = 0;

	bool operator==(const SynthesisRecipe &) const = default;
};

std::string to_string(Effort e);
std::string to_string(OptEffort e);
std::string to_string(MaxTransition t);
/// Compact one-line description, e.g. "gen=Low map=High opt=Medium delay=2 tr=P10 key=On seed=..".
std::string to_string(const SynthesisRecipe &r);

/// Values enabled per axis; the grid is their Cartesian product.
struct RecipeConfig {
	std::vector<Effort> syn_gen{Effort::Low, Effort::Medium, Effort::High};
	std::vector<Effort> syn_map{Effort::Low, Effort::Medium, Effort::High};
	std::vector<OptEffort> syn_opt{OptEffort::Low, OptEffort::Medium, OptEffort::High, OptEffort::Extreme};
	std::vector<int> delay_point{0, 1, 2, 3, 4};
	std::vector<MaxTransition> max_transition{MaxTransition::P5, MaxTransition::P10, MaxTransition::P15};
	std::vector<bool> key_constraint{false, true};
	/// Mixed with each recipe's position to derive its seed.
	std::uint64_t seed_base = 0;
	/// When set, every recipe gets this seed.
	std::optional<std::uint64_t> seed;
};

/// Lexicographic product (syn_gen outermost, key_constraint innermost).
std::vector<SynthesisRecipe> enumerate_recipes(const RecipeConfig &config = {});

/// Depth of `n` after constant propagation, hashing and balancing.
int compute_dcp(const Netlist &n);

/// Gate-level delay target of a recipe, or nullopt when it has none.
std::optional<int> delay_target(int dcp, const SynthesisRecipe &r);

/// Maximum fanout enforced for a transition setting.
int fanout_limit(MaxTransition t);

Netlist resynthesize(const Netlist &n, const SynthesisRecipe &r);

enum class Certify { None, Sim, Sat, Both };

struct VariantOptions {
	unsigned jobs = 1;
	Certify certify = Certify::Both;
	std::size_t sim_vectors = 10000;
	/// Replaces resynthesize when non-empty. Placeholders {in}, {out} and
	/// {recipe} are substituted; the command must write a BENCH file to {out}.
	std::string external_command;
};

struct Variant {
	SynthesisRecipe recipe;
	Netlist netlist;
	ComplexityStats stats;
	/// Target minus achieved depth; nullopt is the unconstrained (+inf) class.
	std::optional<int> slack;
	std::string signature;
};

struct VariantSet {
	Netlist base;
	/// Unique variants, each with the first recipe that produced it.
	std::vector<Variant> variants;
	std::set<std::string> unique_signatures;
	/// Every executed recipe with the signature it produced, in order.
	std::vector<SynthesisRecipe> recipes;
	std::vector<std::string> recipe_signatures;
};

VariantSet generate_variants(const Netlist &n, const std::vector<SynthesisRecipe> &recipes,
			     const VariantOptions &options = {});

/// Runs one recipe outside the pool, including certification.
Variant make_variant(const Netlist &n, const SynthesisRecipe &r, const VariantOptions &options = {});

struct StatSummary {
	double mean = 0.0;
	double stddev = 0.0;
	/// Each variant's value divided by the mean (all ones when the mean is zero).
	std::vector<double> normalized;
};

struct DiversityReport {
	StatSummary gate_count;
	StatSummary depth;
	StatSummary literal_count;
	StatSummary area;
	StatSummary power;
};

/// Population mean and standard deviation per stat over the unique variants.
DiversityReport diversity_report(const VariantSet &v);

/// Population statistics of one series; throws ResynthError when empty.
StatSummary summarize(const std::vector<double> &values);

/// First recipe per unique signature, in execution order.
std::vector<SynthesisRecipe> prune_redundant_recipes(const VariantSet &v);
/// Runs generate_variants first.
std::vector<SynthesisRecipe> prune_redundant_recipes(const Netlist &n, const std::vector<SynthesisRecipe> &recipes,
						     const VariantOptions &options = {});

nlohmann::json to_json(const SynthesisRecipe &r);
SynthesisRecipe recipe_from_json(const nlohmann::json &j);
nlohmann::json to_json(const RecipeConfig &c);
RecipeConfig recipe_config_from_json(const nlohmann::json &j);

/// Variant file name: <base>__r<recipe-index>.bench
std::string variant_file_name(const std::string &base, const SynthesisRecipe &r);

/// Manifest with recipe fields, signature, stats and slack per unique variant.
nlohmann::json manifest_json(const VariantSet &v, const std::string &base);

/// Writes every unique variant and manifest.json into `dir`.
void write_variant_set(const VariantSet &v, const std::string &dir, const std::string &base);

/// Loads a directory written by write_variant_set. Stats are recomputed from
/// the files; `base` is copied in when given.
VariantSet read_variant_set(const std::string &dir, const Netlist *base = nullptr);

} // namespace locklab
