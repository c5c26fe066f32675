#include "locklab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>

namespace locklab {

std::vector<ConvergencePoint> convergence_analysis(std::span<const SolutionVector> solutions, const KeyVector &truth)
{
	if (solutions.empty())
		throw AttackError("convergence analysis needs at least one solution");
	const std::size_t p = truth.size();
	std::vector<int> dk0(p, 0), dk1(p, 0);
	std::vector<ConvergencePoint> series;
	// Running vote counts give the same merge as re-merging each prefix.
	for (std::size_t n = 0; n < solutions.size(); ++n) {
		const SolutionVector &s = solutions[n];
		if (s.size() != p)
			throw AttackError("solution length does not match the key length");
		for (std::size_t i = 0; i < p; ++i) {
			dk0[i] += s.guesses[i].value == Guess::Zero;
			dk1[i] += s.guesses[i].value == Guess::One;
		}
		std::vector<Guess> merged(p);
		for (std::size_t i = 0; i < p; ++i)
			merged[i] = merge_rule(dk0[i], dk1[i]);
		KeyScore sc = score(merged, truth);
		series.push_back({n + 1, sc.dk, sc.cdk});
	}
	return series;
}

std::size_t minimal_netlists_for_final_dk(const std::vector<ConvergencePoint> &series)
{
	if (series.empty())
		return 0;
	for (const ConvergencePoint &c : series)
		if (c.dk == series.back().dk)
			return c.n_used;
	return series.back().n_used;
}

std::vector<SolutionVector> convergence_inputs(const VariantSet &v, const std::vector<SolutionVector> &per_variant,
					       ConvergenceMode mode)
{
	if (per_variant.size() != v.variants.size())
		throw AttackError("one solution per unique variant is required");
	if (mode == ConvergenceMode::Unique)
		return per_variant;
	std::map<std::string, std::size_t> by_signature;
	for (std::size_t i = 0; i < v.variants.size(); ++i)
		by_signature.emplace(v.variants[i].signature, i);
	std::vector<SolutionVector> out;
	for (const std::string &sig : v.recipe_signatures) {
		auto it = by_signature.find(sig);
		if (it == by_signature.end())
			throw AttackError("recipe log refers to an unknown variant " + sig);
		out.push_back(per_variant[it->second]);
	}
	return out;
}

SlackReport slack_analysis(const VariantSet &v, const std::vector<SolutionVector> &solutions)
{
	if (v.variants.empty() || solutions.empty())
		throw AttackError("slack analysis needs variants and their solutions");
	if (solutions.size() != v.variants.size())
		throw AttackError("one solution per unique variant is required");
	SlackReport r;
	r.population = v.variants.size();
	r.top_size = (r.population + 9) / 10;
	std::vector<std::size_t> dk(r.population, 0);
	for (std::size_t i = 0; i < r.population; ++i)
		for (const KeyBitGuess &g : solutions[i].guesses)
			dk[i] += g.value != Guess::Unknown;
	std::vector<std::size_t> order(r.population);
	std::iota(order.begin(), order.end(), 0);
	std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dk[a] > dk[b]; });
	r.top_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r.top_size));

	auto classify = [&](std::size_t i, std::size_t &non_positive, std::size_t &positive, std::size_t &unconstrained) {
		const auto &s = v.variants[i].slack;
		if (!s) {
			++positive;
			++unconstrained;
		} else if (*s <= 0) {
			++non_positive;
		} else {
			++positive;
		}
	};
	for (std::size_t i = 0; i < r.population; ++i)
		classify(i, r.all_non_positive, r.all_positive, r.all_unconstrained);
	for (std::size_t i : r.top_indices)
		classify(i, r.top_non_positive, r.top_positive, r.top_unconstrained);
	return r;
}

ConeResult cone_mode(const Netlist &locked, const std::string &output, const std::vector<SynthesisRecipe> &recipes,
		     const OlOptions &ol, const VariantOptions &variant_options)
{
	const auto start = std::chrono::steady_clock::now();
	ConeResult r;
	r.output = output;
	Netlist cone = extract_logic_cone(locked, output);
	r.whole_gate_count = locked.gates().size();
	r.cone_gate_count = cone.gates().size();
	r.guesses.assign(locked.key_count(), Guess::Unknown);
	std::map<std::string, std::size_t> key_index;
	for (std::size_t i = 0; i < locked.key_count(); ++i)
		key_index[locked.net_name(locked.key_inputs()[i])] = i;
	for (NetId k : cone.key_inputs())
		r.key_indices.push_back(key_index.at(cone.net_name(k)));
	r.recipes = recipes.size();
	if (cone.key_count() > 0) {
		VariantSet vs = generate_variants(cone, recipes, variant_options);
		r.unique_variants = vs.variants.size();
		std::vector<Netlist> nets;
		for (const Variant &v : vs.variants)
			nets.push_back(v.netlist);
		std::vector<SolutionVector> sols = attack_netlists(nets, ol, variant_options.jobs);
		EnsembleSolution e = merge_votes(sols);
		for (std::size_t i = 0; i < r.key_indices.size(); ++i)
			r.guesses[r.key_indices[i]] = e.bits[i].merged.value;
	}
	r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
	return r;
}

} // namespace locklab
