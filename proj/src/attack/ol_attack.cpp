#include "locklab/ol_attack.hpp"
#include "locklab/resynth.hpp"
#include "locklab/synth_passes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace locklab {

namespace {

const SynthesisRecipe &light_recipe()
{
	static const SynthesisRecipe r{Effort::Medium, Effort::Low, OptEffort::Medium, 0, MaxTransition::P15, false, 0, 0};
	return r;
}

Netlist resimplify(const Netlist &n, const OlOptions &o)
{
	return o.light_resynthesis ? resynthesize(n, light_recipe()) : simplify_netlist(n);
}

KeyBitGuess threshold_guess(double d, double threshold)
{
	KeyBitGuess g;
	if (d == 0.0) {
		g.reason = GuessReason::Tie;
		return g;
	}
	if (std::abs(d) <= threshold) {
		g.reason = GuessReason::BelowThreshold;
		return g;
	}
	// Hardening the true value simplifies more, so a positive delta points to Zero.
	g.value = d > 0 ? Guess::Zero : Guess::One;
	g.reason = GuessReason::Decided;
	g.confidence = std::clamp((std::abs(d) - threshold) / std::abs(d), 0.0, 1.0);
	return g;
}

std::array<double, 5> as_array(const FeatureDelta &d) { return {d.gate_count, d.depth, d.literal_count, d.area, d.power}; }

double dist2(const std::array<double, 5> &a, const std::array<double, 5> &b)
{
	double s = 0;
	for (int i = 0; i < 5; ++i)
		s += (a[i] - b[i]) * (a[i] - b[i]);
	return s;
}

SolutionVector cluster_decide(const std::vector<FeatureDelta> &deltas, double base_area, const OlOptions &o)
{
	const std::size_t p = deltas.size();
	std::vector<std::array<double, 5>> pts(p);
	std::array<double, 5> scale{};
	for (const auto &d : deltas) {
		auto a = as_array(d);
		for (int i = 0; i < 5; ++i)
			scale[i] = std::max(scale[i], std::abs(a[i]));
	}
	for (std::size_t b = 0; b < p; ++b) {
		auto a = as_array(deltas[b]);
		for (int i = 0; i < 5; ++i)
			pts[b][i] = scale[i] > 0 ? a[i] / scale[i] : 0.0;
	}
	// Deterministic seeds: the bits with the smallest and largest area delta.
	std::size_t lo = 0, hi = 0;
	for (std::size_t b = 1; b < p; ++b) {
		if (deltas[b].area < deltas[lo].area)
			lo = b;
		if (deltas[b].area > deltas[hi].area)
			hi = b;
	}
	std::array<std::array<double, 5>, 2> centre{pts[lo], pts[hi]};
	std::vector<int> label(p, 0);
	for (int iter = 0; iter < 100; ++iter) {
		bool changed = false;
		for (std::size_t b = 0; b < p; ++b) {
			int l = dist2(pts[b], centre[1]) < dist2(pts[b], centre[0]) ? 1 : 0;
			changed = changed || l != label[b];
			label[b] = l;
		}
		for (int c = 0; c < 2; ++c) {
			std::array<double, 5> sum{};
			int count = 0;
			for (std::size_t b = 0; b < p; ++b)
				if (label[b] == c) {
					for (int i = 0; i < 5; ++i)
						sum[i] += pts[b][i];
					++count;
				}
			if (count > 0)
				for (int i = 0; i < 5; ++i)
					centre[c][i] = sum[i] / count;
		}
		if (!changed && iter > 0)
			break;
	}
	// Cluster polarity from its aggregate area delta.
	std::array<double, 2> aggregate{};
	for (std::size_t b = 0; b < p; ++b)
		aggregate[label[b]] += deltas[b].area;
	SolutionVector s;
	const double threshold = o.tau * base_area;
	for (std::size_t b = 0; b < p; ++b) {
		KeyBitGuess g;
		double agg = aggregate[label[b]];
		if (deltas[b].area == 0.0 || agg == 0.0) {
			g.reason = GuessReason::Tie;
		} else if (std::abs(deltas[b].area) <= threshold && (deltas[b].area > 0) != (agg > 0)) {
			// Weak evidence that contradicts its own cluster stays undecided.
			g.reason = GuessReason::BelowThreshold;
		} else {
			g.value = agg > 0 ? Guess::Zero : Guess::One;
			g.reason = GuessReason::Decided;
			double spread = std::sqrt(dist2(centre[0], centre[1]));
			double own = std::sqrt(dist2(pts[b], centre[label[b]]));
			g.confidence = spread > 0 ? std::clamp(1.0 - own / spread, 0.0, 1.0) : 0.0;
		}
		s.guesses.push_back(g);
	}
	return s;
}

} // namespace

std::string to_string(Guess g)
{
	switch (g) {
	case Guess::Zero:
		return "0";
	case Guess::One:
		return "1";
	case Guess::Unknown:
		return "X";
	}
	return "X";
}

std::string to_string(GuessReason r)
{
	switch (r) {
	case GuessReason::Decided:
		return "decided";
	case GuessReason::Tie:
		return "tie";
	case GuessReason::BelowThreshold:
		return "below-threshold";
	}
	return "tie";
}

std::string to_string(OlPolicy p) { return p == OlPolicy::Threshold ? "threshold" : "cluster"; }

OlPolicy ol_policy_from_string(const std::string &s)
{
	if (s == "threshold")
		return OlPolicy::Threshold;
	if (s == "cluster")
		return OlPolicy::Cluster;
	throw AttackError("unknown OL policy '" + s + "'");
}

Netlist harden_key_bit(const Netlist &n, std::size_t i, bool v)
{
	if (i >= n.key_count())
		throw AttackError("key index " + std::to_string(i) + " out of range (p = " + std::to_string(n.key_count()) + ")");
	return harden_key_input(n, i, v);
}

std::vector<FeatureDelta> feature_deltas(const Netlist &n, const OlOptions &options)
{
	std::vector<FeatureDelta> out;
	for (std::size_t i = 0; i < n.key_count(); ++i) {
		ComplexityStats s0 = stats(resimplify(harden_key_bit(n, i, false), options));
		ComplexityStats s1 = stats(resimplify(harden_key_bit(n, i, true), options));
		FeatureDelta d;
		d.gate_count = double(s1.gate_count - s0.gate_count);
		d.depth = double(s1.depth - s0.depth);
		d.literal_count = double(s1.literal_count - s0.literal_count);
		d.area = s1.area_proxy - s0.area_proxy;
		d.power = s1.power_proxy - s0.power_proxy;
		out.push_back(d);
	}
	return out;
}

SolutionVector decide(const std::vector<FeatureDelta> &deltas, double base_area, const OlOptions &options)
{
	if (options.policy == OlPolicy::Cluster && deltas.size() > 1)
		return cluster_decide(deltas, base_area, options);
	SolutionVector s;
	for (const FeatureDelta &d : deltas)
		s.guesses.push_back(threshold_guess(d.area, options.tau * base_area));
	return s;
}

SolutionVector attack_netlist(const Netlist &n, const OlOptions &options)
{
	if (n.key_count() == 0)
		throw AttackError("netlist has no key inputs");
	double base_area = stats(resimplify(n, options)).area_proxy;
	SolutionVector s = decide(feature_deltas(n, options), base_area, options);
	s.source = to_hex(structural_signature(n));
	return s;
}

std::vector<SolutionVector> attack_netlists(const std::vector<Netlist> &netlists, const OlOptions &options, unsigned jobs)
{
	std::vector<SolutionVector> out(netlists.size());
	std::atomic<std::size_t> next{0};
	std::exception_ptr error;
	std::mutex m;
	auto worker = [&] {
		for (std::size_t i; (i = next.fetch_add(1)) < netlists.size();) {
			try {
				out[i] = attack_netlist(netlists[i], options);
			} catch (...) {
				std::lock_guard lock(m);
				if (!error)
					error = std::current_exception();
			}
		}
	};
	jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(netlists.size())));
	if (jobs == 1) {
		worker();
	} else {
		std::vector<std::thread> pool;
		for (unsigned j = 0; j < jobs; ++j)
			pool.emplace_back(worker);
		for (auto &t : pool)
			t.join();
	}
	if (error)
		std::rethrow_exception(error);
	return out;
}

Guess merge_rule(int dk0, int dk1)
{
	if (dk0 > dk1)
		return Guess::Zero;
	if (dk1 > dk0)
		return Guess::One;
	return Guess::Unknown;
}

EnsembleSolution merge_votes(std::span<const SolutionVector> solutions)
{
	if (solutions.empty())
		throw AttackError("merge_votes needs at least one solution");
	const std::size_t p = solutions.front().size();
	EnsembleSolution e;
	e.solutions = solutions.size();
	e.bits.resize(p);
	for (const SolutionVector &s : solutions) {
		if (s.size() != p)
			throw AttackError("solution lengths differ");
		for (std::size_t i = 0; i < p; ++i) {
			e.bits[i].dk0 += s.guesses[i].value == Guess::Zero;
			e.bits[i].dk1 += s.guesses[i].value == Guess::One;
		}
	}
	for (EnsembleBit &b : e.bits) {
		b.merged.value = merge_rule(b.dk0, b.dk1);
		b.merged.reason = b.merged.value == Guess::Unknown ? GuessReason::Tie : GuessReason::Decided;
		int votes = b.dk0 + b.dk1;
		b.merged.confidence = votes > 0 ? double(std::abs(b.dk0 - b.dk1)) / votes : 0.0;
	}
	return e;
}

KeyScore score(std::span<const Guess> guesses, const KeyVector &truth)
{
	if (guesses.size() != truth.size())
		throw AttackError("score: guess length " + std::to_string(guesses.size()) + " does not match key length " +
				  std::to_string(truth.size()));
	KeyScore s;
	for (std::size_t i = 0; i < guesses.size(); ++i) {
		if (guesses[i] == Guess::Unknown)
			continue;
		++s.dk;
		s.cdk += (guesses[i] == Guess::One) == truth.bits[i];
	}
	return s;
}

KeyScore score(const SolutionVector &s, const KeyVector &truth)
{
	std::vector<Guess> g;
	for (const auto &x : s.guesses)
		g.push_back(x.value);
	return score(g, truth);
}

KeyScore score(const EnsembleSolution &e, const KeyVector &truth)
{
	std::vector<Guess> g;
	for (const auto &x : e.bits)
		g.push_back(x.merged.value);
	return score(g, truth);
}

nlohmann::json to_json(const SolutionVector &s)
{
	nlohmann::json j;
	j["source"] = s.source;
	j["bits"] = nlohmann::json::array();
	for (const auto &g : s.guesses)
		j["bits"].push_back({{"value", to_string(g.value)}, {"confidence", g.confidence}, {"reason", to_string(g.reason)}});
	return j;
}

SolutionVector solution_from_json(const nlohmann::json &j)
{
	SolutionVector s;
	s.source = j.value("source", std::string());
	for (const auto &b : j.at("bits")) {
		KeyBitGuess g;
		std::string v = b.at("value").get<std::string>();
		g.value = v == "0" ? Guess::Zero : v == "1" ? Guess::One : Guess::Unknown;
		g.confidence = b.value("confidence", 0.0);
		std::string r = b.value("reason", std::string("tie"));
		g.reason = r == "decided" ? GuessReason::Decided : r == "below-threshold" ? GuessReason::BelowThreshold : GuessReason::Tie;
		s.guesses.push_back(g);
	}
	return s;
}

nlohmann::json to_json(const EnsembleSolution &e)
{
	nlohmann::json j;
	j["solutions"] = e.solutions;
	std::string merged;
	for (const auto &b : e.bits) {
		j["dk0"].push_back(b.dk0);
		j["dk1"].push_back(b.dk1);
		merged += to_string(b.merged.value);
	}
	j["merged"] = merged;
	return j;
}

nlohmann::json to_json(const KeyScore &s) { return {{"cdk", s.cdk}, {"dk", s.dk}}; }

} // namespace locklab
