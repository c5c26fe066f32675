#pragma once

#include "locklab/analysis.hpp"
#include "locklab/netlist.hpp"

#include <json.hpp>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace locklab {

class AttackError : public std::runtime_error
{
      public:
	using std::runtime_error::runtime_error;
};

enum class Guess { Zero, One, Unknown };

/// Why a bit ended up where it is.
enum class GuessReason { Decided, Tie, BelowThreshold };

struct KeyBitGuess {
	Guess value = Guess::Unknown;
	/// Normalized decision margin in [0,1]; 0 whenever value is Unknown.
	double confidence = 0.0;
	GuessReason reason = GuessReason::Tie;

	bool operator==(const KeyBitGuess &) const = default;
};

struct SolutionVector {
	std::vector<KeyBitGuess> guesses;
	/// Structural signature (hex) of the attacked netlist.
	std::string source;

	std::size_t size() const { return guesses.size(); }
};

struct EnsembleBit {
	int dk0 = 0;
	int dk1 = 0;
	KeyBitGuess merged;
};

struct EnsembleSolution {
	std::vector<EnsembleBit> bits;
	std::size_t solutions = 0;
};

/// stats(hardened with k_i = 1) minus stats(hardened with k_i = 0).
struct FeatureDelta {
	double gate_count = 0.0;
	double depth = 0.0;
	double literal_count = 0.0;
	double area = 0.0;
	double power = 0.0;
};

enum class OlPolicy { Threshold, Cluster };

std::string to_string(Guess g);
std::string to_string(GuessReason r);
std::string to_string(OlPolicy p);
OlPolicy ol_policy_from_string(const std::string &s);

struct OlOptions {
	OlPolicy policy = OlPolicy::Threshold;
	/// Decision threshold as a fraction of the netlist's area proxy.
	double tau = 0.02;
	/// Resimplify hardened circuits with the fixed light recipe (otherwise only
	/// constant propagation and sweeping are applied).
	bool light_resynthesis = true;
};

/// Key input i tied to v, then constant propagation and dead-gate sweep.
Netlist harden_key_bit(const Netlist &n, std::size_t i, bool v);

/// Per-key-bit feature deltas of `n`.
std::vector<FeatureDelta> feature_deltas(const Netlist &n, const OlOptions &options = {});

/// Decision from precomputed deltas; `base_area` scales the threshold.
SolutionVector decide(const std::vector<FeatureDelta> &deltas, double base_area, const OlOptions &options = {});

SolutionVector attack_netlist(const Netlist &n, const OlOptions &options = {});

/// Attacks every netlist (concurrently when jobs > 1), preserving order.
std::vector<SolutionVector> attack_netlists(const std::vector<Netlist> &netlists, const OlOptions &options = {},
					    unsigned jobs = 1);

/// Majority per bit: Zero iff dk0 > dk1, One iff dk1 > dk0, Unknown on ties.
EnsembleSolution merge_votes(std::span<const SolutionVector> solutions);

/// The merged value for one bit's vote counts.
Guess merge_rule(int dk0, int dk1);

struct KeyScore {
	std::size_t cdk = 0;
	std::size_t dk = 0;

	bool operator==(const KeyScore &) const = default;
};

KeyScore score(std::span<const Guess> guesses, const KeyVector &truth);
KeyScore score(const SolutionVector &s, const KeyVector &truth);
KeyScore score(const EnsembleSolution &e, const KeyVector &truth);

nlohmann::json to_json(const SolutionVector &s);
SolutionVector solution_from_json(const nlohmann::json &j);
nlohmann::json to_json(const EnsembleSolution &e);
nlohmann::json to_json(const KeyScore &s);

} // namespace locklab
