#pragma once

#include "locklab/netlist.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace locklab {

class LockError : public std::runtime_error
{
      public:
	using std::runtime_error::runtime_error;
};

enum class LockScheme { Rll, AntiSat, CasLock, SfllPoint, Compound };

std::string_view to_string(LockScheme s);
LockScheme lock_scheme_from_string(std::string_view name);

/// Half-open range of key indices contributed by one scheme.
struct KeyRange {
	LockScheme scheme = LockScheme::Rll;
	std::size_t begin = 0;
	std::size_t end = 0;

	bool operator==(const KeyRange &) const = default;
};

struct LockRecord {
	LockScheme scheme = LockScheme::Rll;
	/// Covers only the key inputs added by this lock, in key order.
	KeyVector true_key;
	/// Point-function and tree schemes: the corrupted primary output.
	std::string protected_output;
	/// SfllPoint: hard-coded pattern over `compared_inputs`.
	std::vector<bool> protected_pattern;
	/// Primary inputs feeding the comparator or trees.
	std::vector<std::string> compared_inputs;
	/// RLL: nets that received a key gate, aligned with key bits.
	std::vector<std::string> insertion_sites;
	/// Tree schemes: gate kind per tree level, leaves first (And or Or).
	std::vector<GateKind> level_kinds;
	std::vector<KeyRange> key_ranges;
	std::uint64_t seed = 0;

	bool operator==(const LockRecord &) const = default;
};

struct LockResult {
	Netlist netlist;
	LockRecord record;
};

struct RllOptions {
	bool exclude_output_nets = true;
	/// Explicit sites; overrides sampling.
	std::vector<std::string> sites;
	/// Restrict sampling to these nets when non-empty.
	std::vector<std::string> pool;
	/// Explicit key bits; sampled otherwise.
	std::vector<bool> key;
};

struct TreeLockOptions {
	/// Protected output; sampled when empty.
	std::string output;
	/// CASLock level pattern; sampled when empty.
	std::vector<GateKind> level_kinds;
};

struct SfllOptions {
	std::string output;
	std::vector<bool> pattern;
};

/// XOR/XNOR key gates on `p` internal nets: XOR for key bit 0, XNOR for 1.
LockResult lock_rll(const Netlist &n, std::size_t p, std::uint64_t seed, const RllOptions &options = {});

/// AND-tree and NAND-tree over p/2 shared inputs, flip = AND(g, gbar) XORed into one output.
LockResult lock_antisat(const Netlist &n, std::size_t p, std::uint64_t seed, const TreeLockOptions &options = {});

/// As Anti-SAT with AND/OR alternating per tree level.
LockResult lock_caslock(const Netlist &n, std::size_t p, std::uint64_t seed, const TreeLockOptions &options = {});

/// Single-pattern perturb/restore point function on one output.
LockResult lock_sfll_point(const Netlist &n, std::size_t p, std::uint64_t seed, const SfllOptions &options = {});

/// SfllPoint followed by RLL on the original internal nets.
LockResult lock_compound(const Netlist &n, std::size_t p_rll, std::size_t p_sfll, std::uint64_t seed);

/// Unified entry used by the harness; `p2` is the SfllPoint width for Compound.
LockResult lock(const Netlist &n, LockScheme scheme, std::size_t p, std::size_t p2, std::uint64_t seed);

nlohmann::json to_json(const LockRecord &r);
LockRecord lock_record_from_json(const nlohmann::json &j);

} // namespace locklab
