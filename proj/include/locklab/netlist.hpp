#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace locklab {

enum class GateKind : std::uint8_t { And, Or, Nand, Nor, Not, Buf, Xor, Xnor, Mux, Const0, Const1 };

std::string_view to_string(GateKind kind);
std::optional<GateKind> gate_kind_from_string(std::string_view name);

/// True when a gate of this kind may have `fanin_count` inputs.
/// MUX takes (select, data0, data1).
bool arity_ok(GateKind kind, std::size_t fanin_count);

inline bool is_const(GateKind k) { return k == GateKind::Const0 || k == GateKind::Const1; }

using NetId = std::uint32_t;

struct Gate {
	NetId output;
	GateKind kind;
	std::vector<NetId> fanins;
};

class NetlistError : public std::runtime_error
{
      public:
	using std::runtime_error::runtime_error;
};

class ParseError : public NetlistError
{
      public:
	ParseError(const std::string &msg, std::size_t line, std::size_t column);
	std::size_t line() const { return line_; }
	std::size_t column() const { return column_; }

      private:
	std::size_t line_;
	std::size_t column_;
};

/// Ordered key bits aligned with a netlist's key inputs.
struct KeyVector {
	std::vector<bool> bits;

	std::size_t size() const { return bits.size(); }
	bool operator==(const KeyVector &) const = default;

	/// One character per bit, index 0 first.
	std::string to_string() const;
	static KeyVector from_string(std::string_view text);
};

/**
 * Immutable combinational gate-level netlist.
 *
 * Nets are identified by dense ids. Every net is a primary input, a key input
 * or the output of exactly one gate. Gates keep their construction order; a
 * topological order is computed once when the netlist is built.
 */
class Netlist
{
      public:
	Netlist() = default;

	std::size_t net_count() const { return names_.size(); }
	const std::string &net_name(NetId id) const { return names_[id]; }
	std::optional<NetId> find_net(std::string_view name) const;

	std::span<const NetId> primary_inputs() const { return inputs_; }
	std::span<const NetId> key_inputs() const { return keys_; }
	std::span<const NetId> primary_outputs() const { return outputs_; }
	std::span<const Gate> gates() const { return gates_; }
	const Gate &gate(std::size_t index) const { return gates_[index]; }

	/// Gate indices in topological order (fanins before fanouts).
	std::span<const std::uint32_t> topo_order() const { return topo_; }

	/// Index of the gate driving `net`, or -1 for primary and key inputs.
	int driver(NetId net) const { return driver_[net]; }
	bool is_key(NetId net) const { return role_[net] == Role::Key; }
	bool is_input(NetId net) const { return role_[net] == Role::Input; }

	std::size_t key_count() const { return keys_.size(); }

	/// Gate indices reading each net, plus the number of primary-output references.
	std::vector<std::vector<std::uint32_t>> fanouts() const;
	std::vector<std::uint32_t> fanout_counts() const;

      private:
	friend class NetlistBuilder;
	enum class Role : std::uint8_t { Internal, Input, Key };

	std::vector<std::string> names_;
	std::unordered_map<std::string, NetId> index_;
	std::vector<NetId> inputs_;
	std::vector<NetId> keys_;
	std::vector<NetId> outputs_;
	std::vector<Gate> gates_;
	std::vector<std::uint32_t> topo_;
	std::vector<int> driver_;
	std::vector<Role> role_;
};

/// Two netlists are structurally equal when interface names and the ordered
/// gate list (output name, kind, fanin names) coincide.
bool structurally_equal(const Netlist &a, const Netlist &b);

/**
 * Incremental construction of a Netlist; `build` validates all invariants
 * and throws NetlistError on violation.
 */
class NetlistBuilder
{
      public:
	NetId net(std::string_view name);
	bool has_net(std::string_view name) const;

	NetlistBuilder &add_input(std::string_view name);
	NetlistBuilder &add_key_input(std::string_view name);
	NetlistBuilder &add_output(std::string_view name);
	NetlistBuilder &add_gate(std::string_view output, GateKind kind, const std::vector<std::string> &fanins);
	NetlistBuilder &add_gate(NetId output, GateKind kind, std::vector<NetId> fanins);

	/// Returns a name not yet used in this builder, derived from `stem`.
	std::string fresh_name(std::string_view stem);

	Netlist build() &&;

      private:
	std::vector<std::string> names_;
	std::unordered_map<std::string, NetId> index_;
	std::vector<NetId> inputs_;
	std::vector<NetId> keys_;
	std::vector<NetId> outputs_;
	std::vector<Gate> gates_;
	std::uint64_t fresh_counter_ = 0;
};

/// Copies interface and gates of `n` into a builder for derivation.
NetlistBuilder to_builder(const Netlist &n);

struct BenchOptions {
	std::string key_prefix = "keyinput";
};

Netlist parse_bench(std::string_view text, const BenchOptions &options = {});
std::string write_bench(const Netlist &n);

Netlist read_bench_file(const std::string &path, const BenchOptions &options = {});
void write_bench_file(const std::string &path, const Netlist &n);

} // namespace locklab
