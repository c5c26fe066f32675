#include "locklab/netlist.hpp"

#include <algorithm>
#include <array>
#include <queue>

namespace locklab {

namespace {

constexpr std::array<std::string_view, 11> kKindNames = {"AND", "OR",  "NAND", "NOR", "NOT",   "BUF",
							 "XOR", "XNOR", "MUX", "CONST0", "CONST1"};

} // namespace

std::string_view to_string(GateKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<GateKind> gate_kind_from_string(std::string_view name)
{
	std::string upper(name);
	std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
	if (upper == "BUFF")
		return GateKind::Buf;
	if (upper == "INV")
		return GateKind::Not;
	for (std::size_t i = 0; i < kKindNames.size(); ++i)
		if (kKindNames[i] == upper)
			return static_cast<GateKind>(i);
	return std::nullopt;
}

bool arity_ok(GateKind kind, std::size_t fanin_count)
{
	switch (kind) {
	case GateKind::Mux:
		return fanin_count == 3;
	case GateKind::Not:
	case GateKind::Buf:
		return fanin_count == 1;
	case GateKind::Const0:
	case GateKind::Const1:
		return fanin_count == 0;
	default:
		return fanin_count >= 2;
	}
}

ParseError::ParseError(const std::string &msg, std::size_t line, std::size_t column)
    : NetlistError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg), line_(line),
      column_(column)
{
}

std::string KeyVector::to_string() const
{
	std::string s;
	s.reserve(bits.size());
	for (bool b : bits)
		s.push_back(b ? '1' : '0');
	return s;
}

KeyVector KeyVector::from_string(std::string_view text)
{
	KeyVector k;
	for (char c : text) {
		if (c == '0' || c == '1')
			k.bits.push_back(c == '1');
		else if (c == '\n' || c == '\r' || c == ' ' || c == '\t')
			continue;
		else
			throw NetlistError(std::string("invalid key character '") + c + "'");
	}
	return k;
}

std::optional<NetId> Netlist::find_net(std::string_view name) const
{
	auto it = index_.find(std::string(name));
	if (it == index_.end())
		return std::nullopt;
	return it->second;
}

std::vector<std::vector<std::uint32_t>> Netlist::fanouts() const
{
	std::vector<std::vector<std::uint32_t>> result(net_count());
	for (std::uint32_t g = 0; g < gates_.size(); ++g)
		for (NetId f : gates_[g].fanins)
			result[f].push_back(g);
	return result;
}

std::vector<std::uint32_t> Netlist::fanout_counts() const
{
	std::vector<std::uint32_t> result(net_count(), 0);
	for (const Gate &g : gates_)
		for (NetId f : g.fanins)
			++result[f];
	for (NetId o : outputs_)
		++result[o];
	return result;
}

bool structurally_equal(const Netlist &a, const Netlist &b)
{
	auto same_names = [&](std::span<const NetId> x, std::span<const NetId> y) {
		if (x.size() != y.size())
			return false;
		for (std::size_t i = 0; i < x.size(); ++i)
			if (a.net_name(x[i]) != b.net_name(y[i]))
				return false;
		return true;
	};
	if (!same_names(a.primary_inputs(), b.primary_inputs()) || !same_names(a.key_inputs(), b.key_inputs()) ||
	    !same_names(a.primary_outputs(), b.primary_outputs()) || a.gates().size() != b.gates().size())
		return false;
	for (std::size_t i = 0; i < a.gates().size(); ++i) {
		const Gate &ga = a.gate(i);
		const Gate &gb = b.gate(i);
		if (ga.kind != gb.kind || a.net_name(ga.output) != b.net_name(gb.output) ||
		    ga.fanins.size() != gb.fanins.size())
			return false;
		for (std::size_t j = 0; j < ga.fanins.size(); ++j)
			if (a.net_name(ga.fanins[j]) != b.net_name(gb.fanins[j]))
				return false;
	}
	return true;
}

NetId NetlistBuilder::net(std::string_view name)
{
	auto it = index_.find(std::string(name));
	if (it != index_.end())
		return it->second;
	NetId id = static_cast<NetId>(names_.size());
	names_.emplace_back(name);
	index_.emplace(names_.back(), id);
	return id;
}

bool NetlistBuilder::has_net(std::string_view name) const { return index_.count(std::string(name)) != 0; }

NetlistBuilder &NetlistBuilder::add_input(std::string_view name)
{
	inputs_.push_back(net(name));
	return *this;
}

NetlistBuilder &NetlistBuilder::add_key_input(std::string_view name)
{
	keys_.push_back(net(name));
	return *this;
}

NetlistBuilder &NetlistBuilder::add_output(std::string_view name)
{
	outputs_.push_back(net(name));
	return *this;
}

NetlistBuilder &NetlistBuilder::add_gate(std::string_view output, GateKind kind, const std::vector<std::string> &fanins)
{
	std::vector<NetId> ids;
	ids.reserve(fanins.size());
	for (const auto &f : fanins)
		ids.push_back(net(f));
	return add_gate(net(output), kind, std::move(ids));
}

NetlistBuilder &NetlistBuilder::add_gate(NetId output, GateKind kind, std::vector<NetId> fanins)
{
	gates_.push_back(Gate{output, kind, std::move(fanins)});
	return *this;
}

std::string NetlistBuilder::fresh_name(std::string_view stem)
{
	for (;;) {
		std::string candidate = std::string(stem) + "_" + std::to_string(fresh_counter_++);
		if (!has_net(candidate))
			return candidate;
	}
}

Netlist NetlistBuilder::build() &&
{
	Netlist n;
	const std::size_t count = names_.size();
	n.names_ = std::move(names_);
	n.index_ = std::move(index_);
	n.inputs_ = std::move(inputs_);
	n.keys_ = std::move(keys_);
	n.outputs_ = std::move(outputs_);
	n.gates_ = std::move(gates_);
	n.driver_.assign(count, -1);
	n.role_.assign(count, Netlist::Role::Internal);

	for (NetId id : n.inputs_) {
		if (n.role_[id] != Netlist::Role::Internal)
			throw NetlistError("net '" + n.names_[id] + "' declared as input twice");
		n.role_[id] = Netlist::Role::Input;
	}
	for (NetId id : n.keys_) {
		if (n.role_[id] == Netlist::Role::Input)
			throw NetlistError("key input '" + n.names_[id] + "' is also a primary input");
		if (n.role_[id] == Netlist::Role::Key)
			throw NetlistError("key input '" + n.names_[id] + "' declared twice");
		n.role_[id] = Netlist::Role::Key;
	}
	for (std::size_t g = 0; g < n.gates_.size(); ++g) {
		const Gate &gate = n.gates_[g];
		if (!arity_ok(gate.kind, gate.fanins.size()))
			throw NetlistError("gate '" + n.names_[gate.output] + "' of kind " + std::string(to_string(gate.kind)) +
					   " has invalid fanin count " + std::to_string(gate.fanins.size()));
		if (n.role_[gate.output] != Netlist::Role::Internal)
			throw NetlistError("input net '" + n.names_[gate.output] + "' is driven by a gate");
		if (n.driver_[gate.output] != -1)
			throw NetlistError("net '" + n.names_[gate.output] + "' has more than one driver");
		n.driver_[gate.output] = static_cast<int>(g);
	}
	auto driven = [&](NetId id) { return n.role_[id] != Netlist::Role::Internal || n.driver_[id] != -1; };
	for (const Gate &gate : n.gates_)
		for (NetId f : gate.fanins)
			if (!driven(f))
				throw NetlistError("net '" + n.names_[f] + "' is used but never driven");
	for (NetId o : n.outputs_)
		if (!driven(o))
			throw NetlistError("primary output '" + n.names_[o] + "' is not driven");

	// Kahn's algorithm over gates, stable with respect to construction order.
	std::vector<std::uint32_t> pending(n.gates_.size(), 0);
	std::vector<std::vector<std::uint32_t>> users(count);
	for (std::uint32_t g = 0; g < n.gates_.size(); ++g)
		for (NetId f : n.gates_[g].fanins)
			if (n.driver_[f] != -1) {
				++pending[g];
				users[f].push_back(g);
			}
	std::priority_queue<std::uint32_t, std::vector<std::uint32_t>, std::greater<>> ready;
	for (std::uint32_t g = 0; g < n.gates_.size(); ++g)
		if (pending[g] == 0)
			ready.push(g);
	n.topo_.reserve(n.gates_.size());
	while (!ready.empty()) {
		std::uint32_t g = ready.top();
		ready.pop();
		n.topo_.push_back(g);
		for (std::uint32_t u : users[n.gates_[g].output])
			if (--pending[u] == 0)
				ready.push(u);
	}
	if (n.topo_.size() != n.gates_.size()) {
		for (std::uint32_t g = 0; g < n.gates_.size(); ++g)
			if (pending[g] != 0)
				throw NetlistError("combinational cycle through net '" + n.names_[n.gates_[g].output] + "'");
	}
	return n;
}

NetlistBuilder to_builder(const Netlist &n)
{
	NetlistBuilder b;
	for (NetId id = 0; id < n.net_count(); ++id)
		b.net(n.net_name(id));
	for (NetId id : n.primary_inputs())
		b.add_input(n.net_name(id));
	for (NetId id : n.key_inputs())
		b.add_key_input(n.net_name(id));
	for (NetId id : n.primary_outputs())
		b.add_output(n.net_name(id));
	for (const Gate &g : n.gates())
		b.add_gate(g.output, g.kind, g.fanins);
	return b;
}

} // namespace locklab
