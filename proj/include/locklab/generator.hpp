#pragma once

#include "locklab/netlist.hpp"

#include <cstdint>

namespace locklab {

struct RandomCircuitSpec {
	std::size_t inputs = 16;
	std::size_t outputs = 4;
	std::size_t gates = 100;
	std::size_t max_fanin = 3;
	/// Probability of drawing XOR/XNOR when picking a gate kind.
	double xor_fraction = 0.05;
	/// Probability of drawing a MUX.
	double mux_fraction = 0.03;
	/// Fanins are drawn from the most recent `window` nets with probability `locality`.
	std::size_t window = 32;
	double locality = 0.4;
	std::uint64_t seed = 1;
};

/// Seeded random combinational DAG in which every gate reaches some output.
Netlist random_circuit(const RandomCircuitSpec &spec);

/// 3-input majority: three 2-input ANDs feeding a 3-input OR.
Netlist majority_circuit();

/// Majority locked with XOR on t1 (keyinput0) and XNOR on t2 (keyinput1); correct key 01.
Netlist locked_majority_circuit();

/// ISCAS-85 c17.
Netlist c17_circuit();

} // namespace locklab
