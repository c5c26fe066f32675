#pragma once

#include "locklab/netlist.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace locklab {

/// Evaluates the netlist on one input vector; returns primary output values.
/// Throws NetlistError on length mismatch.
std::vector<bool> simulate(const Netlist &n, const std::vector<bool> &inputs, const KeyVector &key = {});

/**
 * 64-way bit-parallel simulation. `inputs[i]` and `keys[j]` hold 64 patterns
 * each for primary input i and key input j. Returns one word per net,
 * indexed by NetId.
 */
std::vector<std::uint64_t> simulate_words(const Netlist &n, std::span<const std::uint64_t> inputs,
					  std::span<const std::uint64_t> keys);

/// Output words only, in primary-output order.
std::vector<std::uint64_t> simulate_output_words(const Netlist &n, std::span<const std::uint64_t> inputs,
						 std::span<const std::uint64_t> keys);

std::uint64_t eval_gate_word(GateKind kind, std::span<const std::uint64_t> fanins);

/// Uniform random 64-bit words from a seeded engine.
std::vector<std::uint64_t> random_words(std::mt19937_64 &rng, std::size_t count);

} // namespace locklab
