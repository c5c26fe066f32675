#pragma once

#include "locklab/aig.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace locklab {

/// Truth tables of up to six variables packed in one word; variable i
/// toggles every 2^i bits.
using Truth = std::uint64_t;

constexpr std::array<Truth, 6> kVarMask = {0xAAAAAAAAAAAAAAAAULL, 0xCCCCCCCCCCCCCCCCULL, 0xF0F0F0F0F0F0F0F0ULL,
					   0xFF00FF00FF00FF00ULL, 0xFFFF0000FFFF0000ULL, 0xFFFFFFFF00000000ULL};

Truth truth_cofactor0(Truth t, int var);
Truth truth_cofactor1(Truth t, int var);
bool truth_depends(Truth t, int var);
Truth truth_swap(Truth t, int a, int b);
/// Replicates the low 2^vars bits across the word.
Truth truth_extend(Truth t, int vars);

/**
 * Small AND-inverter program over `inputs` variables. Literals: 0/1 are
 * constants, 2*(1+i) is input i, 2*(1+inputs+j) is AND node j.
 */
struct Structure {
	int inputs = 0;
	std::vector<std::pair<std::uint16_t, std::uint16_t>> ands;
	std::uint16_t out = 0;
	int depth = 0;

	std::size_t size() const { return ands.size(); }
};

/// Factored irredundant sum of products of `t` or of its complement, whichever
/// needs fewer AND nodes.
Structure factor_structure(Truth t, int vars);

/// Cached variant for cut resynthesis; safe to call from several threads.
const Structure &factor_structure_cached(Truth t, int vars);

/// Emits `s` into `aig` with the given input literals.
AigLit instantiate(Aig &aig, const Structure &s, std::span<const AigLit> leaves);

/// Evaluates `s` as a truth table (used for checking).
Truth evaluate(const Structure &s);

/**
 * NPN classification of all 4-input functions. Each function f is
 * f(x) = o XOR r(y) with y_j = x_perm[j] XOR n_j for its class representative r.
 */
class NpnTable
{
      public:
	struct Entry {
		std::uint16_t rep;
		std::uint8_t perm;
		std::uint8_t neg;
		bool out_neg;
	};

	static const NpnTable &instance();

	const Entry &entry(std::uint16_t tt) const { return entries_[tt]; }
	std::size_t class_count() const { return structures_.size(); }
	const std::array<std::uint8_t, 4> &permutation(std::uint8_t index) const { return perms_[index]; }
	/// Structure of the representative of tt's class.
	const Structure &structure(std::uint16_t tt) const;
	/// Applies a transform to a representative.
	static std::uint16_t apply(std::uint16_t f, const std::array<std::uint8_t, 4> &perm, std::uint8_t neg, bool out_neg);

	/// Builds tt's function over the given four leaves.
	AigLit instantiate(Aig &aig, std::uint16_t tt, std::span<const AigLit> leaves) const;

      private:
	NpnTable();

	std::vector<Entry> entries_;
	std::vector<std::array<std::uint8_t, 4>> perms_;
	std::vector<std::uint32_t> class_of_rep_;
	std::vector<Structure> structures_;
};

} // namespace locklab
