#include "locklab/truth.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace locklab {

Truth truth_cofactor0(Truth t, int var)
{
	Truth lo = t & ~kVarMask[var];
	return lo | (lo << (1u << var));
}

Truth truth_cofactor1(Truth t, int var)
{
	Truth hi = t & kVarMask[var];
	return hi | (hi >> (1u << var));
}

bool truth_depends(Truth t, int var) { return truth_cofactor0(t, var) != truth_cofactor1(t, var); }

Truth truth_swap(Truth t, int a, int b)
{
	if (a == b)
		return t;
	if (a > b)
		std::swap(a, b);
	const unsigned shift = (1u << b) - (1u << a);
	const Truth up = kVarMask[a] & ~kVarMask[b];
	const Truth down = ~kVarMask[a] & kVarMask[b];
	return (t & ~(up | down)) | ((t & up) << shift) | ((t & down) >> shift);
}

Truth truth_extend(Truth t, int vars)
{
	if (vars >= 6)
		return t;
	unsigned width = 1u << vars;
	t &= (Truth(1) << width) - 1;
	for (; width < 64; width *= 2)
		t |= t << width;
	return t;
}

namespace {

struct Cube {
	std::uint8_t pos = 0;
	std::uint8_t neg = 0;
};

/// Minato-Morreale irredundant sum of products for L <= f <= U.
Truth isop(Truth lower, Truth upper, int vars, std::vector<Cube> &cubes)
{
	if (lower == 0)
		return 0;
	if (upper == ~Truth(0)) {
		cubes.push_back({});
		return ~Truth(0);
	}
	int v = vars - 1;
	while (v >= 0 && !truth_depends(lower, v) && !truth_depends(upper, v))
		--v;
	if (v < 0) {
		// Only reachable with inconsistent bounds; fall back to the full lower set.
		cubes.push_back({});
		return ~Truth(0);
	}
	Truth l0 = truth_cofactor0(lower, v), l1 = truth_cofactor1(lower, v);
	Truth u0 = truth_cofactor0(upper, v), u1 = truth_cofactor1(upper, v);
	std::size_t start0 = cubes.size();
	Truth r0 = isop(l0 & ~u1, u0, v, cubes);
	for (std::size_t i = start0; i < cubes.size(); ++i)
		cubes[i].neg |= std::uint8_t(1u << v);
	std::size_t start1 = cubes.size();
	Truth r1 = isop(l1 & ~u0, u1, v, cubes);
	for (std::size_t i = start1; i < cubes.size(); ++i)
		cubes[i].pos |= std::uint8_t(1u << v);
	Truth rest = (l0 & ~r0) | (l1 & ~r1);
	Truth rs = isop(rest, u0 & u1, v, cubes);
	return (r0 & ~kVarMask[v]) | (r1 & kVarMask[v]) | rs;
}

class ProgramBuilder
{
      public:
	explicit ProgramBuilder(int inputs) { s_.inputs = inputs; }

	std::uint16_t input(int i, bool negated) const { return std::uint16_t(2 * (1 + i) + (negated ? 1 : 0)); }

	std::uint16_t conj(std::uint16_t a, std::uint16_t b)
	{
		if (a > b)
			std::swap(a, b);
		if (a == 0)
			return 0;
		if (a == 1)
			return b;
		if (a == b)
			return a;
		if ((a ^ 1) == b)
			return 0;
		auto key = std::make_pair(a, b);
		auto it = hash_.find(key);
		if (it != hash_.end())
			return it->second;
		s_.ands.push_back(key);
		auto lit = std::uint16_t(2 * (1 + s_.inputs + s_.ands.size() - 1));
		hash_.emplace(key, lit);
		return lit;
	}
	std::uint16_t disj(std::uint16_t a, std::uint16_t b) { return conj(a ^ 1, b ^ 1) ^ 1; }

	template <class F> std::uint16_t balanced(std::vector<std::uint16_t> lits, F op, std::uint16_t empty)
	{
		if (lits.empty())
			return empty;
		while (lits.size() > 1) {
			std::vector<std::uint16_t> next;
			for (std::size_t i = 0; i + 1 < lits.size(); i += 2)
				next.push_back(op(lits[i], lits[i + 1]));
			if (lits.size() % 2)
				next.push_back(lits.back());
			lits = std::move(next);
		}
		return lits.front();
	}

	std::vector<std::uint16_t> cube_literals(const Cube &c) const
	{
		std::vector<std::uint16_t> lits;
		for (int v = 0; v < s_.inputs; ++v) {
			if (c.pos >> v & 1)
				lits.push_back(input(v, false));
			if (c.neg >> v & 1)
				lits.push_back(input(v, true));
		}
		return lits;
	}

	std::uint16_t and_all(std::vector<std::uint16_t> lits)
	{
		return balanced(std::move(lits), [this](auto a, auto b) { return conj(a, b); }, 1);
	}
	std::uint16_t or_all(std::vector<std::uint16_t> lits)
	{
		return balanced(std::move(lits), [this](auto a, auto b) { return disj(a, b); }, 0);
	}

	std::uint16_t factor(std::vector<Cube> cubes)
	{
		if (cubes.empty())
			return 0;
		for (const Cube &c : cubes)
			if (c.pos == 0 && c.neg == 0)
				return 1;
		if (cubes.size() == 1)
			return and_all(cube_literals(cubes[0]));
		int best = -1, best_count = 1;
		for (int l = 0; l < 2 * s_.inputs; ++l) {
			int count = 0;
			for (const Cube &c : cubes)
				count += ((l & 1 ? c.neg : c.pos) >> (l / 2)) & 1;
			if (count > best_count) {
				best_count = count;
				best = l;
			}
		}
		if (best < 0) {
			std::vector<std::uint16_t> terms;
			for (const Cube &c : cubes)
				terms.push_back(and_all(cube_literals(c)));
			return or_all(terms);
		}
		std::vector<Cube> quotient, rest;
		for (const Cube &c : cubes) {
			bool has = ((best & 1 ? c.neg : c.pos) >> (best / 2)) & 1;
			(has ? quotient : rest).push_back(c);
		}
		Cube common{0xff, 0xff};
		for (const Cube &c : quotient) {
			common.pos &= c.pos;
			common.neg &= c.neg;
		}
		for (Cube &c : quotient) {
			c.pos &= ~common.pos;
			c.neg &= ~common.neg;
		}
		auto lits = cube_literals(common);
		lits.push_back(factor(quotient));
		std::uint16_t term = and_all(lits);
		if (rest.empty())
			return term;
		return disj(term, factor(rest));
	}

	Structure finish(std::uint16_t out)
	{
		s_.out = out;
		std::vector<int> level(s_.ands.size(), 0);
		auto lvl = [&](std::uint16_t l) { return l / 2 > s_.inputs ? level[l / 2 - 1 - s_.inputs] : 0; };
		for (std::size_t j = 0; j < s_.ands.size(); ++j)
			level[j] = 1 + std::max(lvl(s_.ands[j].first), lvl(s_.ands[j].second));
		s_.depth = lvl(out);
		// Drop nodes not reachable from the output.
		std::vector<char> live(s_.ands.size(), 0);
		if (out / 2 > s_.inputs)
			live[out / 2 - 1 - s_.inputs] = 1;
		for (std::size_t j = s_.ands.size(); j-- > 0;)
			if (live[j])
				for (auto l : {s_.ands[j].first, s_.ands[j].second})
					if (l / 2 > s_.inputs)
						live[l / 2 - 1 - s_.inputs] = 1;
		if (std::all_of(live.begin(), live.end(), [](char c) { return c; }))
			return s_;
		Structure t;
		t.inputs = s_.inputs;
		std::vector<std::uint16_t> remap(s_.ands.size());
		auto tr = [&](std::uint16_t l) {
			return l / 2 > s_.inputs ? std::uint16_t(remap[l / 2 - 1 - s_.inputs] ^ (l & 1)) : l;
		};
		for (std::size_t j = 0; j < s_.ands.size(); ++j)
			if (live[j]) {
				t.ands.push_back({tr(s_.ands[j].first), tr(s_.ands[j].second)});
				remap[j] = std::uint16_t(2 * (1 + t.inputs + t.ands.size() - 1));
			}
		t.out = tr(out);
		t.depth = s_.depth;
		return t;
	}

      private:
	Structure s_;
	std::map<std::pair<std::uint16_t, std::uint16_t>, std::uint16_t> hash_;
};

Structure factor_one(Truth t, int vars, bool complement)
{
	std::vector<Cube> cubes;
	Truth f = complement ? ~t : t;
	isop(f, f, vars, cubes);
	ProgramBuilder b(vars);
	std::uint16_t out = b.factor(cubes);
	return b.finish(complement ? out ^ 1 : out);
}

} // namespace

Structure factor_structure(Truth t, int vars)
{
	t = truth_extend(t, vars);
	Structure a = factor_one(t, vars, false);
	Structure b = factor_one(t, vars, true);
	if (b.size() < a.size() || (b.size() == a.size() && b.depth < a.depth))
		return b;
	return a;
}

const Structure &factor_structure_cached(Truth t, int vars)
{
	thread_local std::unordered_map<Truth, Structure> cache;
	t = truth_extend(t, vars);
	auto it = cache.find(t);
	if (it != cache.end())
		return it->second;
	if (cache.size() > (1u << 18))
		cache.clear();
	return cache.emplace(t, factor_structure(t, 6)).first->second;
}

AigLit instantiate(Aig &aig, const Structure &s, std::span<const AigLit> leaves)
{
	std::vector<AigLit> node(s.ands.size());
	auto tr = [&](std::uint16_t l) -> AigLit {
		std::uint32_t v = l / 2;
		AigLit base;
		if (v == 0)
			base = kAigFalse;
		else if (v <= static_cast<std::uint32_t>(s.inputs))
			base = v - 1 < leaves.size() ? leaves[v - 1] : kAigFalse;
		else
			base = node[v - 1 - s.inputs];
		return base ^ (l & 1);
	};
	for (std::size_t j = 0; j < s.ands.size(); ++j)
		node[j] = aig.make_and(tr(s.ands[j].first), tr(s.ands[j].second));
	return tr(s.out);
}

Truth evaluate(const Structure &s)
{
	std::vector<Truth> node(s.ands.size());
	auto tr = [&](std::uint16_t l) -> Truth {
		std::uint32_t v = l / 2;
		Truth base;
		if (v == 0)
			base = 0;
		else if (v <= static_cast<std::uint32_t>(s.inputs))
			base = kVarMask[v - 1];
		else
			base = node[v - 1 - s.inputs];
		return l & 1 ? ~base : base;
	};
	for (std::size_t j = 0; j < s.ands.size(); ++j)
		node[j] = tr(s.ands[j].first) & tr(s.ands[j].second);
	return tr(s.out);
}

const NpnTable &NpnTable::instance()
{
	static const NpnTable table;
	return table;
}

std::uint16_t NpnTable::apply(std::uint16_t f, const std::array<std::uint8_t, 4> &perm, std::uint8_t neg, bool out_neg)
{
	std::uint16_t g = 0;
	for (unsigned x = 0; x < 16; ++x) {
		unsigned y = 0;
		for (unsigned j = 0; j < 4; ++j)
			y |= (((x >> perm[j]) ^ (neg >> j)) & 1u) << j;
		unsigned bit = ((f >> y) & 1u) ^ (out_neg ? 1u : 0u);
		g |= std::uint16_t(bit << x);
	}
	return g;
}

NpnTable::NpnTable() : entries_(1u << 16), class_of_rep_(1u << 16, 0)
{
	std::array<std::uint8_t, 4> p{0, 1, 2, 3};
	do
		perms_.push_back(p);
	while (std::next_permutation(p.begin(), p.end()));
	std::vector<char> assigned(1u << 16, 0);
	for (std::uint32_t tt = 0; tt < (1u << 16); ++tt) {
		if (assigned[tt])
			continue;
		class_of_rep_[tt] = static_cast<std::uint32_t>(structures_.size());
		structures_.push_back(factor_structure(tt, 4));
		for (std::uint8_t pi = 0; pi < perms_.size(); ++pi)
			for (std::uint8_t neg = 0; neg < 16; ++neg)
				for (bool o : {false, true}) {
					std::uint16_t g = apply(static_cast<std::uint16_t>(tt), perms_[pi], neg, o);
					if (!assigned[g]) {
						assigned[g] = 1;
						entries_[g] = {static_cast<std::uint16_t>(tt), pi, neg, o};
					}
				}
	}
}

const Structure &NpnTable::structure(std::uint16_t tt) const { return structures_[class_of_rep_[entries_[tt].rep]]; }

AigLit NpnTable::instantiate(Aig &aig, std::uint16_t tt, std::span<const AigLit> leaves) const
{
	const Entry &e = entries_[tt];
	const auto &perm = perms_[e.perm];
	std::array<AigLit, 4> in{};
	for (unsigned j = 0; j < 4; ++j) {
		AigLit leaf = perm[j] < leaves.size() ? leaves[perm[j]] : kAigFalse;
		in[j] = leaf ^ ((e.neg >> j) & 1u);
	}
	return locklab::instantiate(aig, structure(tt), in) ^ (e.out_neg ? 1u : 0u);
}

} // namespace locklab
