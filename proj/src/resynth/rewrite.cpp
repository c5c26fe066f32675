#include "locklab/synth_passes.hpp"
#include "locklab/truth.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <limits>

namespace locklab {

namespace {

constexpr int kCutSize = 4;
constexpr int kRefactorSize = 6;
constexpr int kInf = std::numeric_limits<int>::max() / 4;

struct Cut {
	std::array<std::uint32_t, kRefactorSize> leaf{};
	std::uint8_t size = 0;
	bool factored = false;
	Truth tt = 0;
	const Structure *structure = nullptr;
	double flow = 0.0;
	int arrival = 0;
	std::uint64_t tie = 0;
};

std::uint64_t mix(std::uint64_t x)
{
	x ^= x >> 30;
	x *= 0xbf58476d1ce4e5b9ULL;
	x ^= x >> 27;
	x *= 0x94d049bb133111ebULL;
	x ^= x >> 31;
	return x;
}

bool merge_leaves(const Cut &a, const Cut &b, Cut &out)
{
	int i = 0, j = 0, k = 0;
	while (i < a.size || j < b.size) {
		std::uint32_t v;
		if (j >= b.size || (i < a.size && a.leaf[i] < b.leaf[j]))
			v = a.leaf[i++];
		else if (i >= a.size || b.leaf[j] < a.leaf[i])
			v = b.leaf[j++];
		else {
			v = a.leaf[i++];
			++j;
		}
		if (k == kCutSize)
			return false;
		out.leaf[k++] = v;
	}
	out.size = static_cast<std::uint8_t>(k);
	return true;
}

Truth stretch(const Cut &sub, const Cut &to)
{
	Truth t = sub.tt;
	for (int i = sub.size - 1; i >= 0; --i) {
		int pos = static_cast<int>(std::find(to.leaf.begin(), to.leaf.begin() + to.size, sub.leaf[i]) - to.leaf.begin());
		t = truth_swap(t, i, pos);
	}
	return t;
}

bool better_area(const Cut &a, const Cut &b)
{
	if (std::abs(a.flow - b.flow) > 1e-9)
		return a.flow < b.flow;
	if (a.arrival != b.arrival)
		return a.arrival < b.arrival;
	return a.tie < b.tie;
}

bool better_delay(const Cut &a, const Cut &b)
{
	if (a.arrival != b.arrival)
		return a.arrival < b.arrival;
	return better_area(a, b);
}

class CutEngine
{
      public:
	CutEngine(const Aig &aig, const CutParams &p)
	    : aig_(aig), p_(p), npn_(NpnTable::instance()), refs_(aig.fanout_counts()), cuts_(aig.node_count()),
	      cands_(aig.node_count()), flow_(aig.node_count(), 0.0), arrival_(aig.node_count(), 0),
	      choice_(aig.node_count(), -1)
	{
	}

	Aig run()
	{
		for (std::uint32_t n = 0; n < aig_.node_count(); ++n)
			evaluate(n);
		select();
		return rebuild();
	}

      private:
	bool allowed(std::uint32_t n) const { return p_.restrict.empty() || p_.restrict[n]; }
	bool timed(std::uint32_t n) const { return p_.delay && (p_.critical.empty() || p_.critical[n]); }

	Cut trivial(std::uint32_t n) const
	{
		Cut c;
		c.leaf[0] = n;
		c.size = 1;
		c.tt = kVarMask[0];
		return c;
	}

	void cost(std::uint32_t node, Cut &c)
	{
		if (!c.factored)
			c.structure = &npn_.structure(static_cast<std::uint16_t>(c.tt & 0xffff));
		c.flow = static_cast<double>(c.structure->size());
		int arr = 0;
		std::uint64_t h = p_.seed ^ (std::uint64_t(node) << 20);
		for (int i = 0; i < c.size; ++i) {
			c.flow += flow_[c.leaf[i]] / std::max<std::uint32_t>(1, refs_[c.leaf[i]]);
			arr = std::max(arr, arrival_[c.leaf[i]]);
			h = mix(h ^ c.leaf[i]);
		}
		c.arrival = arr + c.structure->depth;
		c.tie = p_.seed_ties ? h : 0;
	}

	void evaluate(std::uint32_t n)
	{
		cuts_[n].push_back(trivial(n));
		if (!aig_.is_and(n))
			return;
		AigLit f0 = aig_.fanin0(n), f1 = aig_.fanin1(n);
		const auto &c0 = cuts_[aig_node(f0)];
		const auto &c1 = cuts_[aig_node(f1)];
		std::vector<Cut> &cand = cands_[n];
		const bool open = allowed(n);
		for (std::size_t i = 0; i < c0.size(); ++i)
			for (std::size_t j = 0; j < c1.size(); ++j) {
				if (!open && (i != 0 || j != 0))
					continue;
				Cut c;
				if (!merge_leaves(c0[i], c1[j], c))
					continue;
				Truth t0 = stretch(c0[i], c), t1 = stretch(c1[j], c);
				if (aig_compl(f0))
					t0 = ~t0;
				if (aig_compl(f1))
					t1 = ~t1;
				c.tt = t0 & t1;
				bool dup = false;
				for (const Cut &d : cand)
					if (!d.factored && d.size == c.size && std::equal(d.leaf.begin(), d.leaf.begin() + d.size, c.leaf.begin())) {
						dup = true;
						break;
					}
				if (dup)
					continue;
				cost(n, c);
				cand.push_back(c);
			}
		if (open && p_.refactor) {
			Cut c = reconvergent_cut(n);
			if (c.size > 0) {
				c.factored = true;
				c.structure = &factor_structure_cached(c.tt, kRefactorSize);
				cost(n, c);
				cand.push_back(c);
			}
		}
		// Estimates: best achievable flow and arrival at this node.
		const Cut *best_flow = &cand.front();
		const Cut *best_arr = &cand.front();
		for (const Cut &c : cand) {
			if (better_area(c, *best_flow))
				best_flow = &c;
			if (better_delay(c, *best_arr))
				best_arr = &c;
		}
		flow_[n] = timed(n) ? best_arr->flow : best_flow->flow;
		arrival_[n] = timed(n) ? best_arr->arrival : best_flow->arrival;

		// Priority cuts propagated to fanouts: the fanin cut always survives.
		std::vector<const Cut *> order;
		for (const Cut &c : cand)
			if (!c.factored)
				order.push_back(&c);
		std::stable_sort(order.begin() + 1, order.end(), [&](const Cut *a, const Cut *b) {
			return timed(n) ? better_delay(*a, *b) : better_area(*a, *b);
		});
		for (std::size_t i = 0; i < order.size() && i < p_.cut_limit; ++i)
			cuts_[n].push_back(*order[i]);
	}

	Cut reconvergent_cut(std::uint32_t n) const
	{
		std::vector<std::uint32_t> leaves{aig_node(aig_.fanin0(n)), aig_node(aig_.fanin1(n))};
		if (leaves[0] == leaves[1])
			leaves.pop_back();
		std::vector<std::uint32_t> cone{n};
		auto inside = [&](std::uint32_t x) {
			return std::find(leaves.begin(), leaves.end(), x) != leaves.end() ||
			       std::find(cone.begin(), cone.end(), x) != cone.end();
		};
		for (;;) {
			int best = -1, best_cost = kInf;
			for (std::size_t i = 0; i < leaves.size(); ++i) {
				std::uint32_t l = leaves[i];
				if (!aig_.is_and(l))
					continue;
				int c = -1;
				for (AigLit f : {aig_.fanin0(l), aig_.fanin1(l)})
					if (!inside(aig_node(f)))
						++c;
				if (aig_node(aig_.fanin0(l)) == aig_node(aig_.fanin1(l)) && !inside(aig_node(aig_.fanin0(l))))
					--c;
				if (static_cast<int>(leaves.size()) + c <= kRefactorSize &&
				    (c < best_cost || (c == best_cost && l > leaves[best])))
					best = static_cast<int>(i), best_cost = c;
			}
			if (best < 0)
				break;
			std::uint32_t l = leaves[best];
			leaves.erase(leaves.begin() + best);
			cone.push_back(l);
			for (AigLit f : {aig_.fanin0(l), aig_.fanin1(l)})
				if (!inside(aig_node(f)))
					leaves.push_back(aig_node(f));
		}
		Cut c;
		if (leaves.size() < 3)
			return c;
		std::sort(leaves.begin(), leaves.end());
		std::sort(cone.begin(), cone.end());
		for (std::size_t i = 0; i < leaves.size(); ++i)
			c.leaf[i] = leaves[i];
		c.size = static_cast<std::uint8_t>(leaves.size());
		std::vector<std::pair<std::uint32_t, Truth>> value;
		for (std::size_t i = 0; i < leaves.size(); ++i)
			value.push_back({leaves[i], kVarMask[i]});
		auto get = [&](AigLit l) {
			for (auto &[k, v] : value)
				if (k == aig_node(l))
					return aig_compl(l) ? ~v : v;
			return Truth(0);
		};
		for (std::uint32_t x : cone)
			value.push_back({x, get(aig_.fanin0(x)) & get(aig_.fanin1(x))});
		c.tt = value.back().second;
		return c;
	}

	void select()
	{
		for (std::uint32_t n = 0; n < aig_.node_count(); ++n) {
			if (!aig_.is_and(n))
				continue;
			const auto &cand = cands_[n];
			int best = 0;
			for (int i = 1; i < static_cast<int>(cand.size()); ++i)
				if (timed(n) ? better_delay(cand[i], cand[best]) : better_area(cand[i], cand[best]))
					best = i;
			choice_[n] = best;
		}
		if (!p_.delay)
			return;
		// Area recovery under required times, top-down over the cover.
		int achieved = 0;
		for (AigLit o : aig_.outputs())
			achieved = std::max(achieved, arrival_[aig_node(o)]);
		const int required_out = std::max(achieved, p_.target_depth);
		std::vector<int> required(aig_.node_count(), kInf);
		for (AigLit o : aig_.outputs())
			required[aig_node(o)] = required_out;
		for (std::uint32_t n = static_cast<std::uint32_t>(aig_.node_count()); n-- > 0;) {
			if (!aig_.is_and(n) || required[n] == kInf)
				continue;
			const auto &cand = cands_[n];
			int best = -1;
			for (int i = 0; i < static_cast<int>(cand.size()); ++i) {
				if (cand[i].arrival > required[n])
					continue;
				if (best < 0 || better_area(cand[i], cand[best]))
					best = i;
			}
			if (best < 0)
				best = choice_[n];
			choice_[n] = best;
			const Cut &c = cand[best];
			for (int i = 0; i < c.size; ++i)
				required[c.leaf[i]] = std::min(required[c.leaf[i]], required[n] - c.structure->depth);
		}
	}

	Aig rebuild()
	{
		Aig out;
		std::vector<AigLit> map(aig_.node_count(), kAigFalse);
		std::vector<char> done(aig_.node_count(), 0);
		done[0] = 1;
		for (std::size_t i = 1; i <= aig_.input_count(); ++i) {
			map[i] = out.add_input();
			done[i] = 1;
		}
		// Iterative post-order to stay clear of deep recursion on long chains.
		std::vector<std::pair<std::uint32_t, bool>> stack;
		auto build = [&](std::uint32_t root) {
			stack.push_back({root, false});
			while (!stack.empty()) {
				auto [n, expanded] = stack.back();
				stack.pop_back();
				if (done[n])
					continue;
				const Cut &c = cands_[n][choice_[n]];
				if (!expanded) {
					stack.push_back({n, true});
					for (int i = 0; i < c.size; ++i)
						if (!done[c.leaf[i]])
							stack.push_back({c.leaf[i], false});
					continue;
				}
				std::array<AigLit, kRefactorSize> leaves{};
				for (int i = 0; i < c.size; ++i)
					leaves[i] = map[c.leaf[i]];
				std::span<const AigLit> in(leaves.data(), c.size);
				map[n] = c.factored ? instantiate(out, *c.structure, in)
						    : npn_.instantiate(out, static_cast<std::uint16_t>(c.tt & 0xffff), in);
				done[n] = 1;
			}
		};
		for (AigLit o : aig_.outputs())
			build(aig_node(o));
		for (AigLit o : aig_.outputs())
			out.add_output(map[aig_node(o)] ^ (o & 1));
		return out.cleanup();
	}

	const Aig &aig_;
	const CutParams &p_;
	const NpnTable &npn_;
	std::vector<std::uint32_t> refs_;
	std::vector<std::vector<Cut>> cuts_;
	std::vector<std::vector<Cut>> cands_;
	std::vector<double> flow_;
	std::vector<int> arrival_;
	std::vector<int> choice_;
};

} // namespace

Aig cut_resynthesize(const Aig &aig, const CutParams &params) { return CutEngine(aig, params).run(); }

Aig rewrite_pass(const Aig &aig, const CutParams &params)
{
	Aig cand = cut_resynthesize(aig, params);
	if (params.delay) {
		int d0 = aig.depth(), d1 = cand.depth();
		if (d1 < d0 || (d1 == d0 && cand.and_count() <= aig.and_count()))
			return cand;
		return aig;
	}
	if (cand.and_count() <= aig.and_count())
		return cand;
	return aig;
}

std::vector<char> critical_nodes(const Aig &aig, int target)
{
	auto level = aig.levels();
	std::vector<int> tail(aig.node_count(), -1);
	for (AigLit o : aig.outputs())
		tail[aig_node(o)] = 0;
	std::vector<char> out(aig.node_count(), 0);
	for (std::uint32_t n = static_cast<std::uint32_t>(aig.node_count()); n-- > 0;) {
		if (tail[n] < 0)
			continue;
		out[n] = level[n] + tail[n] > target;
		if (aig.is_and(n))
			for (AigLit f : {aig.fanin0(n), aig.fanin1(n)})
				tail[aig_node(f)] = std::max(tail[aig_node(f)], tail[n] + 1);
	}
	return out;
}

Aig generic_round(const Aig &aig, bool deep) { return aig.cleanup(deep); }

} // namespace locklab
