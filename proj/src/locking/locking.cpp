#include "locklab/locking.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <unordered_map>

namespace locklab {

namespace {

constexpr std::uint64_t kSeedMix = 0x9e3779b97f4a7c15ULL;

/// Copies a netlist while allowing selected nets to be re-driven by new logic.
/// A tapped net keeps its name and users; its original driver moves to a fresh name.
class Editor
{
      public:
	explicit Editor(const Netlist &n) : n_(n)
	{
		for (NetId id = 0; id < n.net_count(); ++id)
			b_.net(n.net_name(id));
		for (NetId id : n.primary_inputs())
			b_.add_input(n.net_name(id));
		for (NetId id : n.key_inputs())
			b_.add_key_input(n.net_name(id));
		for (NetId id : n.primary_outputs())
			b_.add_output(n.net_name(id));
	}

	/// Returns the new name carrying the original value of `net`.
	std::string tap(NetId net)
	{
		if (n_.driver(net) < 0)
			throw LockError("cannot re-drive input net '" + n_.net_name(net) + "'");
		auto [it, fresh] = renamed_.try_emplace(net, "");
		if (fresh)
			it->second = b_.fresh_name(n_.net_name(net) + "_lk");
		return it->second;
	}

	std::string add_key(std::size_t index)
	{
		std::string name = "keyinput" + std::to_string(index);
		if (n_.find_net(name))
			throw LockError("key input name '" + name + "' already in use");
		b_.add_key_input(name);
		return name;
	}

	std::string gate(std::string_view stem, GateKind kind, std::vector<std::string> fanins)
	{
		std::string out = b_.fresh_name(stem);
		b_.net(out);
		extra_.push_back({out, kind, std::move(fanins)});
		return out;
	}

	void gate_named(const std::string &out, GateKind kind, std::vector<std::string> fanins)
	{
		extra_.push_back({out, kind, std::move(fanins)});
	}

	Netlist finish() &&
	{
		for (const Gate &g : n_.gates()) {
			std::vector<std::string> f;
			for (NetId x : g.fanins)
				f.push_back(n_.net_name(x));
			auto it = renamed_.find(g.output);
			b_.add_gate(it == renamed_.end() ? n_.net_name(g.output) : it->second, g.kind, f);
		}
		for (auto &e : extra_)
			b_.add_gate(e.out, e.kind, e.fanins);
		return std::move(b_).build();
	}

      private:
	struct Pending {
		std::string out;
		GateKind kind;
		std::vector<std::string> fanins;
	};
	const Netlist &n_;
	NetlistBuilder b_;
	std::unordered_map<NetId, std::string> renamed_;
	std::vector<Pending> extra_;
};

/// Partial Fisher-Yates; the result order follows the draw.
template <class T> std::vector<T> sample(std::vector<T> pool, std::size_t k, std::mt19937_64 &rng)
{
	for (std::size_t i = 0; i < k; ++i) {
		std::size_t j = i + rng() % (pool.size() - i);
		std::swap(pool[i], pool[j]);
	}
	pool.resize(k);
	return pool;
}

/// Primary inputs in the transitive fanin of `net`, in primary-input order.
std::vector<NetId> support(const Netlist &n, NetId net)
{
	std::vector<char> seen(n.net_count(), 0);
	std::vector<NetId> stack{net};
	seen[net] = 1;
	while (!stack.empty()) {
		NetId x = stack.back();
		stack.pop_back();
		int d = n.driver(x);
		if (d < 0)
			continue;
		for (NetId f : n.gate(d).fanins)
			if (!seen[f]) {
				seen[f] = 1;
				stack.push_back(f);
			}
	}
	std::vector<NetId> out;
	for (NetId pi : n.primary_inputs())
		if (seen[pi])
			out.push_back(pi);
	return out;
}

/// Picks a gate-driven output with at least `need` support inputs, then `need`
/// of those inputs.
std::pair<NetId, std::vector<NetId>> choose_protected(const Netlist &n, std::size_t need, const std::string &requested,
						      std::mt19937_64 &rng)
{
	std::vector<NetId> candidates;
	if (!requested.empty()) {
		auto id = n.find_net(requested);
		if (!id || std::find(n.primary_outputs().begin(), n.primary_outputs().end(), *id) == n.primary_outputs().end())
			throw LockError("'" + requested + "' is not a primary output");
		candidates.push_back(*id);
	} else {
		for (NetId o : n.primary_outputs())
			if (n.driver(o) >= 0 && std::find(candidates.begin(), candidates.end(), o) == candidates.end())
				candidates.push_back(o);
	}
	std::vector<NetId> eligible;
	for (NetId o : candidates)
		if (n.driver(o) >= 0 && support(n, o).size() >= need)
			eligible.push_back(o);
	if (eligible.empty())
		throw LockError("insufficient primary inputs: no output cone has " + std::to_string(need) + " inputs");
	NetId out = eligible[rng() % eligible.size()];
	auto chosen = sample(support(n, out), need, rng);
	std::sort(chosen.begin(), chosen.end(), [&](NetId a, NetId b) {
		auto pis = n.primary_inputs();
		return std::find(pis.begin(), pis.end(), a) < std::find(pis.begin(), pis.end(), b);
	});
	return {out, chosen};
}

/// Balanced two-input tree, odd leftovers carried up; the single gate at the
/// last level is inverted when `invert_top` is set.
std::string build_tree(Editor &e, std::vector<std::string> level, const std::vector<GateKind> &kinds, bool invert_top,
		       std::string_view stem)
{
	std::size_t depth = 0;
	while (level.size() > 1) {
		GateKind kind = kinds.at(depth);
		bool top = level.size() == 2;
		if (top && invert_top)
			kind = kind == GateKind::And ? GateKind::Nand : GateKind::Nor;
		std::vector<std::string> next;
		for (std::size_t i = 0; i + 1 < level.size(); i += 2)
			next.push_back(e.gate(stem, kind, {level[i], level[i + 1]}));
		if (level.size() % 2)
			next.push_back(level.back());
		level = std::move(next);
		++depth;
	}
	return level.front();
}

std::size_t tree_levels(std::size_t leaves)
{
	std::size_t levels = 0;
	for (std::size_t w = leaves; w > 1; w = (w + 1) / 2)
		++levels;
	return levels;
}

LockResult lock_tree(const Netlist &n, std::size_t p, std::uint64_t seed, const TreeLockOptions &options,
		     LockScheme scheme)
{
	LockResult res;
	res.record.scheme = scheme;
	res.record.seed = seed;
	if (p % 2)
		throw LockError("key size must be even, got " + std::to_string(p));
	if (p == 0) {
		res.netlist = n;
		return res;
	}
	const std::size_t half = p / 2;
	if (half > n.primary_inputs().size())
		throw LockError("insufficient primary inputs for key size " + std::to_string(p));
	std::mt19937_64 rng(seed);
	auto [out, inputs] = choose_protected(n, half, options.output, rng);

	std::vector<GateKind> kinds = options.level_kinds;
	const std::size_t levels = tree_levels(half);
	if (kinds.empty()) {
		for (std::size_t l = 0; l < levels; ++l)
			kinds.push_back(scheme == LockScheme::CasLock && rng() % 2 ? GateKind::Or : GateKind::And);
	}
	if (kinds.size() != levels)
		throw LockError("level pattern needs " + std::to_string(levels) + " entries");
	for (GateKind k : kinds)
		if (k != GateKind::And && k != GateKind::Or)
			throw LockError("level pattern entries must be AND or OR");

	std::vector<bool> first(half);
	for (std::size_t i = 0; i < half; ++i)
		first[i] = rng() & 1;

	Editor e(n);
	const std::size_t base = n.key_count();
	std::vector<std::string> keys;
	for (std::size_t i = 0; i < p; ++i)
		keys.push_back(e.add_key(base + i));
	const char *tag = scheme == LockScheme::CasLock ? "cas" : "as";
	std::vector<std::string> g_leaves, gbar_leaves;
	for (std::size_t j = 0; j < half; ++j) {
		const std::string &x = n.net_name(inputs[j]);
		g_leaves.push_back(e.gate(std::string(tag) + "_g", GateKind::Xor, {x, keys[j]}));
		// A single-leaf complementary tree has no gate to invert, so its leaf carries the inversion.
		GateKind leaf = half == 1 ? GateKind::Xnor : GateKind::Xor;
		gbar_leaves.push_back(e.gate(std::string(tag) + "_h", leaf, {x, keys[half + j]}));
	}
	std::string g = build_tree(e, g_leaves, kinds, false, std::string(tag) + "_g");
	std::string gbar = build_tree(e, gbar_leaves, kinds, true, std::string(tag) + "_h");
	std::string flip = e.gate(std::string(tag) + "_flip", GateKind::And, {g, gbar});
	std::string orig = e.tap(out);
	e.gate_named(n.net_name(out), GateKind::Xor, {orig, flip});
	res.netlist = std::move(e).finish();

	auto &r = res.record;
	r.true_key.bits = first;
	r.true_key.bits.insert(r.true_key.bits.end(), first.begin(), first.end());
	r.protected_output = n.net_name(out);
	for (NetId x : inputs)
		r.compared_inputs.push_back(n.net_name(x));
	r.level_kinds = kinds;
	r.key_ranges.push_back({scheme, base, base + p});
	return res;
}

} // namespace

std::string_view to_string(LockScheme s)
{
	switch (s) {
	case LockScheme::Rll:
		return "rll";
	case LockScheme::AntiSat:
		return "antisat";
	case LockScheme::CasLock:
		return "caslock";
	case LockScheme::SfllPoint:
		return "sfll_point";
	case LockScheme::Compound:
		return "compound";
	}
	return "?";
}

LockScheme lock_scheme_from_string(std::string_view name)
{
	for (LockScheme s : {LockScheme::Rll, LockScheme::AntiSat, LockScheme::CasLock, LockScheme::SfllPoint,
			     LockScheme::Compound})
		if (to_string(s) == name)
			return s;
	throw LockError("unknown locking scheme '" + std::string(name) + "'");
}

LockResult lock_rll(const Netlist &n, std::size_t p, std::uint64_t seed, const RllOptions &options)
{
	LockResult res;
	res.record.scheme = LockScheme::Rll;
	res.record.seed = seed;
	if (p == 0) {
		res.netlist = n;
		return res;
	}
	std::mt19937_64 rng(seed);
	std::vector<NetId> sites;
	if (!options.sites.empty()) {
		if (options.sites.size() != p)
			throw LockError("explicit site list must have " + std::to_string(p) + " entries");
		std::set<NetId> unique;
		for (const auto &s : options.sites) {
			auto id = n.find_net(s);
			if (!id || n.driver(*id) < 0)
				throw LockError("site '" + s + "' is not a gate-driven net");
			if (!unique.insert(*id).second)
				throw LockError("duplicate site '" + s + "'");
			sites.push_back(*id);
		}
	} else {
		std::set<NetId> outputs(n.primary_outputs().begin(), n.primary_outputs().end());
		std::vector<NetId> pool;
		if (!options.pool.empty()) {
			for (const auto &s : options.pool) {
				auto id = n.find_net(s);
				if (id && n.driver(*id) >= 0)
					pool.push_back(*id);
			}
		} else {
			for (const Gate &g : n.gates())
				pool.push_back(g.output);
		}
		if (options.exclude_output_nets)
			std::erase_if(pool, [&](NetId id) { return outputs.count(id) > 0; });
		if (p > pool.size())
			throw LockError("key size " + std::to_string(p) + " exceeds the " + std::to_string(pool.size()) +
					" eligible internal nets");
		sites = sample(pool, p, rng);
	}
	std::vector<bool> key = options.key;
	if (key.empty()) {
		for (std::size_t i = 0; i < p; ++i)
			key.push_back(rng() & 1);
	} else if (key.size() != p) {
		throw LockError("explicit key must have " + std::to_string(p) + " bits");
	}

	Editor e(n);
	const std::size_t base = n.key_count();
	for (std::size_t i = 0; i < p; ++i) {
		std::string k = e.add_key(base + i);
		std::string orig = e.tap(sites[i]);
		e.gate_named(n.net_name(sites[i]), key[i] ? GateKind::Xnor : GateKind::Xor, {orig, k});
	}
	res.netlist = std::move(e).finish();
	res.record.true_key.bits = key;
	for (NetId s : sites)
		res.record.insertion_sites.push_back(n.net_name(s));
	res.record.key_ranges.push_back({LockScheme::Rll, base, base + p});
	return res;
}

LockResult lock_antisat(const Netlist &n, std::size_t p, std::uint64_t seed, const TreeLockOptions &options)
{
	TreeLockOptions opt = options;
	opt.level_kinds.clear();
	return lock_tree(n, p, seed, opt, LockScheme::AntiSat);
}

LockResult lock_caslock(const Netlist &n, std::size_t p, std::uint64_t seed, const TreeLockOptions &options)
{
	return lock_tree(n, p, seed, options, LockScheme::CasLock);
}

LockResult lock_sfll_point(const Netlist &n, std::size_t p, std::uint64_t seed, const SfllOptions &options)
{
	LockResult res;
	res.record.scheme = LockScheme::SfllPoint;
	res.record.seed = seed;
	if (p == 0) {
		res.netlist = n;
		return res;
	}
	if (p > n.primary_inputs().size())
		throw LockError("insufficient primary inputs for key size " + std::to_string(p));
	std::mt19937_64 rng(seed);
	auto [out, inputs] = choose_protected(n, p, options.output, rng);
	std::vector<bool> pattern = options.pattern;
	if (pattern.empty()) {
		for (std::size_t i = 0; i < p; ++i)
			pattern.push_back(rng() & 1);
	} else if (pattern.size() != p) {
		throw LockError("explicit pattern must have " + std::to_string(p) + " bits");
	}

	Editor e(n);
	const std::size_t base = n.key_count();
	std::vector<std::string> literals, matches;
	for (std::size_t j = 0; j < p; ++j) {
		const std::string &x = n.net_name(inputs[j]);
		literals.push_back(pattern[j] ? x : e.gate("sf_n", GateKind::Not, {x}));
		std::string k = e.add_key(base + j);
		matches.push_back(e.gate("sf_r", GateKind::Xnor, {x, k}));
	}
	std::string perturb = p == 1 ? literals[0] : e.gate("sf_p", GateKind::And, literals);
	std::string restore = p == 1 ? matches[0] : e.gate("sf_r", GateKind::And, matches);
	std::string orig = e.tap(out);
	std::string mid = e.gate("sf_x", GateKind::Xor, {orig, perturb});
	e.gate_named(n.net_name(out), GateKind::Xor, {mid, restore});
	res.netlist = std::move(e).finish();

	auto &r = res.record;
	r.true_key.bits = pattern;
	r.protected_output = n.net_name(out);
	r.protected_pattern = pattern;
	for (NetId x : inputs)
		r.compared_inputs.push_back(n.net_name(x));
	r.key_ranges.push_back({LockScheme::SfllPoint, base, base + p});
	return res;
}

LockResult lock_compound(const Netlist &n, std::size_t p_rll, std::size_t p_sfll, std::uint64_t seed)
{
	LockResult sf = lock_sfll_point(n, p_sfll, seed);
	RllOptions ro;
	for (const Gate &g : n.gates())
		ro.pool.push_back(n.net_name(g.output));
	LockResult rl = lock_rll(sf.netlist, p_rll, seed ^ kSeedMix, ro);

	LockResult res;
	res.netlist = std::move(rl.netlist);
	LockRecord &r = res.record;
	r = sf.record;
	r.scheme = LockScheme::Compound;
	r.seed = seed;
	r.insertion_sites = rl.record.insertion_sites;
	r.true_key.bits.insert(r.true_key.bits.end(), rl.record.true_key.bits.begin(), rl.record.true_key.bits.end());
	r.key_ranges.insert(r.key_ranges.end(), rl.record.key_ranges.begin(), rl.record.key_ranges.end());
	return res;
}

LockResult lock(const Netlist &n, LockScheme scheme, std::size_t p, std::size_t p2, std::uint64_t seed)
{
	switch (scheme) {
	case LockScheme::Rll:
		return lock_rll(n, p, seed);
	case LockScheme::AntiSat:
		return lock_antisat(n, p, seed);
	case LockScheme::CasLock:
		return lock_caslock(n, p, seed);
	case LockScheme::SfllPoint:
		return lock_sfll_point(n, p, seed);
	case LockScheme::Compound:
		return lock_compound(n, p, p2, seed);
	}
	throw LockError("unhandled scheme");
}

namespace {

std::string bits_to_string(const std::vector<bool> &b) { return KeyVector{b}.to_string(); }

} // namespace

nlohmann::json to_json(const LockRecord &r)
{
	nlohmann::json j;
	j["scheme"] = std::string(to_string(r.scheme));
	j["true_key"] = r.true_key.to_string();
	j["protected_output"] = r.protected_output;
	j["protected_pattern"] = bits_to_string(r.protected_pattern);
	j["compared_inputs"] = r.compared_inputs;
	j["insertion_sites"] = r.insertion_sites;
	std::vector<std::string> kinds;
	for (GateKind k : r.level_kinds)
		kinds.emplace_back(to_string(k));
	j["level_kinds"] = kinds;
	nlohmann::json ranges = nlohmann::json::array();
	for (const auto &kr : r.key_ranges)
		ranges.push_back({{"scheme", std::string(to_string(kr.scheme))}, {"begin", kr.begin}, {"end", kr.end}});
	j["key_ranges"] = ranges;
	j["seed"] = r.seed;
	return j;
}

LockRecord lock_record_from_json(const nlohmann::json &j)
{
	LockRecord r;
	try {
		r.scheme = lock_scheme_from_string(j.at("scheme").get<std::string>());
		r.true_key = KeyVector::from_string(j.value("true_key", std::string()));
		r.protected_output = j.value("protected_output", std::string());
		r.protected_pattern = KeyVector::from_string(j.value("protected_pattern", std::string())).bits;
		r.compared_inputs = j.value("compared_inputs", std::vector<std::string>{});
		r.insertion_sites = j.value("insertion_sites", std::vector<std::string>{});
		for (const auto &k : j.value("level_kinds", std::vector<std::string>{})) {
			auto kind = gate_kind_from_string(k);
			if (!kind)
				throw LockError("unknown gate kind '" + k + "' in lock record");
			r.level_kinds.push_back(*kind);
		}
		for (const auto &kr : j.value("key_ranges", nlohmann::json::array()))
			r.key_ranges.push_back({lock_scheme_from_string(kr.at("scheme").get<std::string>()),
						kr.at("begin").get<std::size_t>(), kr.at("end").get<std::size_t>()});
		r.seed = j.value("seed", std::uint64_t{0});
	} catch (const nlohmann::json::exception &e) {
		throw LockError(std::string("malformed lock record: ") + e.what());
	}
	return r;
}

} // namespace locklab
