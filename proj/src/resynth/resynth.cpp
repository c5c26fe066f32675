#include "locklab/resynth.hpp"
#include "locklab/aig.hpp"
#include "locklab/cnf.hpp"
#include "locklab/simulate.hpp"
#include "locklab/synth_passes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace locklab {

namespace {

std::uint64_t splitmix(std::uint64_t x)
{
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

int gen_rounds(Effort e) { return e == Effort::Low ? 1 : e == Effort::Medium ? 2 : 4; }

int opt_rounds(OptEffort e)
{
	switch (e) {
	case OptEffort::Low:
		return 0;
	case OptEffort::Medium:
		return 1;
	case OptEffort::High:
		return 2;
	case OptEffort::Extreme:
		return 4;
	}
	return 0;
}

CellSet cells_of(Effort e) { return e == Effort::Low ? CellSet::Low : e == Effort::Medium ? CellSet::Medium : CellSet::High; }

template <typename E> E parse_enum(const std::string &s, std::initializer_list<E> values)
{
	for (E v : values)
		if (to_string(v) == s)
			return v;
	throw ResynthError("unknown recipe value '" + s + "'");
}

Effort effort_from(const std::string &s) { return parse_enum(s, {Effort::Low, Effort::Medium, Effort::High}); }
OptEffort opt_from(const std::string &s)
{
	return parse_enum(s, {OptEffort::Low, OptEffort::Medium, OptEffort::High, OptEffort::Extreme});
}
MaxTransition transition_from(const std::string &s)
{
	return parse_enum(s, {MaxTransition::P5, MaxTransition::P10, MaxTransition::P15});
}

bool has_xor(const Netlist &n)
{
	for (const Gate &g : n.gates())
		if (g.kind == GateKind::Xor || g.kind == GateKind::Xnor)
			return true;
	return false;
}

bool simulation_agrees(const Netlist &a, const Netlist &b, std::size_t vectors, std::uint64_t seed)
{
	std::mt19937_64 rng(seed);
	for (std::size_t done = 0; done < vectors; done += 64) {
		auto in = random_words(rng, a.primary_inputs().size());
		auto keys = random_words(rng, a.key_count());
		if (simulate_output_words(a, in, keys) != simulate_output_words(b, in, keys))
			return false;
	}
	return true;
}

Netlist run_external(const Netlist &n, const SynthesisRecipe &r, const std::string &command)
{
	namespace fs = std::filesystem;
	std::ostringstream tag;
	tag << "locklab_ext_" << r.index << "_" << std::this_thread::get_id();
	fs::path in = fs::temp_directory_path() / (tag.str() + "_in.bench");
	fs::path out = fs::temp_directory_path() / (tag.str() + "_out.bench");
	write_bench_file(in.string(), n);
	std::string cmd = command;
	auto subst = [&](const std::string &key, const std::string &value) {
		for (std::size_t pos; (pos = cmd.find(key)) != std::string::npos;)
			cmd.replace(pos, key.size(), value);
	};
	subst("{in}", in.string());
	subst("{out}", out.string());
	subst("{recipe}", to_json(r).dump());
	int rc = std::system(cmd.c_str());
	if (rc != 0)
		throw ResynthError("external synthesizer failed with status " + std::to_string(rc));
	Netlist result = read_bench_file(out.string());
	fs::remove(in);
	fs::remove(out);
	return result;
}

} // namespace

std::string to_string(Effort e)
{
	static const char *names[] = {"Low", "Medium", "High"};
	return names[static_cast<int>(e)];
}

std::string to_string(OptEffort e)
{
	static const char *names[] = {"Low", "Medium", "High", "Extreme"};
	return names[static_cast<int>(e)];
}

std::string to_string(MaxTransition t)
{
	static const char *names[] = {"P5", "P10", "P15"};
	return names[static_cast<int>(t)];
}

std::string to_string(const SynthesisRecipe &r)
{
	std::ostringstream os;
	os << "gen=" << to_string(r.syn_gen) << " map=" << to_string(r.syn_map) << " opt=" << to_string(r.syn_opt)
	   << " delay=" << (r.delay_point == 0 ? std::string("None") : std::to_string(r.delay_point))
	   << " tr=" << to_string(r.max_transition) << " key=" << (r.key_constraint ? "On" : "Off") << " seed=" << r.seed;
	return os.str();
}

std::vector<SynthesisRecipe> enumerate_recipes(const RecipeConfig &c)
{
	if (c.syn_gen.empty() || c.syn_map.empty() || c.syn_opt.empty() || c.delay_point.empty() ||
	    c.max_transition.empty() || c.key_constraint.empty())
		throw ResynthError("recipe grid has an empty axis");
	for (int d : c.delay_point)
		if (d < 0 || d > 4)
			throw ResynthError("delay_point must be None (0) or 1..4");
	std::vector<SynthesisRecipe> out;
	for (Effort g : c.syn_gen)
		for (Effort m : c.syn_map)
			for (OptEffort o : c.syn_opt)
				for (int d : c.delay_point)
					for (MaxTransition t : c.max_transition)
						for (bool k : c.key_constraint) {
							SynthesisRecipe r{g, m, o, d, t, k, 0, out.size()};
							r.seed = c.seed ? *c.seed : splitmix(c.seed_base ^ splitmix(r.index));
							out.push_back(r);
						}
	return out;
}

int compute_dcp(const Netlist &n)
{
	Netlist s = simplify_netlist(n);
	auto lv = net_levels(s);
	std::int64_t d = 0;
	for (NetId o : s.primary_outputs())
		d = std::max(d, lv[o]);
	return static_cast<int>(d);
}

std::optional<int> delay_target(int dcp, const SynthesisRecipe &r)
{
	if (r.delay_point == 0)
		return std::nullopt;
	return static_cast<int>(std::ceil(dcp / 5.0 * r.delay_point - 1e-9));
}

int fanout_limit(MaxTransition t)
{
	switch (t) {
	case MaxTransition::P5:
		return 4;
	case MaxTransition::P10:
		return 8;
	case MaxTransition::P15:
		return 16;
	}
	return 16;
}

Netlist resynthesize(const Netlist &n, const SynthesisRecipe &r)
{
	AigInterface iface;
	Aig aig = aig_from_netlist(n, &iface);
	const std::size_t pis = iface.inputs.size();
	const bool effortful = r.syn_opt == OptEffort::High || r.syn_opt == OptEffort::Extreme || r.syn_map == Effort::High;

	for (int i = 0; i < gen_rounds(r.syn_gen); ++i)
		aig = generic_round(aig, true);

	// Delay target, translated from gate levels to AIG levels of the balanced graph.
	const int dcp = compute_dcp(n);
	const std::optional<int> target = delay_target(dcp, r);
	const bool timed = target.has_value() || r.key_constraint;
	int aig_target = -1;
	if (target) {
		int full = aig_balance(aig).depth();
		aig_target = dcp > 0 ? static_cast<int>(std::ceil(double(*target) * full / dcp)) : 0;
	} else if (r.key_constraint) {
		aig_target = 0;
	}
	// Nodes allowed to trade area for delay: critical paths, limited to the key cone when constrained.
	auto focus = [&](const Aig &g) {
		std::vector<char> m = critical_nodes(g, aig_target);
		if (r.key_constraint) {
			auto tfo = aig_key_tfo(g, pis);
			for (std::size_t i = 0; i < m.size(); ++i)
				m[i] = m[i] && tfo[i];
		}
		return m;
	};
	if (timed)
		aig = aig_balance(aig, focus(aig));

	for (int i = 0; i < opt_rounds(r.syn_opt); ++i) {
		CutParams cp;
		cp.delay = timed;
		cp.target_depth = aig_target;
		cp.refactor = true;
		cp.seed_ties = effortful;
		cp.seed = splitmix(r.seed + static_cast<std::uint64_t>(i));
		if (timed)
			cp.critical = focus(aig);
		if (r.key_constraint)
			cp.restrict = aig_key_tfo(aig, pis);
		aig = rewrite_pass(aig, cp);
	}

	MapParams mp;
	mp.cells = cells_of(r.syn_map);
	mp.iterations = static_cast<int>(r.syn_map) + 1;
	mp.fanout_limit = fanout_limit(r.max_transition);
	if (timed)
		mp.delay_nodes = focus(aig);
	mp.seed_ties = effortful;
	mp.seed = r.seed;
	return map_to_cells(aig, iface, mp);
}

Variant make_variant(const Netlist &n, const SynthesisRecipe &r, const VariantOptions &options)
{
	Variant v;
	v.recipe = r;
	v.netlist = options.external_command.empty() ? resynthesize(n, r) : run_external(n, r, options.external_command);
	v.stats = stats(v.netlist);
	v.signature = to_hex(structural_signature(v.netlist));
	if (auto t = delay_target(compute_dcp(n), r))
		v.slack = *t - static_cast<int>(v.stats.depth);
	if (has_xor(v.netlist))
		throw ResynthError("variant for recipe " + std::to_string(r.index) + " contains XOR/XNOR");
	const bool sim = options.certify == Certify::Sim || options.certify == Certify::Both;
	const bool sat = options.certify == Certify::Sat || options.certify == Certify::Both;
	if (sim && !simulation_agrees(n, v.netlist, options.sim_vectors, r.seed))
		throw ResynthError("variant for recipe " + std::to_string(r.index) + " fails random simulation");
	if (sat) {
		auto eq = check_equivalence(n, v.netlist, MiterSharing::InputsAndKeys);
		if (eq.verdict != Equivalence::Equivalent)
			throw ResynthError("variant for recipe " + std::to_string(r.index) + " is not certified equivalent");
	}
	return v;
}

VariantSet generate_variants(const Netlist &n, const std::vector<SynthesisRecipe> &recipes, const VariantOptions &options)
{
	std::vector<std::optional<Variant>> results(recipes.size());
	std::atomic<std::size_t> next{0};
	std::mutex error_mutex;
	std::string first_error;
	auto worker = [&] {
		for (std::size_t i; (i = next.fetch_add(1)) < recipes.size();) {
			try {
				results[i] = make_variant(n, recipes[i], options);
			} catch (const std::exception &e) {
				std::lock_guard lock(error_mutex);
				if (first_error.empty())
					first_error = e.what();
				next = recipes.size();
			}
		}
	};
	const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(recipes.size())));
	if (jobs == 1) {
		worker();
	} else {
		std::vector<std::thread> pool;
		for (unsigned j = 0; j < jobs; ++j)
			pool.emplace_back(worker);
		for (auto &t : pool)
			t.join();
	}
	if (!first_error.empty())
		throw ResynthError(first_error);

	VariantSet set;
	set.base = n;
	for (std::size_t i = 0; i < recipes.size(); ++i) {
		Variant &v = *results[i];
		set.recipes.push_back(v.recipe);
		set.recipe_signatures.push_back(v.signature);
		if (set.unique_signatures.insert(v.signature).second)
			set.variants.push_back(std::move(v));
	}
	return set;
}

StatSummary summarize(const std::vector<double> &values)
{
	if (values.empty())
		throw ResynthError("cannot summarize an empty series");
	StatSummary s;
	for (double x : values)
		s.mean += x;
	s.mean /= static_cast<double>(values.size());
	double var = 0.0;
	for (double x : values)
		var += (x - s.mean) * (x - s.mean);
	s.stddev = std::sqrt(var / static_cast<double>(values.size()));
	for (double x : values)
		s.normalized.push_back(s.mean != 0.0 ? x / s.mean : 1.0);
	return s;
}

DiversityReport diversity_report(const VariantSet &v)
{
	if (v.variants.empty())
		throw ResynthError("diversity report of an empty variant set");
	std::vector<double> g, d, l, a, p;
	for (const Variant &x : v.variants) {
		g.push_back(static_cast<double>(x.stats.gate_count));
		d.push_back(static_cast<double>(x.stats.depth));
		l.push_back(static_cast<double>(x.stats.literal_count));
		a.push_back(x.stats.area_proxy);
		p.push_back(x.stats.power_proxy);
	}
	return {summarize(g), summarize(d), summarize(l), summarize(a), summarize(p)};
}

std::vector<SynthesisRecipe> prune_redundant_recipes(const VariantSet &v)
{
	std::vector<SynthesisRecipe> out;
	std::set<std::string> seen;
	for (std::size_t i = 0; i < v.recipes.size(); ++i)
		if (seen.insert(v.recipe_signatures[i]).second)
			out.push_back(v.recipes[i]);
	return out;
}

std::vector<SynthesisRecipe> prune_redundant_recipes(const Netlist &n, const std::vector<SynthesisRecipe> &recipes,
						     const VariantOptions &options)
{
	return prune_redundant_recipes(generate_variants(n, recipes, options));
}

nlohmann::json to_json(const SynthesisRecipe &r)
{
	return {{"index", r.index},
		{"syn_gen", to_string(r.syn_gen)},
		{"syn_map", to_string(r.syn_map)},
		{"syn_opt", to_string(r.syn_opt)},
		{"delay_point", r.delay_point == 0 ? nlohmann::json("None") : nlohmann::json(r.delay_point)},
		{"max_transition", to_string(r.max_transition)},
		{"key_constraint", r.key_constraint ? "On" : "Off"},
		{"seed", r.seed}};
}

SynthesisRecipe recipe_from_json(const nlohmann::json &j)
{
	SynthesisRecipe r;
	r.index = j.value("index", std::size_t{0});
	r.syn_gen = effort_from(j.at("syn_gen").get<std::string>());
	r.syn_map = effort_from(j.at("syn_map").get<std::string>());
	r.syn_opt = opt_from(j.at("syn_opt").get<std::string>());
	const auto &d = j.at("delay_point");
	r.delay_point = d.is_string() ? 0 : d.get<int>();
	if (d.is_string() && d.get<std::string>() != "None")
		throw ResynthError("delay_point must be None or 1..4");
	if (r.delay_point < 0 || r.delay_point > 4)
		throw ResynthError("delay_point must be None or 1..4");
	r.max_transition = transition_from(j.at("max_transition").get<std::string>());
	const auto &k = j.at("key_constraint");
	r.key_constraint = k.is_boolean() ? k.get<bool>() : k.get<std::string>() == "On";
	r.seed = j.value("seed", std::uint64_t{0});
	return r;
}

nlohmann::json to_json(const RecipeConfig &c)
{
	nlohmann::json j;
	for (Effort e : c.syn_gen)
		j["syn_gen"].push_back(to_string(e));
	for (Effort e : c.syn_map)
		j["syn_map"].push_back(to_string(e));
	for (OptEffort e : c.syn_opt)
		j["syn_opt"].push_back(to_string(e));
	for (int d : c.delay_point)
		j["delay_point"].push_back(d == 0 ? nlohmann::json("None") : nlohmann::json(d));
	for (MaxTransition t : c.max_transition)
		j["max_transition"].push_back(to_string(t));
	for (bool k : c.key_constraint)
		j["key_constraint"].push_back(k ? "On" : "Off");
	j["seed_base"] = c.seed_base;
	if (c.seed)
		j["seed"] = *c.seed;
	return j;
}

RecipeConfig recipe_config_from_json(const nlohmann::json &j)
{
	RecipeConfig c;
	if (j.contains("syn_gen")) {
		c.syn_gen.clear();
		for (const auto &x : j["syn_gen"])
			c.syn_gen.push_back(effort_from(x.get<std::string>()));
	}
	if (j.contains("syn_map")) {
		c.syn_map.clear();
		for (const auto &x : j["syn_map"])
			c.syn_map.push_back(effort_from(x.get<std::string>()));
	}
	if (j.contains("syn_opt")) {
		c.syn_opt.clear();
		for (const auto &x : j["syn_opt"])
			c.syn_opt.push_back(opt_from(x.get<std::string>()));
	}
	if (j.contains("delay_point")) {
		c.delay_point.clear();
		for (const auto &x : j["delay_point"])
			c.delay_point.push_back(x.is_string() ? 0 : x.get<int>());
	}
	if (j.contains("max_transition")) {
		c.max_transition.clear();
		for (const auto &x : j["max_transition"])
			c.max_transition.push_back(transition_from(x.get<std::string>()));
	}
	if (j.contains("key_constraint")) {
		c.key_constraint.clear();
		for (const auto &x : j["key_constraint"])
			c.key_constraint.push_back(x.is_boolean() ? x.get<bool>() : x.get<std::string>() == "On");
	}
	c.seed_base = j.value("seed_base", std::uint64_t{0});
	if (j.contains("seed"))
		c.seed = j["seed"].get<std::uint64_t>();
	return c;
}

std::string variant_file_name(const std::string &base, const SynthesisRecipe &r)
{
	return base + "__r" + std::to_string(r.index) + ".bench";
}

nlohmann::json manifest_json(const VariantSet &v, const std::string &base)
{
	nlohmann::json j;
	j["base"] = base;
	j["base_signature"] = to_hex(structural_signature(v.base));
	j["recipes_executed"] = v.recipes.size();
	j["unique_variants"] = v.variants.size();
	j["variants"] = nlohmann::json::array();
	for (const Variant &x : v.variants) {
		nlohmann::json e;
		e["file"] = variant_file_name(base, x.recipe);
		e["recipe"] = to_json(x.recipe);
		e["signature"] = x.signature;
		e["stats"] = {{"gate_count", x.stats.gate_count},
			      {"depth", x.stats.depth},
			      {"literal_count", x.stats.literal_count},
			      {"area", x.stats.area_proxy},
			      {"power", x.stats.power_proxy}};
		e["slack"] = x.slack ? nlohmann::json(*x.slack) : nlohmann::json("inf");
		j["variants"].push_back(std::move(e));
	}
	j["recipe_log"] = nlohmann::json::array();
	for (std::size_t i = 0; i < v.recipes.size(); ++i)
		j["recipe_log"].push_back({{"recipe", to_json(v.recipes[i])}, {"signature", v.recipe_signatures[i]}});
	return j;
}

void write_variant_set(const VariantSet &v, const std::string &dir, const std::string &base)
{
	std::filesystem::create_directories(dir);
	for (const Variant &x : v.variants)
		write_bench_file((std::filesystem::path(dir) / variant_file_name(base, x.recipe)).string(), x.netlist);
	std::ofstream out(std::filesystem::path(dir) / "manifest.json");
	if (!out)
		throw ResynthError("cannot write manifest in " + dir);
	out << manifest_json(v, base).dump(2) << "\n";
}

VariantSet read_variant_set(const std::string &dir, const Netlist *base)
{
	namespace fs = std::filesystem;
	std::ifstream in(fs::path(dir) / "manifest.json");
	if (!in)
		throw ResynthError("no manifest.json in " + dir);
	nlohmann::json j;
	try {
		in >> j;
	} catch (const nlohmann::json::exception &e) {
		throw ResynthError("bad manifest in " + dir + ": " + e.what());
	}
	VariantSet v;
	if (base)
		v.base = *base;
	for (const auto &e : j.at("variants")) {
		Variant x;
		x.recipe = recipe_from_json(e.at("recipe"));
		x.netlist = read_bench_file((fs::path(dir) / e.at("file").get<std::string>()).string());
		x.stats = stats(x.netlist);
		x.signature = e.at("signature").get<std::string>();
		if (e.at("slack").is_number())
			x.slack = e.at("slack").get<int>();
		v.unique_signatures.insert(x.signature);
		v.variants.push_back(std::move(x));
	}
	for (const auto &e : j.value("recipe_log", nlohmann::json::array())) {
		v.recipes.push_back(recipe_from_json(e.at("recipe")));
		v.recipe_signatures.push_back(e.at("signature").get<std::string>());
	}
	return v;
}

} // namespace locklab
