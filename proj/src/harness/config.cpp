#include "locklab/harness.hpp"

#include <cstdlib>
#include <fstream>

namespace locklab {

namespace {

std::uint64_t mix(std::uint64_t x)
{
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s)
{
	std::uint64_t h = 0xcbf29ce484222325ULL;
	for (unsigned char c : s) {
		h ^= c;
		h *= 0x100000001b3ULL;
	}
	return h;
}

AttackKind attack_from_string(const std::string &s)
{
	if (s == "ol")
		return AttackKind::Ol;
	if (s == "og")
		return AttackKind::Og;
	if (s == "dip")
		return AttackKind::Dip;
	throw ConfigError("unknown attack '" + s + "' (expected ol, og or dip)");
}

RandomCircuitSpec random_spec_from_json(const nlohmann::json &j)
{
	RandomCircuitSpec s;
	s.inputs = j.value("inputs", s.inputs);
	s.outputs = j.value("outputs", s.outputs);
	s.gates = j.value("gates", s.gates);
	s.max_fanin = j.value("max_fanin", s.max_fanin);
	s.xor_fraction = j.value("xor_fraction", s.xor_fraction);
	s.mux_fraction = j.value("mux_fraction", s.mux_fraction);
	s.window = j.value("window", s.window);
	s.locality = j.value("locality", s.locality);
	s.seed = j.value("seed", s.seed);
	return s;
}

nlohmann::json to_json(const RandomCircuitSpec &s)
{
	return {{"inputs", s.inputs},	    {"outputs", s.outputs},	      {"gates", s.gates},
		{"max_fanin", s.max_fanin}, {"xor_fraction", s.xor_fraction}, {"mux_fraction", s.mux_fraction},
		{"window", s.window},	    {"locality", s.locality},	      {"seed", s.seed}};
}

RecipeConfig reduced_grid()
{
	RecipeConfig c;
	c.syn_gen = {Effort::Low, Effort::Medium};
	return c;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index)
{
	return mix(base ^ fnv1a(tag) ^ mix(index));
}

void FileAccessLog::record(std::string stage, std::string path, FileMode mode)
{
	std::lock_guard lock(mutex_);
	entries_.push_back({std::move(stage), std::move(path), mode});
}

std::vector<FileAccess> FileAccessLog::entries() const
{
	std::lock_guard lock(mutex_);
	return entries_;
}

std::vector<FileAccess> FileAccessLog::key_reads_outside_scoring() const
{
	std::vector<FileAccess> out;
	for (const FileAccess &a : entries())
		if (a.mode == FileMode::Read && a.stage != "score" && std::filesystem::path(a.path).extension() == ".key")
			out.push_back(a);
	return out;
}

nlohmann::json FileAccessLog::to_json() const
{
	nlohmann::json j = nlohmann::json::array();
	for (const FileAccess &a : entries())
		j.push_back({{"stage", a.stage}, {"path", a.path}, {"mode", a.mode == FileMode::Read ? "read" : "write"}});
	return j;
}

KeyVector read_key_file(const std::string &path, FileAccessLog *log, const std::string &stage)
{
	if (log)
		log->record(stage, path, FileMode::Read);
	std::ifstream in(path);
	if (!in)
		throw ConfigError("cannot read key file " + path);
	std::string text;
	in >> text;
	try {
		return KeyVector::from_string(text);
	} catch (const std::exception &e) {
		throw ConfigError("bad key file " + path + ": " + e.what());
	}
}

void write_key_file(const std::string &path, const KeyVector &key, FileAccessLog *log, const std::string &stage)
{
	if (log)
		log->record(stage, path, FileMode::Write);
	std::ofstream out(path);
	if (!out)
		throw std::runtime_error("cannot write key file " + path);
	out << key.to_string() << "\n";
}

std::string to_string(AttackKind a)
{
	switch (a) {
	case AttackKind::Ol:
		return "ol";
	case AttackKind::Og:
		return "og";
	case AttackKind::Dip:
		return "dip";
	}
	return "ol";
}

std::string to_string(ConvergenceMode m) { return m == ConvergenceMode::Unique ? "unique" : "all"; }

Certify certify_from_string(const std::string &s)
{
	if (s == "none")
		return Certify::None;
	if (s == "sim")
		return Certify::Sim;
	if (s == "sat")
		return Certify::Sat;
	if (s == "both")
		return Certify::Both;
	throw ConfigError("unknown certification mode '" + s + "' (expected none, sim, sat or both)");
}

std::string to_string(Certify c)
{
	switch (c) {
	case Certify::None:
		return "none";
	case Certify::Sim:
		return "sim";
	case Certify::Sat:
		return "sat";
	case Certify::Both:
		return "both";
	}
	return "none";
}

ExperimentConfig config_from_json(const nlohmann::json &j, const std::filesystem::path &base_dir)
{
	ExperimentConfig c;
	try {
		if (!j.is_object())
			throw ConfigError("config must be a JSON object");
		for (const auto &e : j.at("circuits")) {
			CircuitSource s;
			s.name = e.value("name", std::string());
			int kinds = 0;
			if (e.contains("path")) {
				std::filesystem::path p = e.at("path").get<std::string>();
				s.path = (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
				++kinds;
			}
			if (e.contains("builtin")) {
				s.builtin = e.at("builtin").get<std::string>();
				++kinds;
			}
			if (e.contains("random")) {
				s.random = random_spec_from_json(e.at("random"));
				++kinds;
			}
			if (kinds != 1)
				throw ConfigError("circuit entry needs exactly one of path, builtin, random");
			if (s.name.empty())
				s.name = !s.builtin.empty() ? s.builtin
					 : !s.path.empty()  ? std::filesystem::path(s.path).stem().string()
							    : "random" + std::to_string(c.circuits.size());
			c.circuits.push_back(std::move(s));
		}
		for (const auto &e : j.at("locks")) {
			LockSpec l;
			l.scheme = lock_scheme_from_string(e.at("scheme").get<std::string>());
			l.p = e.at("p").get<std::size_t>();
			l.p2 = e.value("p2", std::size_t{0});
			c.locks.push_back(l);
		}
		if (j.contains("recipes")) {
			const auto &r = j.at("recipes");
			if (r.is_string()) {
				std::string name = r.get<std::string>();
				if (name == "reduced")
					c.recipes = reduced_grid();
				else if (name != "all")
					throw ConfigError("recipes must be all, reduced or an axis object");
			} else {
				c.recipes = recipe_config_from_json(r);
			}
		}
		c.max_recipes = j.value("max_recipes", std::size_t{0});
		for (const auto &a : j.value("attacks", nlohmann::json::array()))
			c.attacks.insert(attack_from_string(a.get<std::string>()));
		if (j.contains("ol")) {
			const auto &o = j.at("ol");
			c.ol.policy = ol_policy_from_string(o.value("policy", std::string("threshold")));
			c.ol.tau = o.value("tau", c.ol.tau);
			c.ol.light_resynthesis = o.value("light_resynthesis", true);
		}
		if (j.contains("og")) {
			const auto &o = j.at("og");
			if (o.contains("queries")) {
				const auto &q = o.at("queries");
				if (q.is_string()) {
					if (q.get<std::string>() != "2p")
						throw ConfigError("og.queries must be \"2p\" or a number");
				} else {
					c.og_queries = q.get<std::size_t>();
				}
			}
			c.conflict_budget = o.value("budget_conflicts", c.conflict_budget);
		}
		if (j.contains("dip")) {
			const auto &o = j.at("dip");
			c.dip.max_iterations = o.value("max_iterations", c.dip.max_iterations);
			c.dip.time_limit = o.value("time_limit", c.dip.time_limit);
			c.dip.conflict_budget = o.value("budget_conflicts", c.dip.conflict_budget);
		}
		if (j.contains("certify"))
			c.certify = certify_from_string(j.at("certify").get<std::string>());
		c.seed = j.value("seed", c.seed);
		c.output_dir = j.value("output_dir", c.output_dir);
		if (!base_dir.empty() && std::filesystem::path(c.output_dir).is_relative())
			c.output_dir = (base_dir / c.output_dir).string();
		c.jobs = j.value("jobs", c.jobs);
		c.cone = j.value("cone", false);
		std::string mode = j.value("convergence_mode", std::string("unique"));
		if (mode != "unique" && mode != "all")
			throw ConfigError("convergence_mode must be unique or all");
		c.convergence = mode == "unique" ? ConvergenceMode::Unique : ConvergenceMode::All;
	} catch (const nlohmann::json::exception &e) {
		throw ConfigError(std::string("config: ") + e.what());
	} catch (const LockError &e) {
		throw ConfigError(std::string("config: ") + e.what());
	} catch (const AttackError &e) {
		throw ConfigError(std::string("config: ") + e.what());
	} catch (const ResynthError &e) {
		throw ConfigError(std::string("config: ") + e.what());
	}
	return c;
}

nlohmann::json to_json(const ExperimentConfig &c)
{
	nlohmann::json j;
	j["circuits"] = nlohmann::json::array();
	for (const CircuitSource &s : c.circuits) {
		nlohmann::json e{{"name", s.name}};
		if (!s.path.empty())
			e["path"] = s.path;
		if (!s.builtin.empty())
			e["builtin"] = s.builtin;
		if (s.random)
			e["random"] = to_json(*s.random);
		j["circuits"].push_back(e);
	}
	j["locks"] = nlohmann::json::array();
	for (const LockSpec &l : c.locks)
		j["locks"].push_back({{"scheme", std::string(to_string(l.scheme))}, {"p", l.p}, {"p2", l.p2}});
	j["recipes"] = to_json(c.recipes);
	j["max_recipes"] = c.max_recipes;
	j["attacks"] = nlohmann::json::array();
	for (AttackKind a : c.attacks)
		j["attacks"].push_back(to_string(a));
	j["ol"] = {{"policy", to_string(c.ol.policy)}, {"tau", c.ol.tau}, {"light_resynthesis", c.ol.light_resynthesis}};
	j["og"] = {{"queries", c.og_queries ? nlohmann::json(c.og_queries) : nlohmann::json("2p")},
		   {"budget_conflicts", c.conflict_budget}};
	j["dip"] = {{"max_iterations", c.dip.max_iterations},
		    {"time_limit", c.dip.time_limit},
		    {"budget_conflicts", c.dip.conflict_budget}};
	j["certify"] = to_string(c.certify);
	j["seed"] = c.seed;
	j["output_dir"] = c.output_dir;
	j["jobs"] = c.jobs;
	j["cone"] = c.cone;
	j["convergence_mode"] = to_string(c.convergence);
	return j;
}

void apply_env_overrides(ExperimentConfig &c)
{
	const char *s = std::getenv("LOCKLAB_SEED");
	if (!s || !*s)
		return;
	try {
		std::size_t used = 0;
		unsigned long long v = std::stoull(s, &used, 0);
		if (used != std::string(s).size())
			throw std::invalid_argument("trailing characters");
		c.seed = v;
	} catch (const std::exception &) {
		throw ConfigError(std::string("LOCKLAB_SEED is not an unsigned integer: ") + s);
	}
}

Netlist load_circuit(const CircuitSource &s, FileAccessLog *log)
{
	if (!s.path.empty()) {
		if (log)
			log->record("load", s.path, FileMode::Read);
		return read_bench_file(s.path);
	}
	if (s.builtin == "majority")
		return majority_circuit();
	if (s.builtin == "c17")
		return c17_circuit();
	if (!s.builtin.empty())
		throw ConfigError("unknown built-in circuit '" + s.builtin + "' (expected majority or c17)");
	if (s.random)
		return random_circuit(*s.random);
	throw ConfigError("circuit '" + s.name + "' has no source");
}

void validate(const ExperimentConfig &c)
{
	if (c.circuits.empty())
		throw ConfigError("config lists no circuits");
	if (c.locks.empty())
		throw ConfigError("config lists no locks");
	std::set<std::string> names;
	for (const CircuitSource &s : c.circuits) {
		if (!names.insert(s.name).second)
			throw ConfigError("duplicate circuit name '" + s.name + "'");
		if (!s.path.empty() && !std::filesystem::exists(s.path))
			throw ConfigError("circuit file not found: " + s.path);
		try {
			Netlist n = load_circuit(s);
			if (n.key_count() != 0)
				throw ConfigError("circuit '" + s.name + "' already has key inputs");
		} catch (const ConfigError &) {
			throw;
		} catch (const std::exception &e) {
			throw ConfigError("circuit '" + s.name + "' does not parse: " + e.what());
		}
	}
	for (const LockSpec &l : c.locks)
		if (l.p + l.p2 == 0)
			throw ConfigError("lock '" + std::string(to_string(l.scheme)) + "' has an empty key budget");
	if (c.ol.tau < 0)
		throw ConfigError("ol.tau must be non-negative");
	try {
		if (enumerate_recipes(c.recipes).empty())
			throw ConfigError("recipe grid is empty");
	} catch (const ResynthError &e) {
		throw ConfigError(e.what());
	}
}

ExperimentConfig load_config(const std::string &path)
{
	std::ifstream in(path);
	if (!in)
		throw ConfigError("cannot read config " + path);
	nlohmann::json j;
	try {
		in >> j;
	} catch (const nlohmann::json::exception &e) {
		throw ConfigError("config " + path + " is not valid JSON: " + e.what());
	}
	ExperimentConfig c = config_from_json(j, std::filesystem::path(path).parent_path());
	apply_env_overrides(c);
	validate(c);
	return c;
}

std::vector<SynthesisRecipe> select_recipes(const ExperimentConfig &c)
{
	RecipeConfig rc = c.recipes;
	rc.seed_base = derive_seed(c.seed, "recipes");
	std::vector<SynthesisRecipe> all = enumerate_recipes(rc);
	if (c.max_recipes == 0 || c.max_recipes >= all.size())
		return all;
	std::vector<SynthesisRecipe> out;
	for (std::size_t i = 0; i < c.max_recipes; ++i)
		out.push_back(all[i * all.size() / c.max_recipes]);
	return out;
}

} // namespace locklab
