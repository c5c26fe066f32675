#include "locklab/harness.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

namespace locklab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string guess_string(const std::vector<Guess> &g)
{
	std::string s;
	for (Guess x : g)
		s += to_string(x);
	return s;
}

std::vector<Guess> guesses_from_string(const std::string &s)
{
	std::vector<Guess> g;
	for (char c : s)
		g.push_back(c == '0' ? Guess::Zero : c == '1' ? Guess::One : Guess::Unknown);
	return g;
}

std::vector<Guess> guesses_of(const SolutionVector &s)
{
	std::vector<Guess> g;
	for (const KeyBitGuess &x : s.guesses)
		g.push_back(x.value);
	return g;
}

std::string digest(const json &j) { return to_hex(sha256(j.dump())); }

void write_text(const fs::path &path, const std::string &text, FileAccessLog *log, const std::string &stage)
{
	if (log)
		log->record(stage, path.string(), FileMode::Write);
	fs::create_directories(path.parent_path());
	std::ofstream out(path, std::ios::binary);
	if (!out)
		throw std::runtime_error("cannot write " + path.string());
	out << text;
}

void write_json(const fs::path &path, const json &j, FileAccessLog *log, const std::string &stage)
{
	write_text(path, j.dump(2) + "\n", log, stage);
}

/// Stage outputs keyed by a digest of everything the stage depends on.
class StageCache
{
      public:
	StageCache(fs::path dir, FileAccessLog *log) : dir_(std::move(dir)), log_(log) { fs::create_directories(dir_); }

	std::optional<json> get(const std::string &stage, const std::string &key) const
	{
		fs::path p = path(stage, key);
		if (!fs::exists(p))
			return std::nullopt;
		if (log_)
			log_->record(stage, p.string(), FileMode::Read);
		std::ifstream in(p);
		try {
			json j;
			in >> j;
			return j;
		} catch (const json::exception &) {
			return std::nullopt; // a torn write; recompute
		}
	}

	void put(const std::string &stage, const std::string &key, const json &value) const
	{
		fs::path p = path(stage, key);
		fs::path tmp = p;
		tmp += ".tmp";
		write_text(tmp, value.dump(), log_, stage);
		fs::rename(tmp, p);
	}

      private:
	fs::path path(const std::string &stage, const std::string &key) const { return dir_ / (stage + "-" + key.substr(0, 24) + ".json"); }

	fs::path dir_;
	FileAccessLog *log_;
};

/// Runs `compute` unless the cache already holds the stage output for `inputs`.
template <typename F> json cached(const StageCache &cache, const std::string &stage, const json &inputs, F &&compute)
{
	json keyed{{"stage", stage}, {"inputs", inputs}};
	std::string key = digest(keyed);
	if (auto hit = cache.get(stage, key))
		return *hit;
	json value = compute();
	cache.put(stage, key, value);
	return value;
}

json variant_set_json(const VariantSet &v)
{
	json j;
	j["manifest"] = manifest_json(v, "v");
	j["benches"] = json::array();
	for (const Variant &x : v.variants)
		j["benches"].push_back(write_bench(x.netlist));
	return j;
}

VariantSet variant_set_from_json(const json &j, const Netlist &base)
{
	VariantSet v;
	v.base = base;
	const json &m = j.at("manifest");
	const json &benches = j.at("benches");
	for (std::size_t i = 0; i < m.at("variants").size(); ++i) {
		const json &e = m["variants"][i];
		Variant x;
		x.recipe = recipe_from_json(e.at("recipe"));
		x.netlist = parse_bench(benches.at(i).get<std::string>());
		x.stats = stats(x.netlist);
		x.signature = e.at("signature").get<std::string>();
		if (e.at("slack").is_number())
			x.slack = e.at("slack").get<int>();
		v.unique_signatures.insert(x.signature);
		v.variants.push_back(std::move(x));
	}
	for (const json &e : m.at("recipe_log")) {
		v.recipes.push_back(recipe_from_json(e.at("recipe")));
		v.recipe_signatures.push_back(e.at("signature").get<std::string>());
	}
	return v;
}

DipResult dip_from_json(const json &j)
{
	DipResult r;
	r.success = j.at("success").get<bool>();
	r.timeout = j.at("timeout").get<bool>();
	r.iterations = j.at("iterations").get<std::size_t>();
	r.verified = j.at("verified").get<bool>();
	r.key = KeyVector::from_string(j.at("key").get<std::string>());
	return r;
}

ConeResult cone_from_json(const json &j)
{
	ConeResult c;
	c.output = j.at("output").get<std::string>();
	c.whole_gate_count = j.at("whole_gate_count").get<std::size_t>();
	c.cone_gate_count = j.at("cone_gate_count").get<std::size_t>();
	c.key_indices = j.at("key_indices").get<std::vector<std::size_t>>();
	c.recipes = j.at("recipes").get<std::size_t>();
	c.unique_variants = j.at("unique_variants").get<std::size_t>();
	c.guesses = guesses_from_string(j.at("guesses").get<std::string>());
	c.seconds = j.value("seconds", 0.0);
	return c;
}

std::string lock_dir_name(const LockSpec &l)
{
	std::string s = std::string(to_string(l.scheme)) + "-p" + std::to_string(l.p);
	if (l.scheme == LockScheme::Compound)
		s += "-" + std::to_string(l.p2);
	return s;
}

class Stopwatch
{
      public:
	double lap()
	{
		auto now = std::chrono::steady_clock::now();
		double s = std::chrono::duration<double>(now - last_).count();
		last_ = now;
		return s;
	}

      private:
	std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

AttackReport run_one(const ExperimentConfig &cfg, const CircuitSource &src, std::size_t lock_index, const StageCache &cache,
		     const fs::path &root, FileAccessLog *log)
{
	const LockSpec &spec = cfg.locks[lock_index];
	AttackReport rep;
	rep.circuit = src.name;
	rep.scheme = std::string(to_string(spec.scheme));
	const fs::path dir = root / src.name / lock_dir_name(spec);
	Stopwatch clock;

	// Lock.
	Netlist original = load_circuit(src, log);
	rep.gate_count = original.gates().size();
	const std::string original_bench = write_bench(original);
	const std::uint64_t lock_seed = derive_seed(cfg.seed, "lock:" + src.name + ":" + lock_dir_name(spec), lock_index);
	json lock_inputs{{"circuit", digest(original_bench)},
			 {"scheme", rep.scheme},
			 {"p", spec.p},
			 {"p2", spec.p2},
			 {"seed", lock_seed}};
	json locked_j = cached(cache, "lock", lock_inputs, [&] {
		LockResult lr = lock(original, spec.scheme, spec.p, spec.p2, lock_seed);
		return json{{"bench", write_bench(lr.netlist)}, {"record", to_json(lr.record)}};
	});
	const std::string locked_bench = locked_j.at("bench").get<std::string>();
	Netlist locked = parse_bench(locked_bench);
	LockRecord record = lock_record_from_json(locked_j.at("record"));
	write_text(dir / "locked.bench", locked_bench, log, "lock");
	write_key_file((dir / "locked.key").string(), record.true_key, log, "lock");
	json public_record = locked_j.at("record");
	public_record.erase("true_key");
	write_json(dir / "lock.json", public_record, log, "lock");
	rep.p = locked.key_count();
	// The true key leaves scope here; only the score stage reads it back from disk.
	record.true_key = {};
	rep.wall_times["lock"] = clock.lap();

	// Resynthesize and certify.
	const std::vector<SynthesisRecipe> recipes = select_recipes(cfg);
	json recipe_list = json::array();
	for (const SynthesisRecipe &r : recipes)
		recipe_list.push_back(to_json(r));
	VariantOptions vo;
	vo.jobs = cfg.jobs;
	vo.certify = cfg.certify;
	json vs_j = cached(cache, "resynth", {{"locked", digest(locked_bench)}, {"recipes", recipe_list}, {"certify", to_string(cfg.certify)}},
			   [&] { return variant_set_json(generate_variants(locked, recipes, vo)); });
	VariantSet vs = variant_set_from_json(vs_j, locked);
	write_variant_set(vs, (dir / "variants").string(), "v");
	if (log)
		log->record("resynth", (dir / "variants" / "manifest.json").string(), FileMode::Write);
	rep.recipes = vs.recipes.size();
	rep.unique_variant_count = vs.variants.size();
	rep.diversity = diversity_report(vs);
	rep.wall_times["resynth"] = clock.lap();

	std::vector<Netlist> variants;
	json variant_sigs = json::array();
	for (const Variant &v : vs.variants) {
		variants.push_back(v.netlist);
		variant_sigs.push_back(v.signature);
	}

	// Oracle-less attack, per variant and on the locked netlist itself.
	std::optional<SolutionVector> ol_single;
	std::vector<SolutionVector> ol_variants;
	std::optional<EnsembleSolution> ol_ensemble;
	if (cfg.attacks.count(AttackKind::Ol)) {
		json ol_opts{{"policy", to_string(cfg.ol.policy)}, {"tau", cfg.ol.tau}, {"light", cfg.ol.light_resynthesis}};
		json ol_j = cached(cache, "ol", {{"locked", digest(locked_bench)}, {"variants", variant_sigs}, {"options", ol_opts}}, [&] {
			json out;
			out["single"] = to_json(attack_netlist(locked, cfg.ol));
			out["variants"] = json::array();
			for (const SolutionVector &s : attack_netlists(variants, cfg.ol, cfg.jobs))
				out["variants"].push_back(to_json(s));
			return out;
		});
		ol_single = solution_from_json(ol_j.at("single"));
		for (const json &s : ol_j.at("variants"))
			ol_variants.push_back(solution_from_json(s));
		ol_ensemble = merge_votes(ol_variants);
		json report = ol_j;
		report["ensemble"] = to_json(*ol_ensemble);
		write_json(dir / "ol.json", report, log, "ol");
		rep.slack = slack_analysis(vs, ol_variants);
		rep.wall_times["ol"] = clock.lap();
	}

	// Oracle-guided query attack; queries planned once on the locked netlist.
	if (cfg.attacks.count(AttackKind::Og)) {
		const std::uint64_t qseed = derive_seed(cfg.seed, "queries:" + src.name + ":" + lock_dir_name(spec), lock_index);
		json og_inputs{{"locked", digest(locked_bench)},
			       {"oracle", digest(original_bench)},
			       {"variants", variant_sigs},
			       {"queries", cfg.og_queries},
			       {"budget", cfg.conflict_budget},
			       {"seed", qseed},
			       {"ol_single", ol_single ? guess_string(guesses_of(*ol_single)) : ""},
			       {"ol", ol_ensemble ? to_json(*ol_ensemble) : json()}};
		json og_j = cached(cache, "og", og_inputs, [&] {
			Oracle oracle = Oracle::from_original(original);
			EnsembleOgOptions eo;
			eo.jobs = cfg.jobs;
			eo.query.query_count = cfg.og_queries;
			eo.query.seed = qseed;
			eo.query.conflict_budget = cfg.conflict_budget;
			KeySolution ks = ensemble_og_attack(locked, variants, oracle, ol_ensemble ? &*ol_ensemble : nullptr, eo);
			std::vector<std::vector<bool>> responses;
			for (const Query &q : ks.queries)
				responses.push_back(oracle.query(q));
			ProvenSolution single = prove_with_queries(locked, ks.queries, responses, cfg.conflict_budget);
			std::vector<Guess> single_guesses(single.bits.size(), Guess::Unknown);
			for (std::size_t i = 0; i < single.bits.size(); ++i) {
				if (single.bits[i].status == BitProof::Proven)
					single_guesses[i] = single.bits[i].candidate ? Guess::One : Guess::Zero;
				else if (ol_single)
					single_guesses[i] = ol_single->guesses[i].value;
			}
			json out;
			out["report"] = to_json(ks);
			out["single"] = to_json(single);
			out["final"] = guess_string(ks.guesses());
			out["single_final"] = guess_string(single_guesses);
			out["proven"] = ks.proven_count();
			out["single_proven"] = single.proven_count();
			out["queries"] = ks.queries.size();
			out["oracle_queries"] = oracle.query_count();
			return out;
		});
		OgSummary og;
		og.queries = og_j.at("queries").get<std::size_t>();
		og.oracle_queries = og_j.at("oracle_queries").get<std::size_t>();
		og.proven = og_j.at("proven").get<std::size_t>();
		og.single_proven = og_j.at("single_proven").get<std::size_t>();
		og.final_guesses = guesses_from_string(og_j.at("final").get<std::string>());
		og.single_guesses = guesses_from_string(og_j.at("single_final").get<std::string>());
		rep.og = og;
		write_json(dir / "og.json", og_j, log, "og");
		rep.wall_times["og"] = clock.lap();
	}

	if (cfg.attacks.count(AttackKind::Dip)) {
		json dip_inputs{{"locked", digest(locked_bench)},
				{"oracle", digest(original_bench)},
				{"max_iterations", cfg.dip.max_iterations},
				{"time_limit", cfg.dip.time_limit},
				{"budget", cfg.dip.conflict_budget}};
		json dip_j = cached(cache, "dip", dip_inputs, [&] {
			Oracle oracle = Oracle::from_original(original);
			return to_json(dip_attack(locked, oracle, cfg.dip));
		});
		rep.dip = dip_from_json(dip_j);
		write_json(dir / "dip.json", dip_j, log, "dip");
		rep.wall_times["dip"] = clock.lap();
	}

	if (cfg.cone && !record.protected_output.empty()) {
		json cone_inputs{{"locked", digest(locked_bench)},
				 {"output", record.protected_output},
				 {"recipes", recipe_list},
				 {"certify", to_string(cfg.certify)},
				 {"ol", {{"policy", to_string(cfg.ol.policy)}, {"tau", cfg.ol.tau}}}};
		json cone_j = cached(cache, "cone", cone_inputs, [&] {
			ConeResult c = cone_mode(locked, record.protected_output, recipes, cfg.ol, vo);
			json j = to_json(c);
			j["seconds"] = c.seconds;
			return j;
		});
		rep.cone = cone_from_json(cone_j);
		write_json(dir / "cone.json", to_json(*rep.cone), log, "cone");
		rep.wall_times["cone"] = rep.cone->seconds;
		clock.lap();
	}

	// Scoring is the only stage that reads the key.
	KeyVector truth = read_key_file((dir / "locked.key").string(), log, "score");
	if (ol_single) {
		rep.ol_single = score(*ol_single, truth);
		rep.ol_ensemble = score(*ol_ensemble, truth);
		rep.convergence = convergence_analysis(convergence_inputs(vs, ol_variants, cfg.convergence), truth);
		rep.convergence_min_n = minimal_netlists_for_final_dk(rep.convergence);
	}
	if (rep.og) {
		rep.og_ensemble = score(rep.og->final_guesses, truth);
		rep.og_single = score(rep.og->single_guesses, truth);
	}
	if (rep.cone)
		rep.cone_score = score(rep.cone->guesses, truth);
	for (const std::string &v : check_report_invariants(rep))
		rep.errors.push_back("invariant violated: " + v);
	write_json(dir / "score.json", to_json(rep), log, "score");
	rep.wall_times["score"] = clock.lap();
	return rep;
}

} // namespace

PipelineResult run_pipeline(const ExperimentConfig &cfg, FileAccessLog *log)
{
	PipelineResult res;
	res.output_dir = cfg.output_dir;
	fs::create_directories(res.output_dir);
	StageCache cache(res.output_dir / "cache", log);
	for (const CircuitSource &src : cfg.circuits)
		for (std::size_t li = 0; li < cfg.locks.size(); ++li) {
			try {
				AttackReport r = run_one(cfg, src, li, cache, res.output_dir, log);
				for (const std::string &e : r.errors)
					res.failures.push_back(r.circuit + "/" + r.scheme + ": " + e);
				res.reports.push_back(std::move(r));
			} catch (const std::exception &e) {
				AttackReport r;
				r.circuit = src.name;
				r.scheme = std::string(to_string(cfg.locks[li].scheme));
				r.p = cfg.locks[li].p + cfg.locks[li].p2;
				r.errors.push_back(e.what());
				res.failures.push_back(r.circuit + "/" + r.scheme + ": " + e.what());
				res.reports.push_back(std::move(r));
			}
		}
	write_json(res.output_dir / "report.json", report_json(res.reports), log, "report");
	write_text(res.output_dir / "resynth.csv", resynth_table_csv(res.reports), log, "report");
	write_text(res.output_dir / "attack.csv", attack_table_csv(res.reports), log, "report");
	write_json(res.output_dir / "timing.json", timing_json(res.reports), log, "report");
	write_json(res.output_dir / "config.json", to_json(cfg), log, "report");
	return res;
}

} // namespace locklab
