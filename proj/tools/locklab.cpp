#include "locklab/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

using namespace locklab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const std::string &path)
{
	std::ifstream in(path);
	if (!in)
		throw ConfigError("cannot open " + path);
	try {
		return json::parse(in);
	} catch (const json::exception &e) {
		throw ConfigError(path + ": " + e.what());
	}
}

void emit(const json &j, const std::string &out)
{
	if (out.empty() || out == "-") {
		std::cout << j.dump(2) << '\n';
		return;
	}
	std::ofstream o(out);
	if (!o)
		throw ConfigError("cannot write " + out);
	o << j.dump(2) << '\n';
}

std::string guess_string(const std::vector<Guess> &g)
{
	std::string s;
	for (Guess x : g)
		s += to_string(x);
	return s;
}

std::vector<Guess> guesses_of(const SolutionVector &s)
{
	std::vector<Guess> g;
	for (const auto &b : s.guesses)
		g.push_back(b.value);
	return g;
}

std::vector<Guess> guesses_of(const EnsembleSolution &e)
{
	std::vector<Guess> g;
	for (const auto &b : e.bits)
		g.push_back(b.merged.value);
	return g;
}

std::vector<Guess> parse_guesses(const std::string &s)
{
	std::vector<Guess> g;
	for (char c : s) {
		if (c == '0')
			g.push_back(Guess::Zero);
		else if (c == '1')
			g.push_back(Guess::One);
		else if (c == 'X' || c == 'x')
			g.push_back(Guess::Unknown);
		else
			throw ConfigError(std::string("bad guess character '") + c + "'");
	}
	return g;
}

/// Rebuilds an ensemble from the dk0/dk1 counts an OL solution file stores.
EnsembleSolution ensemble_from_json(const json &j)
{
	EnsembleSolution e;
	e.solutions = j.at("solutions").get<std::size_t>();
	const auto &dk0 = j.at("dk0");
	const auto &dk1 = j.at("dk1");
	for (std::size_t i = 0; i < dk0.size(); ++i) {
		EnsembleBit b;
		b.dk0 = dk0[i].get<int>();
		b.dk1 = dk1[i].get<int>();
		b.merged.value = merge_rule(b.dk0, b.dk1);
		e.bits.push_back(b);
	}
	return e;
}

std::vector<SynthesisRecipe> recipes_from_option(const std::string &spec, std::size_t max_recipes, std::uint64_t seed)
{
	json r = spec == "all" || spec == "reduced" ? json(spec) : read_json(spec);
	json cfg = {{"circuits", json::array()}, {"locks", json::array()}, {"recipes", r}, {"max_recipes", max_recipes}};
	ExperimentConfig c = config_from_json(cfg);
	c.seed = seed;
	apply_env_overrides(c);
	return select_recipes(c);
}

std::vector<Netlist> variant_netlists(const VariantSet &vs)
{
	std::vector<Netlist> nets;
	for (const Variant &v : vs.variants)
		nets.push_back(v.netlist);
	return nets;
}

std::vector<SolutionVector> per_variant_solutions(const json &j)
{
	std::vector<SolutionVector> out;
	for (const auto &s : j.at("per_variant"))
		out.push_back(solution_from_json(s));
	return out;
}

std::size_t parse_queries(const std::string &s)
{
	if (s == "2p")
		return 0;
	try {
		return std::stoul(s);
	} catch (const std::exception &) {
		throw ConfigError("--queries must be 2p or a count");
	}
}

Oracle make_oracle(const std::string &oracle, const std::string &oracle_key)
{
	if (oracle.empty())
		throw ConfigError("an oracle circuit is required");
	Netlist n = read_bench_file(oracle);
	if (oracle_key.empty())
		return Oracle::from_original(std::move(n));
	return Oracle::from_locked(std::move(n), read_key_file(oracle_key, nullptr, "oracle"));
}

} // namespace

int main(int argc, char **argv)
{
	CLI::App app{"locklab: logic locking, resynthesis and key-recovery attacks"};
	app.require_subcommand(1);
	app.fallthrough();
	unsigned jobs = 1;
	app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

	// lock
	std::string lock_in, lock_scheme = "rll", lock_out, lock_key, lock_record;
	std::size_t lock_p = 8, lock_p2 = 0;
	std::uint64_t lock_seed = 1;
	auto *lock_cmd = app.add_subcommand("lock", "Insert key gates into a circuit");
	lock_cmd->add_option("--in", lock_in, "Input BENCH file")->required();
	lock_cmd->add_option("--scheme", lock_scheme, "rll, antisat, caslock, sfll_point or compound");
	lock_cmd->add_option("-p,--p", lock_p, "Key bits (RLL share for compound)");
	lock_cmd->add_option("--p2", lock_p2, "SFLL share for compound");
	lock_cmd->add_option("--seed", lock_seed);
	lock_cmd->add_option("--out", lock_out, "Locked BENCH output")->required();
	lock_cmd->add_option("--key-out", lock_key, "Key file output")->required();
	lock_cmd->add_option("--record", lock_record, "Lock record JSON (no key)");

	// resynth
	std::string rs_in, rs_recipes = "all", rs_out, rs_certify = "sim";
	std::size_t rs_max = 0;
	std::uint64_t rs_seed = 1;
	auto *rs_cmd = app.add_subcommand("resynth", "Generate functionally equivalent variants");
	rs_cmd->add_option("--in", rs_in, "Locked BENCH file")->required();
	rs_cmd->add_option("--recipes", rs_recipes, "all, reduced or a JSON axis file");
	rs_cmd->add_option("--max-recipes", rs_max, "Strided subset size");
	rs_cmd->add_option("--seed", rs_seed);
	rs_cmd->add_option("--certify", rs_certify, "none, sim, sat or both");
	rs_cmd->add_option("--out", rs_out, "Variant directory")->required();

	// attack
	auto *attack_cmd = app.add_subcommand("attack", "Key-recovery attacks");
	attack_cmd->require_subcommand(1);

	std::string ol_in, ol_variants, ol_policy = "threshold", ol_out;
	double ol_tau = OlOptions{}.tau;
	auto *ol_cmd = attack_cmd->add_subcommand("ol", "Oracle-less constant-propagation attack");
	ol_cmd->add_option("--in", ol_in, "Locked BENCH file");
	ol_cmd->add_option("--variants", ol_variants, "Variant directory; attacks every variant and merges votes");
	ol_cmd->add_option("--policy", ol_policy, "threshold or cluster");
	ol_cmd->add_option("--tau", ol_tau, "Threshold as a fraction of area")->check(CLI::NonNegativeNumber);
	ol_cmd->add_option("--out", ol_out, "Solution JSON (stdout when omitted)");

	std::string og_in, og_variants, og_oracle, og_oracle_key, og_queries = "2p", og_ol, og_out;
	std::int64_t og_budget = kDefaultConflictBudget;
	std::uint64_t og_seed = 1;
	auto *og_cmd = attack_cmd->add_subcommand("og", "Oracle-guided query attack with proofs");
	og_cmd->add_option("--in", og_in, "Locked BENCH file")->required();
	og_cmd->add_option("--variants", og_variants, "Variant directory for the ensemble attack");
	og_cmd->add_option("--oracle", og_oracle, "Oracle BENCH (original, or locked with --oracle-key)")->required();
	og_cmd->add_option("--oracle-key", og_oracle_key, "Key programming a locked oracle");
	og_cmd->add_option("--queries", og_queries, "2p or a count");
	og_cmd->add_option("--budget-conflicts", og_budget);
	og_cmd->add_option("--seed", og_seed);
	og_cmd->add_option("--ol-solution", og_ol, "OL ensemble solution filling unproven bits");
	og_cmd->add_option("--out", og_out);

	std::string dip_in, dip_oracle, dip_oracle_key, dip_out;
	DipOptions dip_opts;
	auto *dip_cmd = attack_cmd->add_subcommand("dip", "SAT attack by differentiating input patterns");
	dip_cmd->add_option("--in", dip_in, "Locked BENCH file")->required();
	dip_cmd->add_option("--oracle", dip_oracle)->required();
	dip_cmd->add_option("--oracle-key", dip_oracle_key);
	dip_cmd->add_option("--max-iterations", dip_opts.max_iterations);
	dip_cmd->add_option("--time-limit", dip_opts.time_limit, "Seconds; 0 disables");
	dip_cmd->add_option("--budget-conflicts", dip_opts.conflict_budget);
	dip_cmd->add_option("--out", dip_out);

	// score
	std::string sc_solution, sc_key;
	auto *sc_cmd = app.add_subcommand("score", "Compare a solution with the true key");
	sc_cmd->add_option("--solution", sc_solution, "Solution JSON from an attack")->required();
	sc_cmd->add_option("--key", sc_key, "True key file")->required();

	// analyze
	auto *an_cmd = app.add_subcommand("analyze", "Post-attack analyses");
	an_cmd->require_subcommand(1);
	std::string cv_variants, cv_solution, cv_key, cv_mode = "unique";
	auto *cv_cmd = an_cmd->add_subcommand("convergence", "Ensemble score against netlist count");
	cv_cmd->add_option("--variants", cv_variants)->required();
	cv_cmd->add_option("--solution", cv_solution, "OL solution from attack ol --variants")->required();
	cv_cmd->add_option("--key", cv_key)->required();
	cv_cmd->add_option("--mode", cv_mode, "unique or all");
	std::string sl_variants, sl_solution;
	auto *sl_cmd = an_cmd->add_subcommand("slack", "Slack classes of the best-attacked variants");
	sl_cmd->add_option("--variants", sl_variants)->required();
	sl_cmd->add_option("--solution", sl_solution)->required();
	std::string cn_in, cn_output, cn_recipes = "all", cn_policy = "threshold", cn_certify = "sim";
	std::size_t cn_max = 0;
	std::uint64_t cn_seed = 1;
	auto *cn_cmd = an_cmd->add_subcommand("cone", "Resynthesize and attack one output's logic cone");
	cn_cmd->add_option("--in", cn_in)->required();
	cn_cmd->add_option("--output", cn_output, "Primary output name")->required();
	cn_cmd->add_option("--recipes", cn_recipes);
	cn_cmd->add_option("--max-recipes", cn_max);
	cn_cmd->add_option("--seed", cn_seed);
	cn_cmd->add_option("--policy", cn_policy);
	cn_cmd->add_option("--certify", cn_certify);

	// report
	std::string rp_dir, rp_format = "attack";
	auto *rp_cmd = app.add_subcommand("report", "Print tables from a pipeline output directory");
	rp_cmd->add_option("--dir", rp_dir)->required();
	rp_cmd->add_option("--table", rp_format, "attack, resynth or json");

	// run
	std::string run_config;
	auto *run_cmd = app.add_subcommand("run", "Run a full experiment from a config file");
	run_cmd->add_option("--config", run_config)->required();

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		int rc = app.exit(e);
		return rc == 0 ? 0 : 3;
	}

	try {
		if (*lock_cmd) {
			ExperimentConfig seeded;
			seeded.seed = lock_seed;
			apply_env_overrides(seeded);
			LockScheme scheme;
			try {
				scheme = lock_scheme_from_string(lock_scheme);
			} catch (const LockError &e) {
				throw ConfigError(e.what());
			}
			Netlist n = read_bench_file(lock_in);
			LockResult r = lock(n, scheme, lock_p, lock_p2, seeded.seed);
			write_bench_file(lock_out, r.netlist);
			write_key_file(lock_key, r.record.true_key);
			if (!lock_record.empty()) {
				json j = to_json(r.record);
				j.erase("true_key");
				emit(j, lock_record);
			}
			std::cout << "locked " << r.netlist.gates().size() << " gates, " << r.netlist.key_count()
				  << " key bits\n";
		} else if (*rs_cmd) {
			Netlist n = read_bench_file(rs_in);
			VariantOptions vo;
			vo.jobs = jobs;
			vo.certify = certify_from_string(rs_certify);
			VariantSet vs = generate_variants(n, recipes_from_option(rs_recipes, rs_max, rs_seed), vo);
			write_variant_set(vs, rs_out, "v");
			std::cout << vs.recipes.size() << " recipes, " << vs.variants.size() << " unique variants\n";
		} else if (*ol_cmd) {
			OlOptions o;
			o.policy = ol_policy_from_string(ol_policy);
			o.tau = ol_tau;
			json j;
			if (!ol_variants.empty()) {
				VariantSet vs = read_variant_set(ol_variants);
				std::vector<SolutionVector> sols = attack_netlists(variant_netlists(vs), o, jobs);
				EnsembleSolution e = merge_votes(sols);
				j = to_json(e);
				j["guesses"] = guess_string(guesses_of(e));
				j["per_variant"] = json::array();
				for (const SolutionVector &s : sols)
					j["per_variant"].push_back(to_json(s));
			} else if (!ol_in.empty()) {
				SolutionVector s = attack_netlist(read_bench_file(ol_in), o);
				j = to_json(s);
				j["guesses"] = guess_string(guesses_of(s));
			} else {
				throw ConfigError("attack ol needs --in or --variants");
			}
			emit(j, ol_out);
		} else if (*og_cmd) {
			Netlist locked = read_bench_file(og_in);
			Oracle oracle = make_oracle(og_oracle, og_oracle_key);
			EnsembleOgOptions eo;
			eo.jobs = jobs;
			eo.query.query_count = parse_queries(og_queries);
			eo.query.conflict_budget = og_budget;
			eo.query.seed = og_seed;
			std::optional<EnsembleSolution> ol;
			if (!og_ol.empty())
				ol = ensemble_from_json(read_json(og_ol));
			std::vector<Netlist> nets =
				og_variants.empty() ? std::vector<Netlist>{locked} : variant_netlists(read_variant_set(og_variants));
			KeySolution s = ensemble_og_attack(locked, nets, oracle, ol ? &*ol : nullptr, eo);
			json j = to_json(s);
			j["guesses"] = guess_string(s.guesses());
			emit(j, og_out);
		} else if (*dip_cmd) {
			Netlist locked = read_bench_file(dip_in);
			Oracle oracle = make_oracle(dip_oracle, dip_oracle_key);
			DipResult r = dip_attack(locked, oracle, dip_opts);
			json j = to_json(r);
			std::string g = r.success ? r.key.to_string() : std::string(locked.key_count(), 'X');
			j["guesses"] = g;
			emit(j, dip_out);
		} else if (*sc_cmd) {
			json j = read_json(sc_solution);
			if (!j.contains("guesses"))
				throw ConfigError(sc_solution + " has no guesses field");
			KeyVector truth = read_key_file(sc_key);
			std::vector<Guess> g = parse_guesses(j.at("guesses").get<std::string>());
			if (g.size() != truth.size())
				throw ConfigError("solution and key lengths differ");
			KeyScore s = score(g, truth);
			json out = to_json(s);
			out["p"] = truth.size();
			emit(out, "");
		} else if (*cv_cmd) {
			VariantSet vs = read_variant_set(cv_variants);
			ConvergenceMode mode = cv_mode == "all" ? ConvergenceMode::All : ConvergenceMode::Unique;
			if (cv_mode != "all" && cv_mode != "unique")
				throw ConfigError("--mode must be unique or all");
			auto inputs = convergence_inputs(vs, per_variant_solutions(read_json(cv_solution)), mode);
			auto series = convergence_analysis(inputs, read_key_file(cv_key));
			json s = json::array();
			for (const ConvergencePoint &c : series)
				s.push_back({c.n_used, c.dk, c.cdk});
			emit({{"mode", to_string(mode)},
			      {"min_n_for_final_dk", minimal_netlists_for_final_dk(series)},
			      {"series", s}},
			     "");
		} else if (*sl_cmd) {
			VariantSet vs = read_variant_set(sl_variants);
			emit(to_json(slack_analysis(vs, per_variant_solutions(read_json(sl_solution)))), "");
		} else if (*cn_cmd) {
			Netlist locked = read_bench_file(cn_in);
			OlOptions o;
			o.policy = ol_policy_from_string(cn_policy);
			VariantOptions vo;
			vo.jobs = jobs;
			vo.certify = certify_from_string(cn_certify);
			ConeResult c = cone_mode(locked, cn_output, recipes_from_option(cn_recipes, cn_max, cn_seed), o, vo);
			json j = to_json(c);
			j["seconds"] = c.seconds;
			emit(j, "");
		} else if (*rp_cmd) {
			fs::path dir = rp_dir;
			std::string file = rp_format == "attack"    ? "attack.csv"
					   : rp_format == "resynth" ? "resynth.csv"
					   : rp_format == "json"    ? "report.json"
								    : "";
			if (file.empty())
				throw ConfigError("--table must be attack, resynth or json");
			std::ifstream in(dir / file);
			if (!in)
				throw ConfigError("no " + file + " in " + rp_dir);
			std::cout << in.rdbuf();
		} else if (*run_cmd) {
			ExperimentConfig c = load_config(run_config);
			if (app.get_option("--jobs")->count() > 0)
				c.jobs = jobs;
			PipelineResult r = run_pipeline(c);
			std::cout << r.reports.size() << " runs written to " << r.output_dir.string() << '\n';
			for (const std::string &f : r.failures)
				std::cerr << "failed: " << f << '\n';
			return r.exit_code();
		}
	} catch (const ConfigError &e) {
		std::cerr << "config error: " << e.what() << '\n';
		return 3;
	} catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << '\n';
		return 1;
	}
	return 0;
}
