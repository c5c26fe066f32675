#include "locklab/harness.hpp"

#include <unistd.h>

#include <iomanip>
#include <sstream>
#include <thread>

namespace locklab {

namespace {

using nlohmann::json;

json score_json(const std::optional<KeyScore> &s) { return s ? to_json(*s) : json(); }

json summary_json(const StatSummary &s) { return {{"mean", s.mean}, {"stddev", s.stddev}}; }

std::string ratio(const std::optional<KeyScore> &s)
{
	return s ? std::to_string(s->cdk) + "/" + std::to_string(s->dk) : "-";
}

std::string num(double v)
{
	std::ostringstream o;
	o << std::fixed << std::setprecision(3) << v;
	return o.str();
}

void check_score(const std::optional<KeyScore> &s, std::size_t p, const char *what, std::vector<std::string> &out)
{
	if (!s)
		return;
	if (s->cdk > s->dk)
		out.push_back(std::string(what) + ": cdk > dk");
	if (s->dk > p)
		out.push_back(std::string(what) + ": dk > p");
}

} // namespace

std::vector<std::string> check_report_invariants(const AttackReport &r)
{
	std::vector<std::string> out;
	check_score(r.ol_single, r.p, "ol single", out);
	check_score(r.ol_ensemble, r.p, "ol ensemble", out);
	check_score(r.og_single, r.p, "og single", out);
	check_score(r.og_ensemble, r.p, "og ensemble", out);
	check_score(r.cone_score, r.p, "cone", out);
	if (r.og && r.og_ensemble && r.og->proven > r.og_ensemble->dk)
		out.push_back("og: proven > dk");
	if (r.og && r.og_single && r.og->single_proven > r.og_single->dk)
		out.push_back("og single: proven > dk");
	for (const ConvergencePoint &c : r.convergence)
		if (c.cdk > c.dk || c.dk > r.p)
			out.push_back("convergence point " + std::to_string(c.n_used) + " out of range");
	if (r.slack) {
		const SlackReport &s = *r.slack;
		if (s.top_non_positive + s.top_positive != s.top_size)
			out.push_back("slack: top buckets do not sum to the top size");
		if (s.all_non_positive + s.all_positive != s.population)
			out.push_back("slack: population buckets do not sum to the population");
		if (s.top_unconstrained > s.top_positive || s.all_unconstrained > s.all_positive)
			out.push_back("slack: unconstrained count exceeds class two");
	}
	return out;
}

json to_json(const SlackReport &s)
{
	return {{"population", s.population},
		{"top_size", s.top_size},
		{"top", {{"non_positive", s.top_non_positive}, {"positive", s.top_positive}, {"unconstrained", s.top_unconstrained}}},
		{"all", {{"non_positive", s.all_non_positive}, {"positive", s.all_positive}, {"unconstrained", s.all_unconstrained}}},
		{"top_indices", s.top_indices}};
}

json to_json(const ConeResult &c)
{
	std::string g;
	for (Guess x : c.guesses)
		g += to_string(x);
	return {{"output", c.output},
		{"whole_gate_count", c.whole_gate_count},
		{"cone_gate_count", c.cone_gate_count},
		{"key_indices", c.key_indices},
		{"recipes", c.recipes},
		{"unique_variants", c.unique_variants},
		{"guesses", g}};
}

json to_json(const AttackReport &r)
{
	json j;
	j["circuit"] = r.circuit;
	j["scheme"] = r.scheme;
	j["p"] = r.p;
	j["gate_count"] = r.gate_count;
	j["recipes"] = r.recipes;
	j["unique_variants"] = r.unique_variant_count;
	j["diversity"] = {{"gate_count", summary_json(r.diversity.gate_count)},
			  {"depth", summary_json(r.diversity.depth)},
			  {"literal_count", summary_json(r.diversity.literal_count)},
			  {"area", summary_json(r.diversity.area)},
			  {"power", summary_json(r.diversity.power)}};
	if (r.ol_ensemble)
		j["ol"] = {{"single", score_json(r.ol_single)}, {"ensemble", score_json(r.ol_ensemble)}};
	if (r.og)
		j["og"] = {{"single", score_json(r.og_single)},
			   {"ensemble", score_json(r.og_ensemble)},
			   {"proven", r.og->proven},
			   {"single_proven", r.og->single_proven},
			   {"queries", r.og->queries},
			   {"oracle_queries", r.og->oracle_queries}};
	if (r.dip)
		j["dip"] = {{"success", r.dip->success},
			    {"timeout", r.dip->timeout},
			    {"iterations", r.dip->iterations},
			    {"verified", r.dip->verified}};
	if (!r.convergence.empty()) {
		json series = json::array();
		for (const ConvergencePoint &c : r.convergence)
			series.push_back({c.n_used, c.dk, c.cdk});
		j["convergence"] = {{"min_n_for_final_dk", r.convergence_min_n}, {"series", series}};
	}
	if (r.slack)
		j["slack"] = to_json(*r.slack);
	if (r.cone) {
		j["cone"] = to_json(*r.cone);
		j["cone"]["score"] = score_json(r.cone_score);
	}
	j["errors"] = r.errors;
	return j;
}

json report_json(const std::vector<AttackReport> &reports)
{
	json j;
	j["reports"] = json::array();
	for (const AttackReport &r : reports)
		j["reports"].push_back(to_json(r));
	return j;
}

json timing_json(const std::vector<AttackReport> &reports)
{
	char host[256] = {};
	gethostname(host, sizeof host - 1);
	json j;
	j["machine"] = {{"host", host}, {"hardware_threads", std::thread::hardware_concurrency()}, {"compiler", __VERSION__}};
	j["runs"] = json::array();
	for (const AttackReport &r : reports)
		j["runs"].push_back({{"circuit", r.circuit}, {"scheme", r.scheme}, {"seconds", r.wall_times}});
	return j;
}

std::string resynth_table_csv(const std::vector<AttackReport> &reports)
{
	std::ostringstream o;
	o << "circuit,scheme,p,gates,recipes,unique,gate_mean,gate_std,depth_mean,depth_std,area_mean,area_std,power_mean,"
	     "power_std\n";
	for (const AttackReport &r : reports) {
		const DiversityReport &d = r.diversity;
		o << r.circuit << ',' << r.scheme << ',' << r.p << ',' << r.gate_count << ',' << r.recipes << ','
		  << r.unique_variant_count << ',' << num(d.gate_count.mean) << ',' << num(d.gate_count.stddev) << ','
		  << num(d.depth.mean) << ',' << num(d.depth.stddev) << ',' << num(d.area.mean) << ','
		  << num(d.area.stddev) << ',' << num(d.power.mean) << ',' << num(d.power.stddev) << '\n';
	}
	return o.str();
}

std::string attack_table_csv(const std::vector<AttackReport> &reports)
{
	std::ostringstream o;
	o << "circuit,scheme,p,ol_single,ol_ensemble,og_single,og_ensemble,og_proven,og_queries,dip_success,dip_iterations,"
	     "cone,errors\n";
	for (const AttackReport &r : reports) {
		o << r.circuit << ',' << r.scheme << ',' << r.p << ',' << ratio(r.ol_single) << ',' << ratio(r.ol_ensemble)
		  << ',' << ratio(r.og_single) << ',' << ratio(r.og_ensemble) << ','
		  << (r.og ? std::to_string(r.og->proven) : "-") << ',' << (r.og ? std::to_string(r.og->queries) : "-")
		  << ',' << (r.dip ? (r.dip->success ? "yes" : "no") : "-") << ','
		  << (r.dip ? std::to_string(r.dip->iterations) : "-") << ',' << ratio(r.cone_score) << ','
		  << r.errors.size() << '\n';
	}
	return o.str();
}

} // namespace locklab
