#include "locklab/og_attack.hpp"
#include "locklab/simulate.hpp"
#include "locklab/synth_passes.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <random>
#include <set>
#include <thread>

namespace locklab {

namespace {

std::vector<Lit> constant_lits(CnfFormula &f, const std::vector<bool> &bits)
{
	std::vector<Lit> out;
	for (bool b : bits)
		out.push_back(f.constant(b));
	return out;
}

void require_outputs_equal(CnfFormula &f, const std::vector<Lit> &lits, const Netlist &n, const std::vector<bool> &values)
{
	const auto outs = n.primary_outputs();
	for (std::size_t o = 0; o < outs.size(); ++o) {
		Lit l = lits[outs[o]] ^ !values[o];
		if (f.is_constant(l) && !f.constant_value(l))
			throw AttackError("oracle response contradicts the netlist for every key");
		f.add_clause({l});
	}
}

/// Fresh variable d with d <-> (a xor b).
Lit xor_lit(CnfFormula &f, Lit a, Lit b)
{
	Lit d = Lit::make(f.new_var());
	f.add_clause({~d, a, b});
	f.add_clause({~d, ~a, ~b});
	f.add_clause({d, ~a, b});
	f.add_clause({d, a, ~b});
	return d;
}

template <typename F> void run_pool(std::size_t count, unsigned jobs, F &&body)
{
	std::atomic<std::size_t> next{0};
	std::exception_ptr error;
	std::mutex m;
	auto worker = [&] {
		for (std::size_t i; (i = next.fetch_add(1)) < count;) {
			try {
				body(i);
			} catch (...) {
				std::lock_guard lock(m);
				if (!error)
					error = std::current_exception();
			}
		}
	};
	jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
	if (jobs == 1) {
		worker();
	} else {
		std::vector<std::thread> pool;
		for (unsigned j = 0; j < jobs; ++j)
			pool.emplace_back(worker);
		for (auto &t : pool)
			t.join();
	}
	if (error)
		std::rethrow_exception(error);
}

} // namespace

Oracle::Oracle(Netlist reference, KeyVector key)
    : reference_(std::move(reference)), key_(std::move(key)), unlocked_(apply_key(reference_, key_))
{
	if (key_.size() != reference_.key_count())
		throw AttackError("oracle key length does not match the netlist");
}

Oracle::Oracle(const Oracle &other) : reference_(other.reference_), key_(other.key_), unlocked_(other.unlocked_)
{
	std::lock_guard lock(other.mutex_);
	cache_ = other.cache_;
}

Oracle Oracle::from_original(Netlist original)
{
	if (original.key_count() != 0)
		throw AttackError("an original circuit must not have key inputs");
	return Oracle(std::move(original), KeyVector{});
}

Oracle Oracle::from_locked(Netlist locked, KeyVector key) { return Oracle(std::move(locked), std::move(key)); }

std::vector<bool> Oracle::query(const Query &q)
{
	if (q.size() != input_width())
		throw AttackError("query width " + std::to_string(q.size()) + " does not match " + std::to_string(input_width()) +
				  " inputs");
	std::lock_guard lock(mutex_);
	auto it = cache_.find(q);
	if (it != cache_.end())
		return it->second;
	auto r = simulate(reference_, q, key_);
	cache_.emplace(q, r);
	return r;
}

std::size_t Oracle::query_count() const
{
	std::lock_guard lock(mutex_);
	return cache_.size();
}

Netlist apply_key(const Netlist &n, const KeyVector &key) { return harden_all_keys(n, key.bits); }

SensitizationResult gen_sensitization_queries(const Netlist &locked, std::int64_t conflict_budget)
{
	SensitizationResult res;
	std::map<Query, std::size_t> index;
	const std::size_t pi = locked.primary_inputs().size();
	for (std::size_t i = 0; i < locked.key_count(); ++i) {
		CnfFormula f;
		std::vector<Lit> x, k;
		for (std::size_t j = 0; j < pi; ++j)
			x.push_back(Lit::make(f.new_var()));
		for (std::size_t j = 0; j < locked.key_count(); ++j)
			k.push_back(Lit::make(f.new_var()));
		std::vector<Lit> ka = k, kb = k;
		ka[i] = f.constant(false);
		kb[i] = f.constant(true);
		EncodeOptions eo;
		eo.simplify = true;
		auto a = encode_into(f, locked, x, ka, eo);
		auto b = encode_into(f, locked, x, kb, eo);
		std::vector<Lit> diff;
		for (NetId o : locked.primary_outputs())
			if (a[o] != b[o])
				diff.push_back(xor_lit(f, a[o], b[o]));
		if (diff.empty()) {
			res.skipped.push_back(i);
			continue;
		}
		f.add_clause(diff);
		SatOutcome out = solve(f, {}, conflict_budget);
		if (out.status == SatStatus::Unknown) {
			res.budget_exhausted.push_back(i);
			continue;
		}
		if (out.unsat()) {
			res.skipped.push_back(i);
			continue;
		}
		Query q;
		for (Lit l : x)
			q.push_back(out.value(l));
		auto [it, fresh] = index.try_emplace(q, res.queries.size());
		if (fresh)
			res.queries.push_back(q);
		res.sensitized.push_back({i, it->second});
	}
	return res;
}

std::vector<Query> gen_random_queries(const Netlist &locked, std::size_t count, std::uint64_t seed,
				      const std::vector<Query> &exclude)
{
	const std::size_t w = locked.primary_inputs().size();
	std::set<Query> seen(exclude.begin(), exclude.end());
	if (w < 63) {
		const std::size_t space = std::size_t{1} << w;
		const std::size_t left = space > seen.size() ? space - seen.size() : 0;
		count = std::min(count, left);
	}
	std::mt19937_64 rng(seed);
	std::vector<Query> out;
	while (out.size() < count) {
		Query q(w);
		for (std::size_t i = 0; i < w; ++i)
			q[i] = rng() & 1;
		if (seen.insert(q).second)
			out.push_back(std::move(q));
	}
	return out;
}

std::string to_string(BitProof b)
{
	switch (b) {
	case BitProof::Proven:
		return "proven";
	case BitProof::Unproven:
		return "unproven";
	case BitProof::Budget:
		return "budget";
	}
	return "unproven";
}

KeyConstraints::KeyConstraints(const Netlist &locked, std::int64_t conflict_budget) : locked_(locked), ctx_(conflict_budget)
{
	for (std::size_t i = 0; i < locked.key_count(); ++i)
		keys_.push_back(Lit::make(ctx_.formula().new_var()));
}

void KeyConstraints::derive_constraints(const Query &q, const std::vector<bool> &response)
{
	if (q.size() != locked_.primary_inputs().size())
		throw AttackError("query width does not match the netlist");
	if (response.size() != locked_.primary_outputs().size())
		throw AttackError("response width " + std::to_string(response.size()) + " does not match " +
				  std::to_string(locked_.primary_outputs().size()) + " outputs");
	CnfFormula &f = ctx_.formula();
	EncodeOptions eo;
	eo.simplify = true;
	auto lits = encode_into(f, locked_, constant_lits(f, q), keys_, eo);
	require_outputs_equal(f, lits, locked_, response);
	++copies_;
}

KeyVector KeyConstraints::key_of(const SatOutcome &o) const
{
	KeyVector k;
	for (Lit l : keys_)
		k.bits.push_back(o.value(l));
	return k;
}

std::optional<KeyVector> KeyConstraints::solve_candidate()
{
	SatOutcome o = ctx_.solve();
	if (o.unsat())
		throw AttackError("key constraints are unsatisfiable");
	if (!o.sat())
		return std::nullopt;
	return key_of(o);
}

BitProof KeyConstraints::prove_bit(std::size_t i, bool value)
{
	if (i >= keys_.size())
		throw AttackError("key index out of range");
	SatOutcome o = ctx_.solve({keys_[i] ^ value});
	if (o.unsat())
		return BitProof::Proven;
	if (!o.sat())
		return BitProof::Budget;
	alternative_ = key_of(o);
	return BitProof::Unproven;
}

std::vector<KeyVector> KeyConstraints::enumerate_keys(std::size_t limit)
{
	CnfFormula &f = ctx_.formula();
	Lit act = Lit::make(f.new_var());
	std::vector<KeyVector> out;
	while (out.size() < limit) {
		SatOutcome o = ctx_.solve({act});
		if (!o.sat())
			break;
		KeyVector k = key_of(o);
		std::vector<Lit> block{~act};
		for (std::size_t i = 0; i < keys_.size(); ++i)
			block.push_back(keys_[i] ^ k.bits[i]);
		if (keys_.empty()) {
			out.push_back(k);
			break;
		}
		f.add_clause(block);
		out.push_back(std::move(k));
	}
	f.add_clause({~act});
	return out;
}

std::size_t ProvenSolution::proven_count() const
{
	return static_cast<std::size_t>(
	    std::count_if(bits.begin(), bits.end(), [](const ProvenBit &b) { return b.status == BitProof::Proven; }));
}

QueryPlan plan_queries(const Netlist &locked, const QueryAttackOptions &options)
{
	QueryPlan plan;
	if (options.queries) {
		plan.queries = *options.queries;
		return plan;
	}
	const std::size_t target = options.query_count ? options.query_count : 2 * locked.key_count();
	if (target == 0)
		return plan;
	plan.sensitization = gen_sensitization_queries(locked, options.conflict_budget);
	plan.queries = plan.sensitization.queries;
	if (plan.queries.size() > target)
		plan.queries.resize(target);
	auto random = gen_random_queries(locked, target - plan.queries.size(), options.seed, plan.queries);
	plan.random_count = random.size();
	plan.queries.insert(plan.queries.end(), random.begin(), random.end());
	return plan;
}

ProvenSolution prove_with_queries(const Netlist &netlist, const std::vector<Query> &queries,
				  const std::vector<std::vector<bool>> &responses, std::int64_t conflict_budget)
{
	if (queries.size() != responses.size())
		throw AttackError("query and response counts differ");
	KeyConstraints c(netlist, conflict_budget);
	for (std::size_t q = 0; q < queries.size(); ++q)
		c.derive_constraints(queries[q], responses[q]);
	ProvenSolution s;
	s.queries = queries.size();
	s.bits.resize(netlist.key_count());
	s.candidate = c.solve_candidate();
	if (!s.candidate) {
		for (auto &b : s.bits)
			b.status = BitProof::Budget;
		return s;
	}
	std::vector<KeyVector> alternatives;
	for (std::size_t i = 0; i < s.bits.size(); ++i) {
		const bool v = s.candidate->bits[i];
		s.bits[i].candidate = v;
		// A known model with the opposite value already refutes a proof.
		bool refuted = std::any_of(alternatives.begin(), alternatives.end(), [&](const KeyVector &k) { return k.bits[i] != v; });
		if (refuted) {
			s.bits[i].status = BitProof::Unproven;
			continue;
		}
		s.bits[i].status = c.prove_bit(i, v);
		if (s.bits[i].status == BitProof::Unproven)
			alternatives.push_back(*c.alternative());
	}
	return s;
}

ProvenSolution query_attack(const Netlist &locked, Oracle &oracle, const QueryAttackOptions &options)
{
	if (oracle.input_width() != locked.primary_inputs().size() || oracle.output_width() != locked.primary_outputs().size())
		throw AttackError("oracle interface does not match the locked netlist");
	QueryPlan plan = plan_queries(locked, options);
	std::vector<std::vector<bool>> responses;
	for (const Query &q : plan.queries)
		responses.push_back(oracle.query(q));
	return prove_with_queries(locked, plan.queries, responses, options.conflict_budget);
}

std::string to_string(Provenance p)
{
	switch (p) {
	case Provenance::Proven:
		return "proven";
	case Provenance::OlGuess:
		return "ol-guess";
	case Provenance::Unknown:
		return "unknown";
	}
	return "unknown";
}

std::vector<Guess> KeySolution::guesses() const
{
	std::vector<Guess> g;
	for (const auto &b : bits)
		g.push_back(b.value);
	return g;
}

std::size_t KeySolution::proven_count() const
{
	return static_cast<std::size_t>(
	    std::count_if(bits.begin(), bits.end(), [](const FinalBit &b) { return b.provenance == Provenance::Proven; }));
}

KeySolution combine_proofs(const std::vector<ProvenSolution> &per_variant, const EnsembleSolution *ol)
{
	if (per_variant.empty())
		throw AttackError("no variant results to combine");
	const std::size_t p = per_variant.front().bits.size();
	if (ol && ol->bits.size() != p)
		throw AttackError("OL solution length does not match the key length");
	KeySolution out;
	out.bits.resize(p);
	for (const ProvenSolution &s : per_variant) {
		if (s.bits.size() != p)
			throw AttackError("variant key lengths differ");
		for (std::size_t i = 0; i < p; ++i) {
			FinalBit &f = out.bits[i];
			const ProvenBit &b = s.bits[i];
			f.budget_flag = f.budget_flag || b.status == BitProof::Budget;
			if (b.status != BitProof::Proven)
				continue;
			Guess g = b.candidate ? Guess::One : Guess::Zero;
			if (f.provenance == Provenance::Proven && f.value != g)
				throw AttackError("variants prove opposite values for key bit " + std::to_string(i));
			f.value = g;
			f.provenance = Provenance::Proven;
			f.proving_variants++;
		}
	}
	for (std::size_t i = 0; i < p; ++i) {
		FinalBit &f = out.bits[i];
		if (f.provenance == Provenance::Proven || !ol)
			continue;
		if (ol->bits[i].merged.value != Guess::Unknown) {
			f.value = ol->bits[i].merged.value;
			f.provenance = Provenance::OlGuess;
		}
	}
	out.per_variant = per_variant;
	return out;
}

KeySolution ensemble_og_attack(const Netlist &locked, const std::vector<Netlist> &variants, Oracle &oracle,
			       const EnsembleSolution *ol, const EnsembleOgOptions &options)
{
	for (const Netlist &v : variants)
		if (v.primary_inputs().size() != locked.primary_inputs().size() ||
		    v.primary_outputs().size() != locked.primary_outputs().size() || v.key_count() != locked.key_count())
			throw AttackError("variant interface does not match the locked netlist");
	if (oracle.input_width() != locked.primary_inputs().size() || oracle.output_width() != locked.primary_outputs().size())
		throw AttackError("oracle interface does not match the locked netlist");
	QueryPlan plan = plan_queries(locked, options.query);
	std::vector<std::vector<bool>> responses;
	for (const Query &q : plan.queries)
		responses.push_back(oracle.query(q));
	std::vector<ProvenSolution> per(variants.size());
	run_pool(variants.size(), options.jobs, [&](std::size_t i) {
		per[i] = prove_with_queries(variants[i], plan.queries, responses, options.query.conflict_budget);
	});
	KeySolution s = combine_proofs(per, ol);
	s.queries = plan.queries;
	s.oracle_queries = oracle.query_count();
	return s;
}

DipResult dip_attack(const Netlist &locked, Oracle &oracle, const DipOptions &options)
{
	if (oracle.input_width() != locked.primary_inputs().size() || oracle.output_width() != locked.primary_outputs().size())
		throw AttackError("oracle interface does not match the locked netlist");
	DipResult res;
	const auto start = std::chrono::steady_clock::now();
	SatContext ctx(options.conflict_budget);
	CnfFormula &f = ctx.formula();
	std::vector<Lit> x, ka, kb;
	for (std::size_t i = 0; i < locked.primary_inputs().size(); ++i)
		x.push_back(Lit::make(f.new_var()));
	for (std::size_t i = 0; i < locked.key_count(); ++i) {
		ka.push_back(Lit::make(f.new_var()));
		kb.push_back(Lit::make(f.new_var()));
	}
	Lit act = Lit::make(f.new_var());
	if (locked.key_count() > 0) {
		auto a = encode_into(f, locked, x, ka);
		auto b = encode_into(f, locked, x, kb);
		std::vector<Lit> diff{~act};
		for (NetId o : locked.primary_outputs())
			diff.push_back(xor_lit(f, a[o], b[o]));
		f.add_clause(diff);
	} else {
		f.add_clause({~act});
	}
	EncodeOptions eo;
	eo.simplify = true;
	for (;;) {
		if (options.time_limit > 0 &&
		    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > options.time_limit) {
			res.timeout = true;
			return res;
		}
		SatOutcome o = ctx.solve({act});
		if (o.status == SatStatus::Unknown) {
			res.timeout = true;
			return res;
		}
		if (o.unsat())
			break;
		if (res.iterations >= options.max_iterations) {
			res.timeout = true;
			return res;
		}
		Query q;
		for (Lit l : x)
			q.push_back(o.value(l));
		auto resp = oracle.query(q);
		for (const auto *keys : {&ka, &kb}) {
			auto lits = encode_into(f, locked, constant_lits(f, q), *keys, eo);
			require_outputs_equal(f, lits, locked, resp);
		}
		++res.iterations;
	}
	SatOutcome fin = ctx.solve();
	if (!fin.sat()) {
		res.timeout = fin.status == SatStatus::Unknown;
		return res;
	}
	for (Lit l : ka)
		res.key.bits.push_back(fin.value(l));
	res.verified = check_equivalence(apply_key(locked, res.key), oracle.unlocked(), MiterSharing::InputsOnly).verdict ==
		       Equivalence::Equivalent;
	res.success = res.verified;
	return res;
}

KeyScore score(const KeySolution &s, const KeyVector &truth) { return score(s.guesses(), truth); }

nlohmann::json to_json(const ProvenSolution &s)
{
	nlohmann::json j;
	j["queries"] = s.queries;
	j["candidate"] = s.candidate ? nlohmann::json(s.candidate->to_string()) : nlohmann::json(nullptr);
	j["proven"] = s.proven_count();
	for (const auto &b : s.bits)
		j["bits"].push_back({{"candidate", b.candidate ? 1 : 0}, {"status", to_string(b.status)}});
	return j;
}

nlohmann::json to_json(const KeySolution &s)
{
	nlohmann::json j;
	j["bits"] = nlohmann::json::array();
	for (const auto &b : s.bits)
		j["bits"].push_back({{"value", to_string(b.value)},
				     {"provenance", to_string(b.provenance)},
				     {"proven", b.provenance == Provenance::Proven},
				     {"budget_flag", b.budget_flag},
				     {"proving_variants", b.proving_variants}});
	j["oracle_queries"] = s.oracle_queries;
	j["variants"] = s.per_variant.size();
	j["proven"] = s.proven_count();
	nlohmann::json log = nlohmann::json::array();
	for (const Query &q : s.queries) {
		std::string t;
		for (bool b : q)
			t += b ? '1' : '0';
		log.push_back(t);
	}
	j["query_log"] = log;
	return j;
}

nlohmann::json to_json(const DipResult &r)
{
	return {{"success", r.success},
		{"timeout", r.timeout},
		{"iterations", r.iterations},
		{"verified", r.verified},
		{"key", r.key.to_string()}};
}

} // namespace locklab
