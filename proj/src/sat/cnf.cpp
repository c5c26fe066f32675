#include "locklab/cnf.hpp"
#include "locklab/simulate.hpp"

#include <algorithm>
#include <bit>
#include <random>
#include <sstream>
#include <unordered_map>

namespace locklab {

void CnfFormula::add_clause(std::span<const Lit> lits)
{
	if (lits.empty())
		throw CnfError("empty clause");
	std::vector<Lit> clause;
	clause.reserve(lits.size());
	for (Lit l : lits) {
		if (l.var() < 0 || l.var() >= num_vars_)
			throw CnfError("literal references unknown variable " + std::to_string(l.var()));
		if (is_constant(l)) {
			if (constant_value(l))
				return;
			continue;
		}
		clause.push_back(l);
	}
	if (clause.empty())
		clause.push_back(constant(false));
	clauses_.push_back(std::move(clause));
}

Lit CnfFormula::constant(bool value)
{
	if (true_var_ < 0) {
		true_var_ = new_var();
		clauses_.push_back({Lit::make(true_var_)});
	}
	return Lit::make(true_var_, !value);
}

void CnfFormula::bind(const std::string &instance, const std::string &net, Lit lit)
{
	net_to_var_[instance][net] = lit;
}

std::optional<Lit> CnfFormula::lookup(const std::string &instance, const std::string &net) const
{
	auto it = net_to_var_.find(instance);
	if (it == net_to_var_.end())
		return std::nullopt;
	auto jt = it->second.find(net);
	if (jt == it->second.end())
		return std::nullopt;
	return jt->second;
}

std::string CnfFormula::to_dimacs() const
{
	std::ostringstream os;
	os << "p cnf " << num_vars_ << " " << clauses_.size() << "\n";
	for (const auto &c : clauses_) {
		for (Lit l : c)
			os << l.dimacs() << " ";
		os << "0\n";
	}
	return os.str();
}

std::size_t tseitin_clause_count(GateKind kind, std::size_t fanins)
{
	switch (kind) {
	case GateKind::And:
	case GateKind::Or:
	case GateKind::Nand:
	case GateKind::Nor:
		return fanins + 1;
	case GateKind::Not:
	case GateKind::Buf:
		return 2;
	case GateKind::Xor:
	case GateKind::Xnor:
		return 4 * (fanins - 1);
	case GateKind::Mux:
		return 4;
	case GateKind::Const0:
	case GateKind::Const1:
		return 1;
	}
	return 0;
}

namespace {

class GateEncoder
{
      public:
	GateEncoder(CnfFormula &f, bool simplify) : f_(f), simplify_(simplify) {}

	Lit conj(std::vector<Lit> ins)
	{
		if (simplify_) {
			std::vector<Lit> kept;
			for (Lit l : ins) {
				if (f_.is_constant(l)) {
					if (!f_.constant_value(l))
						return f_.constant(false);
					continue;
				}
				kept.push_back(l);
			}
			std::sort(kept.begin(), kept.end());
			kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
			for (std::size_t i = 1; i < kept.size(); ++i)
				if (kept[i] == ~kept[i - 1])
					return f_.constant(false);
			if (kept.empty())
				return f_.constant(true);
			if (kept.size() == 1)
				return kept[0];
			ins = std::move(kept);
		}
		Lit o = Lit::make(f_.new_var());
		std::vector<Lit> big{o};
		for (Lit a : ins) {
			f_.add_clause({~o, a});
			big.push_back(~a);
		}
		f_.add_clause(big);
		return o;
	}

	Lit xor2(Lit a, Lit b)
	{
		if (simplify_) {
			if (f_.is_constant(a))
				return f_.constant_value(a) ? ~b : b;
			if (f_.is_constant(b))
				return f_.constant_value(b) ? ~a : a;
			if (a == b)
				return f_.constant(false);
			if (a == ~b)
				return f_.constant(true);
		}
		Lit o = Lit::make(f_.new_var());
		f_.add_clause({~o, a, b});
		f_.add_clause({~o, ~a, ~b});
		f_.add_clause({o, ~a, b});
		f_.add_clause({o, a, ~b});
		return o;
	}

	Lit mux(Lit s, Lit d0, Lit d1)
	{
		if (simplify_) {
			if (f_.is_constant(s))
				return f_.constant_value(s) ? d1 : d0;
			if (d0 == d1)
				return d0;
		}
		Lit o = Lit::make(f_.new_var());
		f_.add_clause({s, ~d0, o});
		f_.add_clause({s, d0, ~o});
		f_.add_clause({~s, ~d1, o});
		f_.add_clause({~s, d1, ~o});
		return o;
	}

	Lit copy(Lit a, bool invert)
	{
		if (simplify_)
			return a ^ invert;
		Lit o = Lit::make(f_.new_var());
		f_.add_clause({~o, a ^ invert});
		f_.add_clause({o, ~(a ^ invert)});
		return o;
	}

	Lit constant(bool v)
	{
		if (simplify_)
			return f_.constant(v);
		Lit o = Lit::make(f_.new_var());
		f_.add_clause({o ^ !v});
		return o;
	}

      private:
	CnfFormula &f_;
	bool simplify_;
};

std::vector<Lit> negate_all(std::vector<Lit> v)
{
	for (auto &l : v)
		l = ~l;
	return v;
}

} // namespace

std::vector<Lit> encode_into(CnfFormula &f, const Netlist &n, std::span<const Lit> inputs, std::span<const Lit> keys,
			     const EncodeOptions &options)
{
	if (inputs.size() != n.primary_inputs().size() || keys.size() != n.key_count())
		throw CnfError("interface literal count mismatch while encoding");
	std::vector<Lit> lit(n.net_count());
	for (std::size_t i = 0; i < inputs.size(); ++i)
		lit[n.primary_inputs()[i]] = inputs[i];
	for (std::size_t i = 0; i < keys.size(); ++i)
		lit[n.key_inputs()[i]] = keys[i];
	GateEncoder enc(f, options.simplify);
	std::vector<Lit> ins;
	for (std::uint32_t gi : n.topo_order()) {
		const Gate &g = n.gate(gi);
		ins.clear();
		for (NetId x : g.fanins)
			ins.push_back(lit[x]);
		Lit out;
		switch (g.kind) {
		case GateKind::And:
			out = enc.conj(ins);
			break;
		case GateKind::Nand:
			out = ~enc.conj(ins);
			break;
		case GateKind::Or:
			out = ~enc.conj(negate_all(ins));
			break;
		case GateKind::Nor:
			out = enc.conj(negate_all(ins));
			break;
		case GateKind::Not:
			out = enc.copy(ins[0], true);
			break;
		case GateKind::Buf:
			out = enc.copy(ins[0], false);
			break;
		case GateKind::Xor:
		case GateKind::Xnor:
			out = ins[0];
			for (std::size_t j = 1; j < ins.size(); ++j)
				out = enc.xor2(out, ins[j]);
			if (g.kind == GateKind::Xnor)
				out = ~out;
			break;
		case GateKind::Mux:
			out = enc.mux(ins[0], ins[1], ins[2]);
			break;
		case GateKind::Const0:
			out = enc.constant(false);
			break;
		case GateKind::Const1:
			out = enc.constant(true);
			break;
		}
		lit[g.output] = out;
	}
	if (!options.instance.empty())
		for (NetId id = 0; id < n.net_count(); ++id)
			f.bind(options.instance, n.net_name(id), lit[id]);
	return lit;
}

CnfFormula tseitin_encode(const Netlist &n, const std::string &instance)
{
	CnfFormula f;
	std::vector<Lit> ins, keys;
	for (std::size_t i = 0; i < n.primary_inputs().size(); ++i)
		ins.push_back(Lit::make(f.new_var()));
	for (std::size_t i = 0; i < n.key_count(); ++i)
		keys.push_back(Lit::make(f.new_var()));
	EncodeOptions opt;
	opt.instance = instance;
	encode_into(f, n, ins, keys, opt);
	return f;
}

namespace {

void check_interfaces(const Netlist &a, const Netlist &b, MiterSharing share)
{
	auto names = [](const Netlist &n, std::span<const NetId> ids) {
		std::vector<std::string> v;
		for (NetId id : ids)
			v.push_back(n.net_name(id));
		return v;
	};
	if (names(a, a.primary_inputs()) != names(b, b.primary_inputs()))
		throw CnfError("miter: primary input interfaces differ");
	if (names(a, a.primary_outputs()) != names(b, b.primary_outputs()))
		throw CnfError("miter: primary output interfaces differ");
	if (share == MiterSharing::InputsAndKeys && a.key_count() != b.key_count())
		throw CnfError("miter: key interfaces differ");
}

} // namespace

Miter build_miter(const Netlist &a, const Netlist &b, MiterSharing share)
{
	check_interfaces(a, b, share);
	Miter m;
	CnfFormula &f = m.formula;
	for (std::size_t i = 0; i < a.primary_inputs().size(); ++i)
		m.inputs.push_back(Lit::make(f.new_var()));
	for (std::size_t i = 0; i < a.key_count(); ++i)
		m.keys_a.push_back(Lit::make(f.new_var()));
	if (share == MiterSharing::InputsAndKeys) {
		m.keys_b = m.keys_a;
	} else {
		for (std::size_t i = 0; i < b.key_count(); ++i)
			m.keys_b.push_back(Lit::make(f.new_var()));
	}
	EncodeOptions oa{false, "a"}, ob{false, "b"};
	auto la = encode_into(f, a, m.inputs, m.keys_a, oa);
	auto lb = encode_into(f, b, m.inputs, m.keys_b, ob);
	std::vector<Lit> any;
	for (std::size_t i = 0; i < a.primary_outputs().size(); ++i) {
		Lit x = la[a.primary_outputs()[i]];
		Lit y = lb[b.primary_outputs()[i]];
		m.outputs_a.push_back(x);
		m.outputs_b.push_back(y);
		Lit d = Lit::make(f.new_var());
		f.add_clause({~d, x, y});
		f.add_clause({~d, ~x, ~y});
		f.add_clause({d, ~x, y});
		f.add_clause({d, x, ~y});
		any.push_back(d);
	}
	if (any.empty()) {
		// No outputs: nothing can differ.
		Var v = f.new_var();
		f.add_clause({Lit::make(v)});
		f.add_clause({Lit::make(v, true)});
	} else {
		f.add_clause(any);
	}
	return m;
}

SatOutcome solve(const CnfFormula &f, std::span<const Lit> assumptions, std::int64_t conflict_budget)
{
	Solver s;
	s.reserve_vars(f.num_vars());
	s.set_conflict_budget(conflict_budget);
	for (const auto &c : f.clauses())
		if (!s.add_clause(c))
			break;
	SatOutcome out;
	out.status = s.solve(assumptions);
	if (out.sat())
		out.model = s.model();
	return out;
}

bool satisfies(const CnfFormula &f, const std::vector<bool> &model)
{
	if (model.size() < static_cast<std::size_t>(f.num_vars()))
		return false;
	for (const auto &c : f.clauses()) {
		bool ok = false;
		for (Lit l : c)
			if (model[l.var()] != l.negated()) {
				ok = true;
				break;
			}
		if (!ok)
			return false;
	}
	return true;
}

SatContext::SatContext(std::int64_t conflict_budget) { solver_.set_conflict_budget(conflict_budget); }

void SatContext::sync()
{
	solver_.reserve_vars(formula_.num_vars());
	const auto &cls = formula_.clauses();
	for (; synced_ < cls.size(); ++synced_)
		solver_.add_clause(cls[synced_]);
}

SatOutcome SatContext::solve(std::span<const Lit> assumptions)
{
	sync();
	SatOutcome out;
	out.status = solver_.solve(assumptions);
	if (out.sat())
		out.model = solver_.model();
	return out;
}

namespace {

/**
 * SAT sweeping: nets of `b` whose simulation signature matches a net of `a`
 * (up to polarity) are proven equal bottom-up under a small conflict budget,
 * and every proven pair is kept as clauses. The final output miter then runs
 * on a formula where most of `b` is already tied to `a`. Added clauses are
 * implied by the circuits, so verdicts and counterexamples are exact.
 */
EquivalenceResult sweep_miter(const Netlist &a, const Netlist &b, std::int64_t conflict_budget)
{
	constexpr std::size_t kWords = 4;
	constexpr std::int64_t kPairBudget = 300;
	constexpr int kTriesPerNet = 3;

	SatContext ctx(conflict_budget);
	CnfFormula &f = ctx.formula();
	std::vector<Lit> in, keys;
	for (std::size_t i = 0; i < a.primary_inputs().size(); ++i)
		in.push_back(Lit::make(f.new_var()));
	for (std::size_t i = 0; i < a.key_count(); ++i)
		keys.push_back(Lit::make(f.new_var()));
	const std::vector<Lit> la = encode_into(f, a, in, keys);
	const std::vector<Lit> lb = encode_into(f, b, in, keys);

	// Signature words per net: kWords random rounds plus one word of counterexamples.
	const std::size_t W = kWords + 1;
	std::vector<std::uint64_t> sa(a.net_count() * W), sb(b.net_count() * W);
	std::mt19937_64 rng(0x5eedu);
	auto store = [&](std::size_t w, std::span<const std::uint64_t> iw, std::span<const std::uint64_t> kw) {
		auto va = simulate_words(a, iw, kw);
		auto vb = simulate_words(b, iw, kw);
		for (std::size_t n = 0; n < va.size(); ++n)
			sa[n * W + w] = va[n];
		for (std::size_t n = 0; n < vb.size(); ++n)
			sb[n * W + w] = vb[n];
	};
	for (std::size_t w = 0; w < kWords; ++w)
		store(w, random_words(rng, in.size()), random_words(rng, keys.size()));
	std::vector<std::uint64_t> cex_in(in.size(), 0), cex_keys(keys.size(), 0);
	std::size_t cex_count = 0;
	store(kWords, cex_in, cex_keys);
	auto add_cex = [&](const SatOutcome &o) {
		const std::size_t bit = cex_count++ % 64;
		for (std::size_t i = 0; i < in.size(); ++i)
			cex_in[i] = (cex_in[i] & ~(1ULL << bit)) | (std::uint64_t(o.value(in[i])) << bit);
		for (std::size_t i = 0; i < keys.size(); ++i)
			cex_keys[i] = (cex_keys[i] & ~(1ULL << bit)) | (std::uint64_t(o.value(keys[i])) << bit);
		store(kWords, cex_in, cex_keys);
	};

	// Polarity-normalized hash over the random words only; the counterexample
	// word is checked at match time, so classes never need rebuilding.
	auto signature = [&](const std::vector<std::uint64_t> &sim, NetId n) {
		const std::uint64_t flip = (sim[n * W] & 1) ? ~0ULL : 0;
		std::uint64_t h = 0xcbf29ce484222325ULL;
		for (std::size_t w = 0; w < kWords; ++w)
			h = (h ^ (sim[n * W + w] ^ flip)) * 0x100000001b3ULL;
		return h;
	};
	std::unordered_map<std::uint64_t, std::vector<NetId>> classes;
	auto enroll = [&](NetId n) {
		if (!f.is_constant(la[n]))
			classes[signature(sa, n)].push_back(n);
	};
	for (NetId n : a.primary_inputs())
		enroll(n);
	for (NetId n : a.key_inputs())
		enroll(n);
	for (std::uint32_t gi : a.topo_order())
		enroll(a.gate(gi).output);

	for (std::uint32_t gi : b.topo_order()) {
		const NetId y = b.gate(gi).output;
		if (f.is_constant(lb[y]))
			continue;
		auto it = classes.find(signature(sb, y));
		if (it == classes.end())
			continue;
		int tries = 0;
		for (NetId x : it->second) {
			const bool pol = (sa[x * W] & 1) != (sb[y * W] & 1);
			const std::uint64_t mask = pol ? ~0ULL : 0;
			bool agree = true;
			for (std::size_t w = 0; w < W && agree; ++w)
				agree = (sa[x * W + w] ^ mask) == sb[y * W + w];
			if (!agree)
				continue;
			const Lit p = la[x], q = lb[y] ^ pol;
			if (p == q)
				break;
			if (tries++ == kTriesPerNet)
				break;
			ctx.set_conflict_budget(kPairBudget);
			SatOutcome o = ctx.solve({p, ~q});
			if (o.sat()) {
				add_cex(o);
				continue;
			}
			if (!o.unsat())
				break;
			f.add_clause({~p, q});
			o = ctx.solve({~p, q});
			if (o.sat()) {
				add_cex(o);
				continue;
			}
			if (o.unsat())
				f.add_clause({p, ~q});
			break;
		}
	}

	ctx.set_conflict_budget(conflict_budget);
	std::vector<Lit> any_diff;
	for (std::size_t o = 0; o < a.primary_outputs().size(); ++o) {
		Lit x = la[a.primary_outputs()[o]], y = lb[b.primary_outputs()[o]];
		Lit d = Lit::make(f.new_var());
		f.add_clause({~d, x, y});
		f.add_clause({~d, ~x, ~y});
		any_diff.push_back(d);
	}
	EquivalenceResult r;
	if (any_diff.empty()) {
		r.verdict = Equivalence::Equivalent;
		return r;
	}
	f.add_clause(any_diff);
	SatOutcome out = ctx.solve();
	if (out.unsat()) {
		r.verdict = Equivalence::Equivalent;
	} else if (out.sat()) {
		r.verdict = Equivalence::Different;
		for (Lit l : in)
			r.inputs.push_back(out.value(l));
		for (Lit l : keys)
			r.keys_a.push_back(out.value(l));
		r.keys_b = r.keys_a;
	}
	return r;
}

} // namespace

EquivalenceResult check_equivalence(const Netlist &a, const Netlist &b, MiterSharing share,
				    std::int64_t conflict_budget)
{
	check_interfaces(a, b, share);
	EquivalenceResult r;
	if (share == MiterSharing::InputsAndKeys) {
		std::mt19937_64 rng(0xe9u);
		for (int round = 0; round < 4; ++round) {
			auto in = random_words(rng, a.primary_inputs().size());
			auto keys = random_words(rng, a.key_count());
			auto oa = simulate_output_words(a, in, keys);
			auto ob = simulate_output_words(b, in, keys);
			for (std::size_t o = 0; o < oa.size(); ++o) {
				std::uint64_t diff = oa[o] ^ ob[o];
				if (!diff)
					continue;
				int bit = std::countr_zero(diff);
				r.verdict = Equivalence::Different;
				for (auto w : in)
					r.inputs.push_back((w >> bit) & 1);
				for (auto w : keys)
					r.keys_a.push_back((w >> bit) & 1);
				r.keys_b = r.keys_a;
				return r;
			}
		}
	}
	if (share == MiterSharing::InputsAndKeys)
		return sweep_miter(a, b, conflict_budget);
	Miter m = build_miter(a, b, share);
	SatOutcome out = solve(m.formula, {}, conflict_budget);
	if (out.unsat()) {
		r.verdict = Equivalence::Equivalent;
	} else if (out.sat()) {
		r.verdict = Equivalence::Different;
		for (Lit l : m.inputs)
			r.inputs.push_back(out.value(l));
		for (Lit l : m.keys_a)
			r.keys_a.push_back(out.value(l));
		for (Lit l : m.keys_b)
			r.keys_b.push_back(out.value(l));
	}
	return r;
}

} // namespace locklab
