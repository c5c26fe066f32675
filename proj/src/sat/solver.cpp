#include "locklab/sat_solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace locklab {

namespace {

double luby(double y, int x)
{
	int size = 1, seq = 0;
	while (size < x + 1) {
		seq++;
		size = 2 * size + 1;
	}
	while (size - 1 != x) {
		size = (size - 1) >> 1;
		seq--;
		x = x % size;
	}
	return std::pow(y, seq);
}

enum class SearchResult { Sat, Unsat, Restart, Budget };

} // namespace

Solver::Solver() = default;

Var Solver::new_var()
{
	Var v = num_vars();
	assigns_.push_back(kUndef);
	level_.push_back(0);
	reason_.push_back(kNoReason);
	activity_.push_back(0.0);
	polarity_.push_back(1);
	seen_.push_back(0);
	watches_.emplace_back();
	watches_.emplace_back();
	heap_index_.push_back(-1);
	heap_insert(v);
	return v;
}

void Solver::reserve_vars(int count)
{
	while (num_vars() < count)
		new_var();
}

Solver::CRef Solver::alloc_clause(std::span<const Lit> lits, bool learnt)
{
	CRef c = static_cast<CRef>(clauses_.size());
	clauses_.push_back(ClauseHeader{static_cast<std::uint32_t>(lit_arena_.size()), static_cast<std::uint32_t>(lits.size()),
					0.0f, 0, learnt, false});
	lit_arena_.insert(lit_arena_.end(), lits.begin(), lits.end());
	return c;
}

void Solver::attach(CRef c)
{
	Lit *l = lits_of(c);
	watches_[l[0].code].push_back(Watcher{c, l[1]});
	watches_[l[1].code].push_back(Watcher{c, l[0]});
}

bool Solver::add_clause(std::span<const Lit> input)
{
	if (!ok_)
		return false;
	cancel_until(0);
	std::vector<Lit> lits(input.begin(), input.end());
	for (Lit l : lits)
		reserve_vars(l.var() + 1);
	std::sort(lits.begin(), lits.end());
	std::size_t j = 0;
	Lit prev{0xffffffffu};
	for (std::size_t i = 0; i < lits.size(); ++i) {
		std::int8_t v = value(lits[i]);
		if (v == kTrue || lits[i] == ~prev)
			return true;
		if (v != kFalse && lits[i] != prev)
			lits[j++] = prev = lits[i];
	}
	lits.resize(j);
	if (lits.empty()) {
		ok_ = false;
		return false;
	}
	if (lits.size() == 1) {
		enqueue(lits[0], kNoReason);
		ok_ = propagate() == kNoReason;
		return ok_;
	}
	attach(alloc_clause(lits, false));
	return true;
}

void Solver::enqueue(Lit l, CRef reason)
{
	Var v = l.var();
	assigns_[v] = l.negated() ? kFalse : kTrue;
	level_[v] = decision_level();
	reason_[v] = reason;
	trail_.push_back(l);
}

Solver::CRef Solver::propagate()
{
	CRef conflict = kNoReason;
	while (qhead_ < trail_.size()) {
		Lit p = trail_[qhead_++];
		Lit false_lit = ~p;
		std::vector<Watcher> &ws = watches_[false_lit.code];
		std::size_t i = 0, j = 0;
		const std::size_t end = ws.size();
		while (i < end) {
			Watcher w = ws[i];
			if (value(w.blocker) == kTrue) {
				ws[j++] = ws[i++];
				continue;
			}
			ClauseHeader &h = clauses_[w.cref];
			if (h.deleted) {
				++i;
				continue;
			}
			Lit *lits = lit_arena_.data() + h.start;
			if (lits[0] == false_lit)
				std::swap(lits[0], lits[1]);
			++i;
			Lit first = lits[0];
			Watcher nw{w.cref, first};
			if (first != w.blocker && value(first) == kTrue) {
				ws[j++] = nw;
				continue;
			}
			bool moved = false;
			for (std::uint32_t k = 2; k < h.size; ++k) {
				if (value(lits[k]) != kFalse) {
					lits[1] = lits[k];
					lits[k] = false_lit;
					watches_[lits[1].code].push_back(nw);
					moved = true;
					break;
				}
			}
			if (moved)
				continue;
			ws[j++] = nw;
			if (value(first) == kFalse) {
				conflict = w.cref;
				qhead_ = trail_.size();
				while (i < end)
					ws[j++] = ws[i++];
			} else {
				enqueue(first, w.cref);
			}
		}
		ws.resize(j);
		if (conflict != kNoReason)
			break;
	}
	return conflict;
}

void Solver::bump_var(Var v)
{
	if ((activity_[v] += var_inc_) > 1e100) {
		for (auto &a : activity_)
			a *= 1e-100;
		var_inc_ *= 1e-100;
	}
	if (heap_contains(v))
		heap_up(heap_index_[v]);
}

void Solver::bump_clause(CRef c)
{
	if ((clauses_[c].activity += static_cast<float>(clause_inc_)) > 1e20f) {
		for (CRef l : learnts_)
			clauses_[l].activity *= 1e-20f;
		clause_inc_ *= 1e-20;
	}
}

bool Solver::literal_redundant(Lit p, std::uint32_t abstract_levels)
{
	analyze_stack_.clear();
	analyze_stack_.push_back(p);
	std::size_t top = analyze_clear_.size();
	while (!analyze_stack_.empty()) {
		Lit q = analyze_stack_.back();
		analyze_stack_.pop_back();
		CRef c = reason_[q.var()];
		const ClauseHeader &h = clauses_[c];
		const Lit *lits = lit_arena_.data() + h.start;
		for (std::uint32_t i = 1; i < h.size; ++i) {
			Lit l = lits[i];
			Var v = l.var();
			if (!seen_[v] && level_[v] > 0) {
				if (reason_[v] != kNoReason && (abstract_levels & (1u << (level_[v] & 31)))) {
					seen_[v] = 1;
					analyze_stack_.push_back(l);
					analyze_clear_.push_back(l);
				} else {
					for (std::size_t j = top; j < analyze_clear_.size(); ++j)
						seen_[analyze_clear_[j].var()] = 0;
					analyze_clear_.resize(top);
					return false;
				}
			}
		}
	}
	return true;
}

void Solver::analyze(CRef conflict, std::vector<Lit> &learnt, int &backtrack_level, std::uint32_t &lbd)
{
	int path = 0;
	Lit p{0xffffffffu};
	learnt.clear();
	learnt.push_back(Lit{});
	std::size_t index = trail_.size();
	CRef c = conflict;
	do {
		if (clauses_[c].learnt)
			bump_clause(c);
		const ClauseHeader &h = clauses_[c];
		const Lit *lits = lit_arena_.data() + h.start;
		for (std::uint32_t j = (p.code == 0xffffffffu ? 0 : 1); j < h.size; ++j) {
			Lit q = lits[j];
			Var v = q.var();
			if (!seen_[v] && level_[v] > 0) {
				bump_var(v);
				seen_[v] = 1;
				if (level_[v] >= decision_level())
					++path;
				else
					learnt.push_back(q);
			}
		}
		while (!seen_[trail_[--index].var()]) {
		}
		p = trail_[index];
		c = reason_[p.var()];
		seen_[p.var()] = 0;
		--path;
	} while (path > 0);
	learnt[0] = ~p;

	analyze_clear_.assign(learnt.begin(), learnt.end());
	std::uint32_t abstract_levels = 0;
	for (std::size_t i = 1; i < learnt.size(); ++i)
		abstract_levels |= 1u << (level_[learnt[i].var()] & 31);
	std::size_t j = 1;
	for (std::size_t i = 1; i < learnt.size(); ++i) {
		Var v = learnt[i].var();
		if (reason_[v] == kNoReason || !literal_redundant(learnt[i], abstract_levels))
			learnt[j++] = learnt[i];
	}
	learnt.resize(j);

	backtrack_level = 0;
	if (learnt.size() > 1) {
		std::size_t max_i = 1;
		for (std::size_t i = 2; i < learnt.size(); ++i)
			if (level_[learnt[i].var()] > level_[learnt[max_i].var()])
				max_i = i;
		std::swap(learnt[1], learnt[max_i]);
		backtrack_level = level_[learnt[1].var()];
	}
	for (Lit l : analyze_clear_)
		seen_[l.var()] = 0;

	std::vector<int> levels;
	levels.reserve(learnt.size());
	for (Lit l : learnt)
		levels.push_back(level_[l.var()]);
	std::sort(levels.begin(), levels.end());
	lbd = static_cast<std::uint32_t>(std::unique(levels.begin(), levels.end()) - levels.begin());
}

void Solver::cancel_until(int level)
{
	if (decision_level() <= level)
		return;
	for (std::size_t c = trail_.size(); c-- > static_cast<std::size_t>(trail_lim_[level]);) {
		Var x = trail_[c].var();
		assigns_[x] = kUndef;
		polarity_[x] = trail_[c].negated();
		if (!heap_contains(x))
			heap_insert(x);
	}
	qhead_ = trail_lim_[level];
	trail_.resize(trail_lim_[level]);
	trail_lim_.resize(level);
}

Lit Solver::pick_branch()
{
	while (!heap_.empty()) {
		Var v = heap_pop();
		if (assigns_[v] == kUndef) {
			++total_decisions_;
			return Lit::make(v, polarity_[v]);
		}
	}
	return Lit{0xffffffffu};
}

bool Solver::locked(CRef c)
{
	const Lit first = lit_arena_[clauses_[c].start];
	return value(first) == kTrue && reason_[first.var()] == c;
}

void Solver::reduce_learnts()
{
	std::sort(learnts_.begin(), learnts_.end(), [&](CRef a, CRef b) {
		const auto &ha = clauses_[a];
		const auto &hb = clauses_[b];
		if (ha.lbd != hb.lbd)
			return ha.lbd > hb.lbd;
		return ha.activity < hb.activity;
	});
	std::size_t half = learnts_.size() / 2;
	std::size_t j = 0;
	for (std::size_t i = 0; i < learnts_.size(); ++i) {
		CRef c = learnts_[i];
		ClauseHeader &h = clauses_[c];
		if (i < half && h.size > 2 && h.lbd > 2 && !locked(c)) {
			h.deleted = true;
			wasted_lits_ += h.size;
		} else {
			learnts_[j++] = c;
		}
	}
	learnts_.resize(j);
	if (wasted_lits_ > lit_arena_.size() / 2)
		collect_garbage();
}

void Solver::collect_garbage()
{
	std::vector<CRef> remap(clauses_.size(), kNoReason);
	std::vector<Lit> arena;
	std::vector<ClauseHeader> headers;
	arena.reserve(lit_arena_.size() - wasted_lits_);
	for (CRef c = 0; c < clauses_.size(); ++c) {
		const ClauseHeader &h = clauses_[c];
		if (h.deleted)
			continue;
		remap[c] = static_cast<CRef>(headers.size());
		ClauseHeader nh = h;
		nh.start = static_cast<std::uint32_t>(arena.size());
		arena.insert(arena.end(), lit_arena_.begin() + h.start, lit_arena_.begin() + h.start + h.size);
		headers.push_back(nh);
	}
	lit_arena_ = std::move(arena);
	clauses_ = std::move(headers);
	wasted_lits_ = 0;
	for (auto &r : learnts_)
		r = remap[r];
	for (Lit l : trail_) {
		CRef &r = reason_[l.var()];
		if (r != kNoReason)
			r = remap[r];
	}
	for (auto &ws : watches_) {
		std::size_t j = 0;
		for (auto &w : ws)
			if (remap[w.cref] != kNoReason)
				ws[j++] = Watcher{remap[w.cref], w.blocker};
		ws.resize(j);
	}
}

SatStatus Solver::solve(std::span<const Lit> assumptions)
{
	model_.clear();
	if (!ok_)
		return SatStatus::Unsatisfiable;
	for (Lit a : assumptions)
		reserve_vars(a.var() + 1);
	cancel_until(0);
	if (propagate() != kNoReason) {
		ok_ = false;
		return SatStatus::Unsatisfiable;
	}

	max_learnts_ = std::max(max_learnts_, std::max(2000.0, static_cast<double>(clauses_.size()) / 3.0));
	const std::uint64_t start_conflicts = total_conflicts_;
	std::vector<Lit> learnt;
	SatStatus status = SatStatus::Unknown;
	for (int restart = 0;; ++restart) {
		const std::int64_t allowed = static_cast<std::int64_t>(luby(2.0, restart) * 100.0);
		std::int64_t local_conflicts = 0;
		SearchResult result = SearchResult::Restart;
		for (;;) {
			CRef conflict = propagate();
			if (conflict != kNoReason) {
				++total_conflicts_;
				++local_conflicts;
				if (decision_level() == 0) {
					ok_ = false;
					result = SearchResult::Unsat;
					break;
				}
				int bt;
				std::uint32_t lbd;
				analyze(conflict, learnt, bt, lbd);
				cancel_until(bt);
				if (learnt.size() == 1) {
					enqueue(learnt[0], kNoReason);
				} else {
					CRef c = alloc_clause(learnt, true);
					clauses_[c].lbd = lbd;
					learnts_.push_back(c);
					attach(c);
					bump_clause(c);
					enqueue(learnt[0], c);
				}
				var_inc_ /= var_decay_;
				clause_inc_ /= clause_decay_;
				continue;
			}
			if (conflict_budget_ >= 0 &&
			    total_conflicts_ - start_conflicts >= static_cast<std::uint64_t>(conflict_budget_)) {
				result = SearchResult::Budget;
				break;
			}
			if (local_conflicts >= allowed) {
				result = SearchResult::Restart;
				break;
			}
			if (static_cast<double>(learnts_.size()) - static_cast<double>(trail_.size()) >= max_learnts_)
				reduce_learnts();

			Lit next{0xffffffffu};
			bool assumption_failed = false;
			while (decision_level() < static_cast<int>(assumptions.size())) {
				Lit a = assumptions[decision_level()];
				std::int8_t v = value(a);
				if (v == kTrue) {
					trail_lim_.push_back(static_cast<int>(trail_.size()));
				} else if (v == kFalse) {
					assumption_failed = true;
					break;
				} else {
					next = a;
					break;
				}
			}
			if (assumption_failed) {
				result = SearchResult::Unsat;
				break;
			}
			if (next.code == 0xffffffffu) {
				next = pick_branch();
				if (next.code == 0xffffffffu) {
					result = SearchResult::Sat;
					break;
				}
			}
			trail_lim_.push_back(static_cast<int>(trail_.size()));
			enqueue(next, kNoReason);
		}
		if (result == SearchResult::Restart) {
			cancel_until(0);
			max_learnts_ *= 1.05;
			continue;
		}
		if (result == SearchResult::Sat) {
			model_.resize(assigns_.size());
			for (std::size_t v = 0; v < assigns_.size(); ++v)
				model_[v] = assigns_[v] == kTrue;
			status = SatStatus::Satisfiable;
		} else if (result == SearchResult::Unsat) {
			status = SatStatus::Unsatisfiable;
		} else {
			status = SatStatus::Unknown;
		}
		break;
	}
	cancel_until(0);
	return status;
}

void Solver::heap_insert(Var v)
{
	heap_index_[v] = static_cast<int>(heap_.size());
	heap_.push_back(v);
	heap_up(heap_index_[v]);
}

void Solver::heap_up(int pos)
{
	Var v = heap_[pos];
	while (pos > 0) {
		int parent = (pos - 1) >> 1;
		if (activity_[heap_[parent]] >= activity_[v])
			break;
		heap_[pos] = heap_[parent];
		heap_index_[heap_[pos]] = pos;
		pos = parent;
	}
	heap_[pos] = v;
	heap_index_[v] = pos;
}

void Solver::heap_down(int pos)
{
	Var v = heap_[pos];
	const int n = static_cast<int>(heap_.size());
	for (;;) {
		int child = 2 * pos + 1;
		if (child >= n)
			break;
		if (child + 1 < n && activity_[heap_[child + 1]] > activity_[heap_[child]])
			++child;
		if (activity_[heap_[child]] <= activity_[v])
			break;
		heap_[pos] = heap_[child];
		heap_index_[heap_[pos]] = pos;
		pos = child;
	}
	heap_[pos] = v;
	heap_index_[v] = pos;
}

Var Solver::heap_pop()
{
	Var top = heap_[0];
	heap_index_[top] = -1;
	Var last = heap_.back();
	heap_.pop_back();
	if (!heap_.empty()) {
		heap_[0] = last;
		heap_index_[last] = 0;
		heap_down(0);
	}
	return top;
}

} // namespace locklab
