#include "locklab/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace locklab {

namespace {

bool is_name_char(char c)
{
	return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' && c != ',' && c != '=' && c != '#';
}

class LineScanner
{
      public:
	LineScanner(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

	void skip_space()
	{
		while (pos_ < line_.size() && std::isspace(static_cast<unsigned char>(line_[pos_])))
			++pos_;
	}
	bool at_end()
	{
		skip_space();
		return pos_ >= line_.size() || line_[pos_] == '#';
	}
	bool peek(char c)
	{
		skip_space();
		return pos_ < line_.size() && line_[pos_] == c;
	}
	void expect(char c)
	{
		skip_space();
		if (pos_ >= line_.size() || line_[pos_] != c)
			fail(std::string("expected '") + c + "'");
		++pos_;
	}
	std::string name()
	{
		skip_space();
		std::size_t start = pos_;
		while (pos_ < line_.size() && is_name_char(line_[pos_]))
			++pos_;
		if (start == pos_)
			fail("expected a net name");
		return std::string(line_.substr(start, pos_ - start));
	}
	std::size_t column() const { return pos_ + 1; }
	[[noreturn]] void fail(const std::string &msg) const { throw ParseError(msg, line_no_, pos_ + 1); }

      private:
	std::string_view line_;
	std::size_t line_no_;
	std::size_t pos_ = 0;
};

/// Orders key names by their trailing decimal suffix, then lexicographically.
bool key_less(const std::string &a, const std::string &b)
{
	auto suffix = [](const std::string &s) -> std::pair<bool, unsigned long long> {
		std::size_t i = s.size();
		while (i > 0 && std::isdigit(static_cast<unsigned char>(s[i - 1])))
			--i;
		if (i == s.size() || s.size() - i > 18)
			return {false, 0};
		return {true, std::stoull(s.substr(i))};
	};
	auto [ha, va] = suffix(a);
	auto [hb, vb] = suffix(b);
	if (ha != hb)
		return ha;
	if (ha && va != vb)
		return va < vb;
	return a < b;
}

struct PendingGate {
	std::string output;
	GateKind kind;
	std::vector<std::string> fanins;
	std::size_t line;
};

} // namespace

Netlist parse_bench(std::string_view text, const BenchOptions &options)
{
	std::vector<std::string> inputs;
	std::vector<std::string> keys;
	std::vector<std::string> outputs;
	std::vector<PendingGate> gates;

	std::size_t line_no = 0;
	std::size_t start = 0;
	while (start <= text.size()) {
		std::size_t end = text.find('\n', start);
		if (end == std::string_view::npos)
			end = text.size();
		std::string_view line = text.substr(start, end - start);
		if (!line.empty() && line.back() == '\r')
			line.remove_suffix(1);
		++line_no;
		start = end + 1;

		LineScanner sc(line, line_no);
		if (sc.at_end())
			continue;
		std::string head = sc.name();
		std::string upper(head);
		std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
		if ((upper == "INPUT" || upper == "OUTPUT") && sc.peek('(')) {
			sc.expect('(');
			std::string net = sc.name();
			sc.expect(')');
			if (!sc.at_end())
				sc.fail("unexpected trailing text");
			if (upper == "OUTPUT")
				outputs.push_back(net);
			else if (net.rfind(options.key_prefix, 0) == 0 && !options.key_prefix.empty())
				keys.push_back(net);
			else
				inputs.push_back(net);
			continue;
		}
		sc.expect('=');
		std::size_t kind_col = sc.column();
		std::string kind_name = sc.name();
		auto kind = gate_kind_from_string(kind_name);
		if (!kind)
			throw ParseError("unknown gate kind '" + kind_name + "'", line_no, kind_col);
		sc.expect('(');
		std::vector<std::string> fanins;
		if (!sc.peek(')')) {
			fanins.push_back(sc.name());
			while (sc.peek(',')) {
				sc.expect(',');
				fanins.push_back(sc.name());
			}
		}
		sc.expect(')');
		if (!sc.at_end())
			sc.fail("unexpected trailing text");
		if (!arity_ok(*kind, fanins.size()))
			throw ParseError("arity mismatch: " + kind_name + " with " + std::to_string(fanins.size()) + " fanins",
					 line_no, kind_col);
		gates.push_back(PendingGate{head, *kind, std::move(fanins), line_no});
	}

	std::stable_sort(keys.begin(), keys.end(), key_less);

	NetlistBuilder b;
	for (const auto &i : inputs)
		b.add_input(i);
	for (const auto &k : keys)
		b.add_key_input(k);
	for (const auto &o : outputs)
		b.add_output(o);
	for (auto &g : gates)
		b.add_gate(g.output, g.kind, g.fanins);
	return std::move(b).build();
}

std::string write_bench(const Netlist &n)
{
	std::ostringstream os;
	for (NetId id : n.primary_inputs())
		os << "INPUT(" << n.net_name(id) << ")\n";
	for (NetId id : n.key_inputs())
		os << "INPUT(" << n.net_name(id) << ")\n";
	for (NetId id : n.primary_outputs())
		os << "OUTPUT(" << n.net_name(id) << ")\n";
	for (const Gate &g : n.gates()) {
		os << n.net_name(g.output) << " = " << to_string(g.kind) << "(";
		for (std::size_t i = 0; i < g.fanins.size(); ++i) {
			if (i)
				os << ", ";
			os << n.net_name(g.fanins[i]);
		}
		os << ")\n";
	}
	return os.str();
}

Netlist read_bench_file(const std::string &path, const BenchOptions &options)
{
	std::ifstream in(path, std::ios::binary);
	if (!in)
		throw NetlistError("cannot open '" + path + "'");
	std::stringstream ss;
	ss << in.rdbuf();
	return parse_bench(ss.str(), options);
}

void write_bench_file(const std::string &path, const Netlist &n)
{
	std::ofstream out(path, std::ios::binary);
	if (!out)
		throw NetlistError("cannot write '" + path + "'");
	out << write_bench(n);
}

} // namespace locklab
