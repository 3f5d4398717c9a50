#include "lllcsp/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace lllcsp {

namespace {

constexpr long long max_domain = 1 << 16;
constexpr long long max_count = 1 << 24;

struct Token {
    std::string_view text;
    int line = 0;
    int column = 0;
};

/// Splits text into lines of whitespace-separated tokens, dropping everything
/// after `comment` on a line and whole lines whose first token is `line_comment`.
std::vector<std::vector<Token>> tokenize(std::string_view text, char comment, std::string_view line_comment)
{
    std::vector<std::vector<Token>> lines;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        if (comment) {
            std::size_t cut = line.find(comment);
            if (cut != std::string_view::npos)
                line = line.substr(0, cut);
        }
        std::vector<Token> tokens;
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
                ++i;
            std::size_t start = i;
            while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
                ++i;
            if (i > start)
                tokens.push_back({line.substr(start, i - start), line_no, static_cast<int>(start) + 1});
        }
        if (!tokens.empty() && !(line_comment.size() && tokens[0].text == line_comment))
            lines.push_back(std::move(tokens));
        if (end == text.size())
            break;
        pos = end + 1;
    }
    return lines;
}

long long to_integer(const Token& t, long long lo, long long hi, const char* what)
{
    long long value = 0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    if (first != last && *first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec == std::errc::result_out_of_range || (ec == std::errc() && ptr == last && (value < lo || value > hi)))
        throw SyntaxError(t.line, t.column, std::string(what) + " '" + std::string(t.text) + "' out of range ["
                + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    if (ec != std::errc() || ptr != last)
        throw SyntaxError(t.line, t.column, std::string("expected ") + what + ", found '" + std::string(t.text) + "'");
    return value;
}

[[noreturn]] void fail_at(const Token& t, const std::string& message)
{
    throw SyntaxError(t.line, t.column, message);
}

int end_line(std::string_view text)
{
    int lines = 1;
    for (char c : text)
        if (c == '\n')
            ++lines;
    return lines;
}

Instance build_checked(std::vector<int> domains, std::vector<Constraint> constraints)
{
    try {
        return Instance::build(std::move(domains), std::move(constraints));
    } catch (const std::invalid_argument& e) {
        throw Error(ErrorKind::internal, std::string("parser accepted an invalid instance: ") + e.what());
    }
}

Instance parse_cnf(std::string_view text)
{
    auto lines = tokenize(text, '\0', "c");
    std::vector<Token> tokens;
    bool header = false;
    long long n = 0;
    long long m = 0;
    Token header_tok;
    for (auto& line : lines) {
        if (line[0].text == "%")
            break;
        if (line[0].text == "p") {
            if (header)
                fail_at(line[0], "duplicate problem line");
            if (line.size() != 4 || line[1].text != "cnf")
                fail_at(line[0], "expected 'p cnf <variables> <clauses>'");
            n = to_integer(line[2], 0, max_count, "variable count");
            m = to_integer(line[3], 0, max_count, "clause count");
            header = true;
            header_tok = line[0];
            continue;
        }
        if (!header)
            fail_at(line[0], "clause before the 'p cnf' problem line");
        tokens.insert(tokens.end(), line.begin(), line.end());
    }
    if (!header)
        throw SyntaxError(end_line(text), 0, "missing 'p cnf' problem line");

    std::vector<Constraint> constraints;
    std::vector<long long> literals;
    std::vector<Token> literal_tokens;
    for (const auto& t : tokens) {
        long long lit = to_integer(t, -n, n, "literal");
        if (lit != 0) {
            literals.push_back(lit);
            literal_tokens.push_back(t);
            continue;
        }
        if (static_cast<long long>(constraints.size()) == m)
            fail_at(t, "more clauses than the " + std::to_string(m) + " declared");
        if (literals.empty())
            throw Error(ErrorKind::unsat, "line " + std::to_string(t.line) + ", column "
                    + std::to_string(t.column) + ": empty clause");
        // value 0 = false; the violating tuple falsifies every literal
        std::map<int, int> falsify;
        bool tautology = false;
        for (long long l : literals) {
            int v = static_cast<int>(l > 0 ? l : -l) - 1;
            int bad = l > 0 ? 0 : 1;
            auto [it, fresh] = falsify.emplace(v, bad);
            if (!fresh && it->second != bad)
                tautology = true;
        }
        Constraint c;
        std::vector<int> tuple;
        for (long long l : literals) {
            int v = static_cast<int>(l > 0 ? l : -l) - 1;
            auto it = falsify.find(v);
            if (it == falsify.end())
                continue;
            c.scope.push_back(v);
            tuple.push_back(it->second);
            falsify.erase(it);
        }
        if (!tautology)
            c.violating.push_back(std::move(tuple));
        constraints.push_back(std::move(c));
        literals.clear();
        literal_tokens.clear();
    }
    if (!literals.empty())
        fail_at(literal_tokens.back(), "clause not terminated by 0");
    if (static_cast<long long>(constraints.size()) != m)
        throw SyntaxError(end_line(text), 0,
            "declared " + std::to_string(m) + " clauses, found " + std::to_string(constraints.size()));
    return build_checked(std::vector<int>(static_cast<std::size_t>(n), 2), std::move(constraints));
}

Instance parse_hcol(std::string_view text)
{
    auto lines = tokenize(text, '\0', "c");
    bool header = false;
    long long n = 0;
    long long m = 0;
    long long q = 0;
    std::vector<Constraint> constraints;
    for (auto& line : lines) {
        if (line[0].text == "p") {
            if (header)
                fail_at(line[0], "duplicate problem line");
            if (line.size() != 5 || line[1].text != "hcol")
                fail_at(line[0], "expected 'p hcol <vertices> <edges> <colors>'");
            n = to_integer(line[2], 0, max_count, "vertex count");
            m = to_integer(line[3], 0, max_count, "edge count");
            q = to_integer(line[4], 2, max_domain, "color count");
            header = true;
            continue;
        }
        if (!header)
            fail_at(line[0], "edge before the 'p hcol' problem line");
        if (line[0].text != "e")
            fail_at(line[0], "expected an 'e' edge line");
        if (line.size() < 2)
            fail_at(line[0], "edge with no vertices");
        if (static_cast<long long>(constraints.size()) == m)
            fail_at(line[0], "more edges than the " + std::to_string(m) + " declared");
        Constraint c;
        std::set<int> seen;
        for (std::size_t i = 1; i < line.size(); ++i) {
            int v = static_cast<int>(to_integer(line[i], 1, n, "vertex")) - 1;
            if (!seen.insert(v).second)
                fail_at(line[i], "vertex repeated within an edge");
            c.scope.push_back(v);
        }
        if (c.scope.size() == 1)
            throw Error(ErrorKind::unsat, "line " + std::to_string(line[0].line) + ": an edge of size one cannot be properly colored");
        for (int color = 0; color < q; ++color)
            c.violating.emplace_back(c.scope.size(), color);
        constraints.push_back(std::move(c));
    }
    if (!header)
        throw SyntaxError(end_line(text), 0, "missing 'p hcol' problem line");
    if (static_cast<long long>(constraints.size()) != m)
        throw SyntaxError(end_line(text), 0,
            "declared " + std::to_string(m) + " edges, found " + std::to_string(constraints.size()));
    return build_checked(std::vector<int>(static_cast<std::size_t>(n), static_cast<int>(q)), std::move(constraints));
}

Instance parse_generic(std::string_view text)
{
    auto lines = tokenize(text, '#', "");
    if (lines.empty())
        throw SyntaxError(end_line(text), 0, "missing 'csp <n> <m>' header");
    const auto& head = lines[0];
    if (head[0].text != "csp" || head.size() != 3)
        fail_at(head[0], "expected header 'csp <n> <m>'");
    const long long n = to_integer(head[1], 0, max_count, "variable count");
    const long long m = to_integer(head[2], 0, max_count, "constraint count");
    std::vector<int> domains(static_cast<std::size_t>(n), 2);
    std::vector<char> dom_set(static_cast<std::size_t>(n), 0);

    std::vector<Constraint> constraints;
    std::size_t i = 1;
    while (i < lines.size()) {
        const auto& line = lines[i];
        if (line[0].text == "dom") {
            if (!constraints.empty())
                fail_at(line[0], "'dom' lines must precede every 'con' block");
            if (line.size() != 3)
                fail_at(line[0], "expected 'dom <var> <size>'");
            auto v = static_cast<std::size_t>(to_integer(line[1], 0, n - 1, "variable"));
            if (dom_set[v])
                fail_at(line[1], "domain of variable " + std::to_string(v) + " given twice");
            dom_set[v] = 1;
            domains[v] = static_cast<int>(to_integer(line[2], 2, max_domain, "domain size"));
            ++i;
            continue;
        }
        if (line[0].text != "con")
            fail_at(line[0], "expected 'dom', 'con' or end of input, found '" + std::string(line[0].text) + "'");
        if (static_cast<long long>(constraints.size()) == m)
            fail_at(line[0], "more constraints than the " + std::to_string(m) + " declared");
        if (line.size() < 2)
            fail_at(line[0], "expected 'con <k> <v_1> ... <v_k>'");
        const long long k = to_integer(line[1], 1, std::max<long long>(n, 1), "arity");
        if (static_cast<long long>(line.size()) != k + 2)
            fail_at(line[0], "'con' declares arity " + std::to_string(k) + " but lists "
                    + std::to_string(line.size() - 2) + " variables");
        Constraint c;
        std::set<int> seen;
        for (std::size_t j = 2; j < line.size(); ++j) {
            int v = static_cast<int>(to_integer(line[j], 0, n - 1, "variable"));
            if (!seen.insert(v).second)
                fail_at(line[j], "variable repeated within a scope");
            c.scope.push_back(v);
        }
        ++i;
        std::set<std::vector<int>> tuples;
        bool closed = false;
        while (i < lines.size()) {
            const auto& row = lines[i++];
            if (row[0].text == "end") {
                if (row.size() != 1)
                    fail_at(row[1], "unexpected token after 'end'");
                closed = true;
                break;
            }
            if (static_cast<long long>(row.size()) != k)
                fail_at(row[0], "tuple has " + std::to_string(row.size()) + " values, expected " + std::to_string(k));
            std::vector<int> tuple;
            for (std::size_t j = 0; j < row.size(); ++j)
                tuple.push_back(static_cast<int>(
                    to_integer(row[j], 0, domains[static_cast<std::size_t>(c.scope[j])] - 1, "value")));
            if (!tuples.insert(tuple).second)
                fail_at(row[0], "duplicate violating tuple");
            c.violating.push_back(std::move(tuple));
        }
        if (!closed)
            throw SyntaxError(end_line(text), 0, "constraint block not terminated by 'end'");
        constraints.push_back(std::move(c));
    }
    if (static_cast<long long>(constraints.size()) != m)
        throw SyntaxError(end_line(text), 0,
            "declared " + std::to_string(m) + " constraints, found " + std::to_string(constraints.size()));
    return build_checked(std::move(domains), std::move(constraints));
}

} // namespace

const char* to_string(InstanceFormat kind)
{
    switch (kind) {
    case InstanceFormat::dimacs_cnf: return "dimacs-cnf";
    case InstanceFormat::hypergraph_coloring: return "hypergraph-coloring";
    case InstanceFormat::generic_csp: return "generic-csp";
    }
    return "generic-csp";
}

std::optional<InstanceFormat> parse_format_name(std::string_view name)
{
    if (name == "cnf" || name == "dimacs" || name == "dimacs-cnf")
        return InstanceFormat::dimacs_cnf;
    if (name == "hcol" || name == "hypergraph-coloring")
        return InstanceFormat::hypergraph_coloring;
    if (name == "csp" || name == "generic-csp")
        return InstanceFormat::generic_csp;
    return std::nullopt;
}

InstanceFormat detect_format(std::string_view text)
{
    for (const auto& line : tokenize(text, '#', "c")) {
        if (line[0].text == "p" && line.size() > 1 && line[1].text == "hcol")
            return InstanceFormat::hypergraph_coloring;
        if (line[0].text == "p")
            return InstanceFormat::dimacs_cnf;
        return InstanceFormat::generic_csp;
    }
    return InstanceFormat::generic_csp;
}

Instance parse_instance(std::string_view text, InstanceFormat kind)
{
    switch (kind) {
    case InstanceFormat::dimacs_cnf: return parse_cnf(text);
    case InstanceFormat::hypergraph_coloring: return parse_hcol(text);
    case InstanceFormat::generic_csp: return parse_generic(text);
    }
    return parse_generic(text);
}

Instance parse_instance(std::string_view text)
{
    return parse_instance(text, detect_format(text));
}

Instance load_instance(const std::string& path, std::optional<InstanceFormat> kind)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw SyntaxError(0, 0, "cannot read '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    return kind ? parse_instance(text, *kind) : parse_instance(text);
}

std::string serialize_instance(const Instance& inst, InstanceFormat kind)
{
    std::ostringstream out;
    const int n = inst.num_vars();
    const int m = inst.num_constraints();
    switch (kind) {
    case InstanceFormat::dimacs_cnf: {
        for (int v = 0; v < n; ++v)
            if (inst.domain(v) != 2)
                throw std::invalid_argument("dimacs-cnf needs Boolean variables");
        out << "p cnf " << n << ' ' << m << '\n';
        for (const auto& c : inst.constraints()) {
            if (c.violating.size() != 1)
                throw std::invalid_argument("dimacs-cnf needs exactly one violating tuple per constraint");
            for (std::size_t i = 0; i < c.scope.size(); ++i)
                out << (c.violating[0][i] == 0 ? c.scope[i] + 1 : -(c.scope[i] + 1)) << ' ';
            out << "0\n";
        }
        break;
    }
    case InstanceFormat::hypergraph_coloring: {
        const int q = inst.q();
        for (int v = 0; v < n; ++v)
            if (inst.domain(v) != q)
                throw std::invalid_argument("hypergraph-coloring needs a common palette");
        out << "p hcol " << n << ' ' << m << ' ' << q << '\n';
        for (const auto& c : inst.constraints()) {
            std::set<std::vector<int>> expected;
            for (int color = 0; color < q; ++color)
                expected.insert(std::vector<int>(c.scope.size(), color));
            if (std::set<std::vector<int>>(c.violating.begin(), c.violating.end()) != expected)
                throw std::invalid_argument("hypergraph-coloring needs monochromatic violating tuples");
            out << 'e';
            for (int v : c.scope)
                out << ' ' << v + 1;
            out << '\n';
        }
        break;
    }
    case InstanceFormat::generic_csp: {
        out << "csp " << n << ' ' << m << '\n';
        for (int v = 0; v < n; ++v)
            if (inst.domain(v) != 2)
                out << "dom " << v << ' ' << inst.domain(v) << '\n';
        for (const auto& c : inst.constraints()) {
            out << "con " << c.scope.size();
            for (int v : c.scope)
                out << ' ' << v;
            out << '\n';
            for (const auto& tuple : c.violating) {
                for (std::size_t i = 0; i < tuple.size(); ++i)
                    out << (i ? " " : "") << tuple[i];
                out << '\n';
            }
            out << "end\n";
        }
        break;
    }
    }
    return out.str();
}

} // namespace lllcsp
