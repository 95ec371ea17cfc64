#include "acopf/case_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <vector>

namespace acopf {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Token {
    std::string text;
    int line;
    int col;
};

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> tokens;
    int line = 1;
    int col = 1;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '\n') {
            ++line;
            col = 1;
            ++i;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++col;
            ++i;
            continue;
        }
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        int start_col = col;
        std::string tok;
        // ; and := are their own tokens even when glued to a word
        if (c == ';') {
            tok = ";";
            ++i;
            ++col;
        } else if (c == ':' && i + 1 < text.size() && text[i + 1] == '=') {
            tok = ":=";
            i += 2;
            col += 2;
        } else if (c == ':') {
            tok = ":";
            ++i;
            ++col;
        } else {
            while (i < text.size()) {
                char d = text[i];
                if (std::isspace(static_cast<unsigned char>(d)) || d == '#' || d == ';' ||
                    d == ':')
                    break;
                tok += d;
                ++i;
                ++col;
            }
        }
        tokens.push_back({tok, line, start_col});
    }
    return tokens;
}

class TokenStream {
public:
    explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    bool done() const { return pos_ >= tokens_.size(); }

    const Token& peek() const {
        if (done()) throw SyntaxError("unexpected end of input", last_line(), last_col());
        return tokens_[pos_];
    }

    Token next() {
        Token t = peek();
        ++pos_;
        return t;
    }

    void expect(const std::string& text) {
        Token t = next();
        if (t.text != text)
            throw SyntaxError("expected '" + text + "', got '" + t.text + "'", t.line, t.col);
    }

    double number() {
        Token t = next();
        try {
            size_t used = 0;
            double v = std::stod(t.text, &used);
            if (used != t.text.size()) throw std::invalid_argument(t.text);
            return v;
        } catch (const std::exception&) {
            throw SyntaxError("expected a number, got '" + t.text + "'", t.line, t.col);
        }
    }

    int integer() {
        Token t = peek();
        double v = number();
        if (v != std::floor(v) || std::fabs(v) > 2e9)
            throw SyntaxError("expected an integer, got '" + t.text + "'", t.line, t.col);
        return static_cast<int>(v);
    }

    bool peek_is_number() const {
        if (done()) return false;
        const std::string& s = tokens_[pos_].text;
        char* end = nullptr;
        std::strtod(s.c_str(), &end);
        return end == s.c_str() + s.size() && !s.empty();
    }

    int last_line() const { return tokens_.empty() ? 1 : tokens_.back().line; }
    int last_col() const { return tokens_.empty() ? 1 : tokens_.back().col + 1; }

private:
    std::vector<Token> tokens_;
    size_t pos_ = 0;
};

struct BusRow {
    std::map<std::string, double> values;
};

// Raw .dat content before assembly into a Grid.
struct DatDocument {
    std::map<int, BusRow> buses;                  // keyed by bus id, insertion order kept via map
    std::vector<int> bus_order;
    std::map<std::pair<int, int>, std::vector<double>> gen_bounds;  // (bus, gen) -> SLR SLC SUR SUC
    std::vector<std::pair<int, int>> gen_bound_order;
    std::map<int, std::vector<int>> gen_sets;     // G[b]
    std::vector<int> gen_set_order;
    struct BranchRow {
        int from, to, parallel;
        std::map<std::string, double> values;
        int line, col;
    };
    std::vector<BranchRow> branches;
    std::map<std::tuple<int, int, int>, double> cost;  // (bus, gen, k)
    int kcard = 2;
    int max_par = 1;
};

double row_value(const std::map<std::string, double>& row, const std::string& key,
                 double fallback) {
    auto it = row.find(key);
    return it == row.end() ? fallback : it->second;
}

// Arity of the key tuple for each table, by name.
int key_count_for(const std::string& table, int line, int col) {
    if (table == "B") return 1;
    if (table == "L0") return 3;
    if (table == "SLR" || table == "SLC" || table == "SUR" || table == "SUC") return 2;
    throw SyntaxError("unknown table '" + table + "'", line, col);
}

DatDocument parse_dat_document(const std::string& text) {
    TokenStream ts(tokenize(text));
    DatDocument doc;
    std::set<std::tuple<int, int, int>> branch_keys;

    while (!ts.done()) {
        Token head = ts.next();
        if (head.text == "param") {
            Token t = ts.next();
            if (t.text == ":") {
                // tabular form; collect names up to ':' (set header) or ':='
                std::vector<std::string> names;
                bool has_set = false;
                std::string set_name;
                while (true) {
                    Token n = ts.next();
                    if (n.text == ":=") break;
                    if (n.text == ":") {
                        if (names.size() != 1)
                            throw SyntaxError("malformed table header", n.line, n.col);
                        has_set = true;
                        set_name = names[0];
                        names.clear();
                        continue;
                    }
                    names.push_back(n.text);
                }
                if (names.empty())
                    throw SyntaxError("table with no columns", head.line, head.col);
                const std::string table = has_set ? set_name : names[0];
                const int nkeys = key_count_for(table, head.line, head.col);
                while (ts.peek().text != ";") {
                    std::vector<int> keys;
                    Token key_tok = ts.peek();
                    for (int k = 0; k < nkeys; ++k) keys.push_back(ts.integer());
                    std::vector<double> vals;
                    for (size_t k = 0; k < names.size(); ++k) vals.push_back(ts.number());
                    if (table == "B") {
                        if (doc.buses.count(keys[0]))
                            throw SemanticError("duplicate bus id " + std::to_string(keys[0]));
                        BusRow row;
                        for (size_t k = 0; k < names.size(); ++k) row.values[names[k]] = vals[k];
                        doc.buses[keys[0]] = row;
                        doc.bus_order.push_back(keys[0]);
                    } else if (table == "L0") {
                        std::tuple<int, int, int> key{keys[0], keys[1], keys[2]};
                        if (!branch_keys.insert(key).second)
                            throw SemanticError("duplicate branch key (" +
                                                std::to_string(keys[0]) + "," +
                                                std::to_string(keys[1]) + "," +
                                                std::to_string(keys[2]) + ")");
                        DatDocument::BranchRow row;
                        row.from = keys[0];
                        row.to = keys[1];
                        row.parallel = keys[2];
                        for (size_t k = 0; k < names.size(); ++k) row.values[names[k]] = vals[k];
                        row.line = key_tok.line;
                        row.col = key_tok.col;
                        doc.branches.push_back(row);
                    } else {
                        // generator bound table: columns are SLR SLC SUR SUC in header order
                        std::pair<int, int> key{keys[0], keys[1]};
                        if (doc.gen_bounds.count(key))
                            throw SemanticError("duplicate generator key (" +
                                                std::to_string(keys[0]) + "," +
                                                std::to_string(keys[1]) + ")");
                        std::vector<double> ordered(4, 0.0);
                        static const std::vector<std::string> want{"SLR", "SLC", "SUR", "SUC"};
                        for (size_t k = 0; k < names.size(); ++k) {
                            auto it = std::find(want.begin(), want.end(), names[k]);
                            if (it == want.end())
                                throw SyntaxError("unknown column '" + names[k] + "'", head.line,
                                                  head.col);
                            ordered[static_cast<size_t>(it - want.begin())] = vals[k];
                        }
                        doc.gen_bounds[key] = ordered;
                        doc.gen_bound_order.push_back(key);
                    }
                }
                ts.expect(";");
            } else if (t.text == "C") {
                ts.expect(":=");
                while (ts.peek().text != ";") {
                    int b = ts.integer();
                    int g = ts.integer();
                    int k = ts.integer();
                    double v = ts.number();
                    doc.cost[{b, g, k}] = v;
                }
                ts.expect(";");
            } else {
                // scalar parameter
                const std::string name = t.text;
                ts.expect(":=");
                double v = ts.number();
                ts.expect(";");
                if (name == "maxParBranches")
                    doc.max_par = static_cast<int>(v);
                else if (name == "Kcard")
                    doc.kcard = static_cast<int>(v);
                else if (name != "Inf" && name != "Eps" && name != "Pi" && name != "myZero")
                    throw SyntaxError("unknown parameter '" + name + "'", t.line, t.col);
            }
        } else if (head.text == "set") {
            Token n = ts.next();
            if (n.text.size() < 4 || n.text.substr(0, 2) != "G[" || n.text.back() != ']')
                throw SyntaxError("expected set G[<bus>], got '" + n.text + "'", n.line, n.col);
            int bus;
            const std::string inner = n.text.substr(2, n.text.size() - 3);
            auto [p, ec] = std::from_chars(inner.data(), inner.data() + inner.size(), bus);
            if (ec != std::errc() || p != inner.data() + inner.size())
                throw SyntaxError("bad bus index in '" + n.text + "'", n.line, n.col);
            ts.expect(":=");
            if (doc.gen_sets.count(bus))
                throw SemanticError("duplicate set G[" + std::to_string(bus) + "]");
            std::vector<int> members;
            while (ts.peek().text != ";") members.push_back(ts.integer());
            ts.expect(";");
            doc.gen_sets[bus] = members;
            doc.gen_set_order.push_back(bus);
        } else {
            throw SyntaxError("expected 'param' or 'set', got '" + head.text + "'", head.line,
                              head.col);
        }
    }
    return doc;
}

Grid assemble(const DatDocument& doc) {
    Grid grid;
    bool has_reference = false;
    for (int id : doc.bus_order) {
        const BusRow& row = doc.buses.at(id);
        Bus b;
        b.id = id;
        const int type = static_cast<int>(row_value(row.values, "busType", 1));
        if (type < 1 || type > 3)
            throw SemanticError("bus " + std::to_string(id) + " has unknown busType " +
                                std::to_string(type));
        b.type = static_cast<BusType>(type);
        if (b.type == BusType::Reference) has_reference = true;
        b.demand_re = row_value(row.values, "SDR", 0.0);
        b.demand_im = row_value(row.values, "SDC", 0.0);
        b.v_min = row_value(row.values, "VL", 0.0);
        b.v_max = row_value(row.values, "VU", kInf);
        b.shunt_re = row_value(row.values, "shR", 0.0);
        b.shunt_im = row_value(row.values, "shC", 0.0);
        b.vm_hint = row_value(row.values, "Vm", 1.0);
        b.va_hint = row_value(row.values, "Va", 0.0);
        grid.buses.push_back(b);
    }
    if (!has_reference) throw MissingReference("no bus with busType 3");

    auto known_bus = [&doc](int id) { return doc.buses.count(id) != 0; };

    for (const auto& row : doc.branches) {
        if (!known_bus(row.from))
            throw SemanticError("branch references unknown bus " + std::to_string(row.from));
        if (!known_bus(row.to))
            throw SemanticError("branch references unknown bus " + std::to_string(row.to));
        if (row.parallel < 1 || row.parallel > doc.max_par)
            throw SemanticError("branch parallel index " + std::to_string(row.parallel) +
                                " outside 1..maxParBranches");
        Branch br;
        br.from_bus = row.from;
        br.to_bus = row.to;
        br.parallel = row.parallel;
        br.status = row_value(row.values, "status", 1.0) != 0.0;
        br.s_max = row_value(row.values, "SU", kInf);
        br.r = row_value(row.values, "r", 0.0);
        br.x = row_value(row.values, "x", 0.0);
        br.b_ch = row_value(row.values, "bb", 0.0);
        br.tau = row_value(row.values, "tau", 1.0);
        br.nu = row_value(row.values, "nu", 0.0);
        br.eta_min = row_value(row.values, "pdLB", -kPi);
        br.eta_max = row_value(row.values, "pdUB", kPi);
        const double iu = row_value(row.values, "IU", kInf);
        if (!is_unbounded(iu)) br.i_max = iu;
        grid.branches.push_back(br);
    }

    for (int bus : doc.gen_set_order) {
        if (!known_bus(bus))
            throw SemanticError("set G[" + std::to_string(bus) + "] references unknown bus");
        for (int g : doc.gen_sets.at(bus)) {
            Generator gen;
            gen.bus = bus;
            gen.index = g;
            auto it = doc.gen_bounds.find({bus, g});
            if (it != doc.gen_bounds.end()) {
                gen.p_min = it->second[0];
                gen.q_min = it->second[1];
                gen.p_max = it->second[2];
                gen.q_max = it->second[3];
            }
            gen.cost.assign(static_cast<size_t>(doc.kcard) + 1, 0.0);
            for (int k = 0; k <= doc.kcard; ++k) {
                auto jt = doc.cost.find({bus, g, k});
                gen.cost[static_cast<size_t>(k)] = jt != doc.cost.end() ? jt->second
                                                   : (k == 1 ? 1.0 : 0.0);
            }
            grid.generators.push_back(gen);
        }
    }
    for (const auto& [key, _] : doc.gen_bounds)
        if (!doc.gen_sets.count(key.first) ||
            std::find(doc.gen_sets.at(key.first).begin(), doc.gen_sets.at(key.first).end(),
                      key.second) == doc.gen_sets.at(key.first).end())
            throw SemanticError("generator bounds for undeclared generator (" +
                                std::to_string(key.first) + "," + std::to_string(key.second) +
                                ")");
    for (const auto& [key, _] : doc.cost) {
        auto [b, g, k] = key;
        if (k < 0 || k > doc.kcard)
            throw SemanticError("cost coefficient index " + std::to_string(k) +
                                " outside 0..Kcard");
        if (!doc.gen_sets.count(b) ||
            std::find(doc.gen_sets.at(b).begin(), doc.gen_sets.at(b).end(), g) ==
                doc.gen_sets.at(b).end())
            throw SemanticError("cost entry for undeclared generator (" + std::to_string(b) +
                                "," + std::to_string(g) + ")");
    }
    return grid;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---- MATPOWER ----

struct MatpowerCase {
    double base_mva = 100.0;
    std::vector<std::vector<double>> bus, gen, branch, gencost;
    bool has_gencost = false;
};

MatpowerCase parse_matpower_case(const std::string& text) {
    MatpowerCase mc;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool saw_base = false;
    auto strip_comment = [](std::string s) {
        size_t p = s.find('%');
        if (p != std::string::npos) s.erase(p);
        return s;
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_comment(line);
        size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        std::string lhs = line.substr(0, eq);
        lhs.erase(std::remove_if(lhs.begin(), lhs.end(),
                                 [](unsigned char c) { return std::isspace(c); }),
                  lhs.end());
        std::string field;
        if (lhs.rfind("mpc.", 0) == 0)
            field = lhs.substr(4);
        else if (lhs == "baseMVA" || lhs == "bus" || lhs == "gen" || lhs == "branch" ||
                 lhs == "gencost")
            field = lhs;
        else
            continue;

        std::string rhs = line.substr(eq + 1);
        if (field == "baseMVA") {
            std::string num = rhs;
            num.erase(std::remove_if(num.begin(), num.end(),
                                     [](unsigned char c) { return std::isspace(c) || c == ';'; }),
                      num.end());
            try {
                mc.base_mva = std::stod(num);
            } catch (const std::exception&) {
                throw SyntaxError("bad baseMVA value '" + num + "'", lineno, 1);
            }
            saw_base = true;
            continue;
        }
        if (field != "bus" && field != "gen" && field != "branch" && field != "gencost")
            continue;
        // accumulate matrix body until '];'
        std::string body = rhs;
        while (body.find(']') == std::string::npos && std::getline(in, line)) {
            ++lineno;
            body += "\n" + strip_comment(line);
        }
        size_t ob = body.find('[');
        size_t cb = body.find(']');
        if (ob == std::string::npos || cb == std::string::npos || cb < ob)
            throw SyntaxError("unterminated matrix for '" + field + "'", lineno, 1);
        std::string inner = body.substr(ob + 1, cb - ob - 1);
        std::vector<std::vector<double>> rows;
        std::istringstream rin(inner);
        std::string rowtext;
        // rows separated by ';' or newline
        std::string current;
        auto flush_row = [&rows, lineno](const std::string& s) {
            std::istringstream ss(s);
            std::vector<double> row;
            std::string tok;
            while (ss >> tok) {
                try {
                    size_t used = 0;
                    double v = std::stod(tok, &used);
                    if (used != tok.size()) throw std::invalid_argument(tok);
                    row.push_back(v);
                } catch (const std::exception&) {
                    throw SyntaxError("non-numeric matrix entry '" + tok + "'", lineno, 1);
                }
            }
            if (!row.empty()) rows.push_back(row);
        };
        for (char c : inner) {
            if (c == ';' || c == '\n') {
                flush_row(current);
                current.clear();
            } else {
                current += c;
            }
        }
        flush_row(current);
        if (!rows.empty()) {
            size_t width = rows[0].size();
            for (const auto& r : rows)
                if (r.size() != width)
                    throw SyntaxError("ragged matrix rows in '" + field + "'", lineno, 1);
        }
        if (field == "bus")
            mc.bus = rows;
        else if (field == "gen")
            mc.gen = rows;
        else if (field == "branch")
            mc.branch = rows;
        else {
            mc.gencost = rows;
            mc.has_gencost = true;
        }
    }
    if (!saw_base) throw SyntaxError("missing baseMVA", lineno, 1);
    if (mc.bus.empty()) throw SyntaxError("missing bus matrix", lineno, 1);
    return mc;
}

}  // namespace

Grid parse_dat(const std::string& text) { return assemble(parse_dat_document(text)); }

Grid parse_dat_stream(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_dat(ss.str());
}

Grid parse_matpower(const std::string& text) {
    MatpowerCase mc = parse_matpower_case(text);
    const double base = mc.base_mva;
    if (base <= 0.0) throw SemanticError("baseMVA must be positive");
    Grid grid;
    grid.base_mva = base;

    for (const auto& row : mc.bus) {
        if (row.size() < 13) throw SemanticError("bus row with fewer than 13 columns");
        Bus b;
        b.id = static_cast<int>(row[0]);
        const int type = static_cast<int>(row[1]);
        if (type < 1 || type > 3)
            throw SemanticError("bus " + std::to_string(b.id) + " has unsupported type " +
                                std::to_string(type));
        b.type = static_cast<BusType>(type);
        b.demand_re = row[2] / base;
        b.demand_im = row[3] / base;
        b.shunt_re = row[4] / base;
        b.shunt_im = row[5] / base;
        b.vm_hint = row[7];
        b.va_hint = row[8] * kPi / 180.0;
        b.v_max = row[11];
        b.v_min = row[12];
        grid.buses.push_back(b);
    }

    std::map<std::pair<int, int>, int> parallel_count;
    for (const auto& row : mc.branch) {
        if (row.size() < 13) throw SemanticError("branch row with fewer than 13 columns");
        Branch br;
        br.from_bus = static_cast<int>(row[0]);
        br.to_bus = static_cast<int>(row[1]);
        br.parallel = ++parallel_count[{br.from_bus, br.to_bus}];
        br.r = row[2];
        br.x = row[3];
        br.b_ch = row[4];
        br.s_max = row[5] > 0.0 ? row[5] / base : kInf;
        br.tau = row[8] != 0.0 ? row[8] : 1.0;
        br.nu = row[9] * kPi / 180.0;
        br.status = row[10] != 0.0;
        const double angmin = row[11];
        const double angmax = row[12];
        if (angmin == 0.0 && angmax == 0.0) {
            br.eta_min = -kPi;
            br.eta_max = kPi;
        } else {
            br.eta_min = angmin * kPi / 180.0;
            br.eta_max = angmax * kPi / 180.0;
        }
        grid.branches.push_back(br);
    }

    std::map<int, int> gen_index;
    for (size_t gi = 0; gi < mc.gen.size(); ++gi) {
        const auto& row = mc.gen[gi];
        if (row.size() < 10) throw SemanticError("gen row with fewer than 10 columns");
        Generator g;
        g.bus = static_cast<int>(row[0]);
        g.index = ++gen_index[g.bus];
        g.q_max = is_unbounded(row[3]) ? kInf : row[3] / base;
        g.q_min = is_unbounded(-row[4]) ? -kInf : row[4] / base;
        g.p_max = is_unbounded(row[8]) ? kInf : row[8] / base;
        g.p_min = is_unbounded(-row[9]) ? -kInf : row[9] / base;
        if (mc.has_gencost) {
            if (gi >= mc.gencost.size())
                throw SemanticError("gencost has fewer rows than gen");
            const auto& cost = mc.gencost[gi];
            if (cost.size() < 4) throw SemanticError("gencost row with fewer than 4 columns");
            const int model = static_cast<int>(cost[0]);
            if (model == 1)
                throw UnsupportedFeature("piecewise-linear generator costs are not supported");
            if (model != 2)
                throw SemanticError("unknown gencost model " + std::to_string(model));
            const int ncoef = static_cast<int>(cost[3]);
            if (cost.size() < static_cast<size_t>(4 + ncoef))
                throw SemanticError("gencost row shorter than its declared length");
            // stored highest-degree first; per-unit rescaling multiplies c_k by base^k
            g.cost.assign(static_cast<size_t>(std::max(ncoef, 1)), 0.0);
            for (int k = 0; k < ncoef; ++k) {
                const double c = cost[static_cast<size_t>(4 + ncoef - 1 - k)];
                g.cost[static_cast<size_t>(k)] = c * std::pow(base, k);
            }
            if (g.cost.size() > 3)
                throw UnsupportedFeature("generator cost degree above 2 is not supported");
        }
        grid.generators.push_back(g);
    }
    if (grid.buses.empty()) throw SemanticError("empty bus matrix");
    bool has_reference = false;
    for (const Bus& b : grid.buses) has_reference |= b.type == BusType::Reference;
    if (!has_reference) throw MissingReference("no bus with type 3");
    return grid;
}

std::string write_dat(const Grid& grid) {
    std::ostringstream os;
    int max_par = 1;
    for (const Branch& br : grid.branches) max_par = std::max(max_par, br.parallel);
    os << "param maxParBranches := " << max_par << " ;\n";

    os << "param : B : busType SDR SDC VL VU Vm Va shR shC :=\n";
    for (const Bus& b : grid.buses)
        os << "  " << b.id << "   " << static_cast<int>(b.type) << ' ' << fmt(b.demand_re) << ' '
           << fmt(b.demand_im) << ' ' << fmt(b.v_min) << ' ' << fmt(b.v_max) << ' '
           << fmt(b.vm_hint) << ' ' << fmt(b.va_hint) << ' ' << fmt(b.shunt_re) << ' '
           << fmt(b.shunt_im) << '\n';
    os << "  ;\n";

    std::map<int, std::vector<const Generator*>> by_bus;
    for (const Generator& g : grid.generators) by_bus[g.bus].push_back(&g);
    for (const Bus& b : grid.buses) {
        auto it = by_bus.find(b.id);
        if (it == by_bus.end()) continue;
        os << "set G[" << b.id << "] :=";
        for (const Generator* g : it->second) os << ' ' << g->index;
        os << " ;\n";
    }
    if (!grid.generators.empty()) {
        os << "param : SLR SLC SUR SUC :=\n";
        for (const Bus& b : grid.buses) {
            auto it = by_bus.find(b.id);
            if (it == by_bus.end()) continue;
            for (const Generator* g : it->second)
                os << "  " << g->bus << ' ' << g->index << "   " << fmt(g->p_min) << ' '
                   << fmt(g->q_min) << ' ' << fmt(g->p_max) << ' ' << fmt(g->q_max) << '\n';
        }
        os << "  ;\n";
    }

    if (!grid.branches.empty()) {
        bool any_imax = false;
        for (const Branch& br : grid.branches) any_imax |= br.i_max.has_value();
        os << "param : L0 : status SU r x bb tau nu pdLB pdUB" << (any_imax ? " IU" : "")
           << " :=\n";
        for (const Branch& br : grid.branches) {
            os << "  " << br.from_bus << ' ' << br.to_bus << ' ' << br.parallel << "   "
               << (br.status ? 1 : 0) << ' ' << fmt(br.s_max) << ' ' << fmt(br.r) << ' '
               << fmt(br.x) << ' ' << fmt(br.b_ch) << ' ' << fmt(br.tau) << ' ' << fmt(br.nu)
               << ' ' << fmt(br.eta_min) << ' ' << fmt(br.eta_max);
            if (any_imax) os << ' ' << fmt(br.i_max ? *br.i_max : kInf);
            os << '\n';
        }
        os << "  ;\n";
    }

    size_t kcard = 2;
    for (const Generator& g : grid.generators)
        kcard = std::max(kcard, g.cost.empty() ? size_t{0} : g.cost.size() - 1);
    os << "param Kcard := " << kcard << " ;\n";
    if (!grid.generators.empty()) {
        os << "param C :=\n";
        for (const Bus& b : grid.buses) {
            auto it = by_bus.find(b.id);
            if (it == by_bus.end()) continue;
            for (const Generator* g : it->second)
                for (size_t k = 0; k <= kcard; ++k) {
                    const double c = k < g->cost.size() ? g->cost[k] : 0.0;
                    os << "  " << g->bus << ' ' << g->index << ' ' << k << "   " << fmt(c)
                       << '\n';
                }
        }
        os << "  ;\n";
    }
    return os.str();
}

}  // namespace acopf
