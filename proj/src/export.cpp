#include "acopf/export.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <vector>

#include "json.hpp"

#include "acopf/grid.hpp"

namespace acopf {

namespace {

using nlohmann::json;

json aff_to_json(const AffExpr& e) {
    json coeffs = json::array();
    for (const auto& [i, v] : e.coeffs) coeffs.push_back(json::array({i, v}));
    return json{{"constant", e.constant}, {"coeffs", coeffs}};
}

AffExpr aff_from_json(const json& j) {
    AffExpr e;
    e.constant = j.at("constant").get<double>();
    for (const auto& c : j.at("coeffs"))
        e.coeffs.emplace_back(c.at(0).get<int>(), c.at(1).get<double>());
    return e;
}

json terms_to_json(const std::vector<Term>& terms) {
    json out = json::array();
    for (const Term& t : terms)
        out.push_back(json{{"coef", t.coef}, {"mono", t.mono}});
    return out;
}

std::vector<Term> terms_from_json(const json& j) {
    std::vector<Term> out;
    for (const auto& t : j) {
        Term term;
        term.coef = t.at("coef").get<double>();
        term.mono = t.at("mono").get<Monomial>();
        out.push_back(term);
    }
    return out;
}

const char* sense_name(Sense s) {
    switch (s) {
        case Sense::Eq: return "eq";
        case Sense::Le: return "le";
        case Sense::Ge: return "ge";
    }
    return "eq";
}

Sense sense_from(const std::string& s) {
    if (s == "eq") return Sense::Eq;
    if (s == "le") return Sense::Le;
    if (s == "ge") return Sense::Ge;
    throw std::invalid_argument("unknown constraint sense '" + s + "'");
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string export_json(const Formulation& f) {
    json doc;
    doc["schema_version"] = 1;
    doc["kind"] = f.kind;
    doc["grid_hash"] = f.grid_hash;
    json vars = json::array();
    for (const Variable& v : f.variables)
        vars.push_back(json{{"name", v.name}, {"lb", v.lb}, {"ub", v.ub}});
    doc["variables"] = vars;
    doc["objective"] = terms_to_json(f.objective);

    json polys = json::array();
    for (const PolyConstraint& c : f.polys)
        polys.push_back(json{{"tag", c.tag},
                             {"sense", sense_name(c.sense)},
                             {"rhs", c.rhs},
                             {"terms", terms_to_json(c.terms)}});
    doc["polys"] = polys;

    json socs = json::array();
    for (const SocConstraint& c : f.socs) {
        json members = json::array();
        for (const AffExpr& e : c.members) members.push_back(aff_to_json(e));
        json entry{{"tag", c.tag},
                   {"rotated", c.rotated},
                   {"members", members},
                   {"t", aff_to_json(c.t)}};
        if (c.rotated) entry["w"] = aff_to_json(c.w);
        socs.push_back(entry);
    }
    doc["socs"] = socs;

    json psds = json::array();
    for (const PsdBlock& b : f.psds) {
        json entries = json::array();
        for (const auto& [ij, e] : b.entries)
            entries.push_back(json::array({ij.first, ij.second, aff_to_json(e)}));
        psds.push_back(json{{"tag", b.tag},
                            {"dim", b.dim},
                            {"negative", b.negative},
                            {"entries", entries}});
    }
    doc["psds"] = psds;
    return doc.dump(1) + "\n";
}

Formulation import_json(const std::string& text) {
    const json doc = json::parse(text);
    if (doc.at("schema_version").get<int>() != 1)
        throw std::invalid_argument("unsupported model schema version");
    Formulation f;
    f.kind = doc.at("kind").get<std::string>();
    f.grid_hash = doc.at("grid_hash").get<std::uint64_t>();
    for (const auto& v : doc.at("variables"))
        f.add_variable(v.at("name").get<std::string>(), v.at("lb").get<double>(),
                       v.at("ub").get<double>());
    f.objective = terms_from_json(doc.at("objective"));
    for (const auto& c : doc.at("polys")) {
        PolyConstraint pc;
        pc.tag = c.at("tag").get<std::string>();
        pc.sense = sense_from(c.at("sense").get<std::string>());
        pc.rhs = c.at("rhs").get<double>();
        pc.terms = terms_from_json(c.at("terms"));
        f.polys.push_back(pc);
    }
    for (const auto& c : doc.at("socs")) {
        SocConstraint sc;
        sc.tag = c.at("tag").get<std::string>();
        sc.rotated = c.at("rotated").get<bool>();
        for (const auto& e : c.at("members")) sc.members.push_back(aff_from_json(e));
        sc.t = aff_from_json(c.at("t"));
        if (sc.rotated) sc.w = aff_from_json(c.at("w"));
        f.socs.push_back(sc);
    }
    for (const auto& b : doc.at("psds")) {
        PsdBlock pb;
        pb.tag = b.at("tag").get<std::string>();
        pb.dim = b.at("dim").get<int>();
        pb.negative = b.at("negative").get<bool>();
        for (const auto& e : b.at("entries"))
            pb.entries[{e.at(0).get<int>(), e.at(1).get<int>()}] = aff_from_json(e.at(2));
        f.psds.push_back(pb);
    }
    return f;
}

namespace {

// One 1x1 diagonal slot: slack = sum a_i x_i - f0 >= 0.
struct DiagRow {
    std::map<int, double> a;
    double f0 = 0.0;
};

// A square block M(x) = C + sum x_i M_i required PSD; entries keyed (i,j), i<=j.
struct DenseBlock {
    int dim = 0;
    std::map<std::pair<int, int>, AffExpr> entries;
};

void split_linear(const PolyConstraint& c, double* constant, std::map<int, double>* coef) {
    *constant = 0.0;
    for (const Term& t : c.terms) {
        if (t.mono.empty())
            *constant += t.coef;
        else if (t.mono.size() == 1)
            (*coef)[t.mono[0]] += t.coef;
        else
            throw UnsupportedConstraint("constraint '" + c.tag +
                                        "' has polynomial degree above 1");
    }
}

AffExpr negate_aff(AffExpr e) {
    e.constant = -e.constant;
    for (auto& [i, v] : e.coeffs) v = -v;
    return e;
}

// Equivalent PSD form of u1^2 + u2^2 <= t*w (or <= t^2): the 4x4 real
// embedding of the Hermitian matrix [[t, u1 + i u2], [u1 - i u2, w]].
DenseBlock embed_soc(const SocConstraint& c) {
    if (c.members.size() > 2)
        throw UnsupportedConstraint("cone constraint '" + c.tag +
                                    "' has more than two members");
    const AffExpr u = c.t;
    const AffExpr v = c.rotated ? c.w : c.t;
    const AffExpr m1 = c.members.empty() ? AffExpr{} : c.members[0];
    const AffExpr m2 = c.members.size() > 1 ? c.members[1] : AffExpr{};
    DenseBlock b;
    b.dim = 4;
    b.entries[{0, 0}] = u;
    b.entries[{1, 1}] = v;
    b.entries[{2, 2}] = u;
    b.entries[{3, 3}] = v;
    b.entries[{0, 1}] = m1;
    b.entries[{2, 3}] = m1;
    b.entries[{0, 3}] = negate_aff(m2);
    b.entries[{1, 2}] = m2;
    return b;
}

}  // namespace

std::string export_sdpa(const Formulation& f) {
    const int nvar = static_cast<int>(f.variables.size());

    // objective must be linear in the variables; the constant is recorded in
    // the header comments
    double obj_constant = 0.0;
    std::vector<double> obj(nvar, 0.0);
    for (const Term& t : f.objective) {
        if (t.mono.empty())
            obj_constant += t.coef;
        else if (t.mono.size() == 1)
            obj[static_cast<size_t>(t.mono[0])] += t.coef;
        else
            throw UnsupportedConstraint("objective has polynomial degree above 1");
    }

    std::vector<DiagRow> rows;
    for (const PolyConstraint& c : f.polys) {
        double constant;
        std::map<int, double> coef;
        split_linear(c, &constant, &coef);
        if (c.sense == Sense::Ge || c.sense == Sense::Eq) {
            DiagRow r;
            r.a = coef;
            r.f0 = c.rhs - constant;
            rows.push_back(r);
        }
        if (c.sense == Sense::Le || c.sense == Sense::Eq) {
            DiagRow r;
            for (const auto& [i, v] : coef) r.a[i] = -v;
            r.f0 = constant - c.rhs;
            rows.push_back(r);
        }
    }
    for (int i = 0; i < nvar; ++i) {
        const Variable& v = f.variables[static_cast<size_t>(i)];
        if (!is_unbounded(v.lb)) {
            DiagRow r;
            r.a[i] = 1.0;
            r.f0 = v.lb;
            rows.push_back(r);
        }
        if (!is_unbounded(v.ub)) {
            DiagRow r;
            r.a[i] = -1.0;
            r.f0 = -v.ub;
            rows.push_back(r);
        }
    }

    std::vector<DenseBlock> blocks;
    for (const SocConstraint& c : f.socs) blocks.push_back(embed_soc(c));
    for (const PsdBlock& b : f.psds) {
        DenseBlock db;
        db.dim = b.dim;
        for (const auto& [ij, e] : b.entries)
            db.entries[ij] = b.negative ? negate_aff(e) : e;
        blocks.push_back(db);
    }

    std::ostringstream os;
    os << "* kind: " << f.kind << "\n";
    os << "* sense: minimize; the c vector below is negated to the format's max"
          " convention, so negate the reported optimum\n";
    os << "* objective constant term: " << fmt17(obj_constant) << "\n";
    os << nvar << " = mDIM\n";
    const int nblock = static_cast<int>(blocks.size()) + (rows.empty() ? 0 : 1);
    os << nblock << " = nBLOCK\n";
    for (size_t b = 0; b < blocks.size(); ++b) os << (b ? " " : "") << blocks[b].dim;
    if (!rows.empty()) os << (blocks.empty() ? "" : " ") << '-' << rows.size();
    os << "\n";
    for (int i = 0; i < nvar; ++i) {
        const double c = obj[static_cast<size_t>(i)];
        os << (i ? " " : "") << fmt17(c == 0.0 ? 0.0 : -c);
    }
    os << "\n";

    auto put = [&os](int k, int blk, int i, int j, double v) {
        if (v == 0.0) return;
        os << k << ' ' << blk << ' ' << i << ' ' << j << ' ' << fmt17(v) << "\n";
    };
    for (size_t b = 0; b < blocks.size(); ++b) {
        const int blk = static_cast<int>(b) + 1;
        for (const auto& [ij, e] : blocks[b].entries) {
            put(0, blk, ij.first + 1, ij.second + 1, -e.constant);
            for (const auto& [i, v] : e.coeffs) put(i + 1, blk, ij.first + 1, ij.second + 1, v);
        }
    }
    const int diag_blk = static_cast<int>(blocks.size()) + 1;
    for (size_t r = 0; r < rows.size(); ++r) {
        const int pos = static_cast<int>(r) + 1;
        put(0, diag_blk, pos, pos, rows[r].f0);
        for (const auto& [i, v] : rows[r].a) put(i + 1, diag_blk, pos, pos, v);
    }
    return os.str();
}

Point read_point_json(const std::string& text) {
    const json doc = json::parse(text);
    if (!doc.is_object()) throw std::invalid_argument("point file must be a JSON object");
    Point p;
    for (const auto& [name, v] : doc.items()) {
        if (!v.is_number())
            throw std::invalid_argument("point entry '" + name + "' is not a number");
        p[name] = v.get<double>();
    }
    return p;
}

std::string write_point_json(const Point& p) {
    json doc = json::object();
    for (const auto& [name, v] : p) doc[name] = v;
    return doc.dump(1) + "\n";
}

}  // namespace acopf
