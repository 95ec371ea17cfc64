#include "acopf/formulation.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace acopf {

int Formulation::add_variable(const std::string& name, double lb, double ub) {
    if (index_.count(name))
        throw std::logic_error("variable '" + name + "' declared twice");
    const int idx = static_cast<int>(variables.size());
    variables.push_back({name, lb, ub});
    index_[name] = idx;
    return idx;
}

int Formulation::var(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw MissingVariable("no variable named '" + name + "'");
    return it->second;
}

bool Formulation::has_var(const std::string& name) const { return index_.count(name) != 0; }

void PolyExpr::add(double coef, Monomial mono) {
    if (coef == 0.0) return;
    std::sort(mono.begin(), mono.end());
    terms_[std::move(mono)] += coef;
}

void PolyExpr::add_aff(double coef, const AffExpr& e) {
    if (coef == 0.0) return;
    if (e.constant != 0.0) add(coef * e.constant, {});
    for (const auto& [idx, c] : e.coeffs) add(coef * c, {idx});
}

std::vector<Term> PolyExpr::terms() const {
    std::vector<Term> out;
    for (const auto& [mono, coef] : terms_)
        if (coef != 0.0) out.push_back({coef, mono});
    return out;
}

PolyConstraint PolyExpr::constraint(Sense sense, double rhs, std::string tag) const {
    PolyConstraint c;
    c.terms = terms();
    c.sense = sense;
    c.rhs = rhs;
    c.tag = std::move(tag);
    return c;
}

double eval_terms(const std::vector<Term>& terms, const std::vector<double>& x) {
    double total = 0.0;
    for (const Term& t : terms) {
        double v = t.coef;
        for (int idx : t.mono) v *= x[static_cast<size_t>(idx)];
        total += v;
    }
    return total;
}

namespace {

double eval_aff(const AffExpr& e, const std::vector<double>& x) {
    double v = e.constant;
    for (const auto& [idx, c] : e.coeffs) v += c * x[static_cast<size_t>(idx)];
    return v;
}

}  // namespace

ResidualReport evaluate(const Formulation& f, const Point& p) {
    std::vector<double> x(f.variables.size());
    for (size_t i = 0; i < f.variables.size(); ++i) {
        auto it = p.find(f.variables[i].name);
        if (it == p.end())
            throw MissingVariable("point is missing variable '" + f.variables[i].name + "'");
        x[i] = it->second;
    }

    ResidualReport report;
    report.objective = eval_terms(f.objective, x);
    double worst = 0.0;

    for (size_t i = 0; i < f.variables.size(); ++i) {
        const Variable& v = f.variables[i];
        double viol = std::max(v.lb - x[i], x[i] - v.ub);
        if (viol > 0.0) {
            report.bounds.push_back({v.name, x[i], viol});
            worst = std::max(worst, viol);
        }
    }

    for (size_t i = 0; i < f.polys.size(); ++i) {
        const PolyConstraint& c = f.polys[i];
        const double lhs = eval_terms(c.terms, x);
        const double residual = lhs - c.rhs;
        double viol = 0.0;
        switch (c.sense) {
            case Sense::Eq: viol = std::fabs(residual); break;
            case Sense::Le: viol = std::max(0.0, residual); break;
            case Sense::Ge: viol = std::max(0.0, -residual); break;
        }
        report.poly.push_back({c.tag, i, residual, viol});
        worst = std::max(worst, viol);
    }

    for (size_t i = 0; i < f.socs.size(); ++i) {
        const SocConstraint& c = f.socs[i];
        double lhs = 0.0;
        for (const AffExpr& m : c.members) {
            const double v = eval_aff(m, x);
            lhs += v * v;
        }
        const double t = eval_aff(c.t, x);
        double viol, residual;
        if (c.rotated) {
            const double w = eval_aff(c.w, x);
            residual = lhs - t * w;
            viol = std::max({residual, -t, -w, 0.0});
        } else {
            residual = lhs - t * t;
            viol = std::max({residual, -t, 0.0});
        }
        report.soc.push_back({c.tag, i, residual, viol});
        worst = std::max(worst, viol);
    }

    for (size_t i = 0; i < f.psds.size(); ++i) {
        const PsdBlock& b = f.psds[i];
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(b.dim, b.dim);
        for (const auto& [pos, e] : b.entries) {
            const double v = eval_aff(e, x);
            M(pos.first, pos.second) = v;
            M(pos.second, pos.first) = v;
        }
        if (b.negative) M = -M;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
        const double min_eig = b.dim == 0 ? 0.0 : es.eigenvalues().minCoeff();
        const double viol = std::max(0.0, -min_eig);
        report.psd.push_back({b.tag, i, min_eig, viol});
        worst = std::max(worst, viol);
    }

    report.max_violation = worst;
    return report;
}

std::pair<bool, double> feasibility(const Formulation& f, const Point& p, double tol) {
    ResidualReport report = evaluate(f, p);
    return {report.max_violation <= tol, report.max_violation};
}

}  // namespace acopf
