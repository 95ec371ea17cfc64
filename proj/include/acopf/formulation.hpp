#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace acopf {

struct Variable {
    std::string name;
    double lb;
    double ub;
};

// A monomial is the sorted multiset of variable indices it multiplies;
// an empty monomial is the constant term.
using Monomial = std::vector<int>;

struct Term {
    double coef;
    Monomial mono;
};

enum class Sense { Eq, Le, Ge };

// Polynomial constraint sum(terms) <sense> rhs. Monomials are sorted and
// merged, so two constraints with the same content compare equal term-for-term.
struct PolyConstraint {
    std::vector<Term> terms;
    Sense sense = Sense::Eq;
    double rhs = 0.0;
    std::string tag;
};

// Affine expression constant + sum coef_i * x_i over variable indices.
struct AffExpr {
    double constant = 0.0;
    std::vector<std::pair<int, double>> coeffs;  // sorted by index, merged
};

// members_1^2 + ... + members_k^2 <= t*w (rotated, with t,w >= 0) or <= t^2.
struct SocConstraint {
    std::vector<AffExpr> members;
    AffExpr t;
    AffExpr w;  // ignored unless rotated
    bool rotated = false;
    std::string tag;
};

// Symmetric matrix of affine expressions, required PSD (or NSD).
struct PsdBlock {
    int dim = 0;
    std::map<std::pair<int, int>, AffExpr> entries;  // stored for i <= j
    bool negative = false;                           // true: matrix <= 0
    std::string tag;
};

struct MissingVariable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Formulation {
    std::string kind;
    std::uint64_t grid_hash = 0;
    std::vector<Variable> variables;
    std::vector<Term> objective;  // degree <= 2
    std::vector<PolyConstraint> polys;
    std::vector<SocConstraint> socs;
    std::vector<PsdBlock> psds;

    int add_variable(const std::string& name, double lb, double ub);
    int var(const std::string& name) const;  // throws MissingVariable
    bool has_var(const std::string& name) const;

private:
    std::map<std::string, int> index_;
};

// Accumulator that keeps monomials canonical while a constraint is assembled.
class PolyExpr {
public:
    void add(double coef, Monomial mono);
    void add_aff(double coef, const AffExpr& e);  // coef * affine expression
    std::vector<Term> terms() const;
    PolyConstraint constraint(Sense sense, double rhs, std::string tag) const;

private:
    std::map<Monomial, double> terms_;
};

using Point = std::map<std::string, double>;

struct ConstraintResidual {
    std::string tag;
    size_t index;      // position within its constraint list
    double residual;   // lhs - rhs (poly), lhs - cone bound (soc)
    double violation;  // 0 when satisfied
};

struct PsdResidual {
    std::string tag;
    size_t index;
    double min_eigenvalue;  // of M for >=0 blocks, of -M for <=0 blocks
    double violation;
};

struct BoundViolation {
    std::string name;
    double value;
    double violation;
};

struct ResidualReport {
    double objective = 0.0;
    std::vector<ConstraintResidual> poly;
    std::vector<ConstraintResidual> soc;
    std::vector<PsdResidual> psd;
    std::vector<BoundViolation> bounds;
    double max_violation = 0.0;
};

double eval_terms(const std::vector<Term>& terms, const std::vector<double>& x);

ResidualReport evaluate(const Formulation& f, const Point& p);

std::pair<bool, double> feasibility(const Formulation& f, const Point& p, double tol);

}  // namespace acopf
