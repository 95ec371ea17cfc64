#include "acopf/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "acopf/builders.hpp"
#include "acopf/names.hpp"
#include "acopf/transforms.hpp"

namespace acopf {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::feasible: return "feasible";
        case SolveStatus::infeasible_detected: return "infeasible_detected";
        case SolveStatus::iteration_limit: return "iteration_limit";
        case SolveStatus::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

namespace {

constexpr double kPi = 3.14159265358979323846;

struct ArcView {
    Arc arc;
    Complex own, cross;  // I_bah = own * V_b + cross * V_a
};

std::vector<ArcView> arc_views(const Grid& g) {
    std::vector<ArcView> out;
    for (const Arc& arc : all_arcs(g)) {
        const BranchAdmittance y = branch_admittance(*arc.branch);
        if (!arc.reversed)
            out.push_back({arc, y.yff, y.yft});
        else
            out.push_back({arc, y.ytt, y.ytf});
    }
    return out;
}

bool finite_flow_bound(const Branch& br) { return br.s_max > 0.0 && !is_unbounded(br.s_max); }

double objective_scale(const Grid& g) {
    double s = 1.0;
    for (const Generator& gen : g.generators)
        for (size_t k = 1; k < gen.cost.size(); ++k) s = std::max(s, std::fabs(gen.cost[k]));
    return s;
}

// ---------------------------------------------------------------------------
// Jabr barrier solver
// ---------------------------------------------------------------------------

// Internal convex model in x = [c_bb | c_p | s_p | pg | qg]. Flow limits are
// enforced on the linear flow expressions (|S(x)|^2 <= Sbar^2), which relaxes
// the printed quadratic form inside the cone and therefore keeps the solve a
// valid lower bound.
struct JabrModel {
    int nb = 0, np = 0, ng = 0, nvar = 0;
    std::vector<std::pair<int, int>> pairs;
    Eigen::MatrixXd A;  // equality rows
    Eigen::VectorXd b;

    struct LinTerm {  // slack = c + a.x > 0
        Eigen::VectorXd a;
        double c;
    };
    struct ConeTerm {  // cbb * caa - cp^2 - sp^2 > 0
        int cbb, caa, cp, sp;
    };
    struct FlowTerm {  // su2 - (aR.x)^2 - (aC.x)^2 > 0
        Eigen::VectorXd aR, aC;
        double su2;
    };
    std::vector<LinTerm> lins;
    std::vector<ConeTerm> cones;
    std::vector<FlowTerm> flows;

    // scaled quadratic objective f = q0 + q1.x + sum q2_i x_i^2
    double q0 = 0.0;
    Eigen::VectorXd q1, q2;
    double scale = 1.0;

    int cbb_at(const Grid& g, int bus) const { return /*pos*/ g.bus_pos(bus); }
    int pair_at(int b, int a) const {
        for (size_t k = 0; k < pairs.size(); ++k)
            if (pairs[k] == std::make_pair(b, a)) return static_cast<int>(k);
        throw std::logic_error("pair lookup failed");
    }
};

JabrModel make_jabr_model(const Grid& g) {
    JabrModel m;
    m.pairs = adjacent_pairs(g);
    m.nb = static_cast<int>(g.buses.size());
    m.np = static_cast<int>(m.pairs.size());
    m.ng = static_cast<int>(g.generators.size());
    m.nvar = m.nb + 2 * m.np + 2 * m.ng;
    const int off_cp = m.nb, off_sp = m.nb + m.np;
    const int off_pg = m.nb + 2 * m.np, off_qg = off_pg + m.ng;

    const auto arcs = arc_views(g);

    // balance rows: sum of flows + shunt * c_bb - generation = -demand
    m.A = Eigen::MatrixXd::Zero(2 * m.nb, m.nvar);
    m.b = Eigen::VectorXd::Zero(2 * m.nb);
    for (int p = 0; p < m.nb; ++p) {
        const Bus& bus = g.buses[static_cast<size_t>(p)];
        Eigen::VectorXd re = Eigen::VectorXd::Zero(m.nvar);
        Eigen::VectorXd im = Eigen::VectorXd::Zero(m.nvar);
        for (const ArcView& av : arcs) {
            if (av.arc.from != bus.id) continue;
            auto [pr, sign] = canonical_pair(m.pairs, av.arc.from, av.arc.to);
            const int kp = m.pair_at(pr.first, pr.second);
            const double oR = av.own.real(), oC = av.own.imag();
            const double cR = av.cross.real(), cC = av.cross.imag();
            re(p) += oR;
            re(off_cp + kp) += cR;
            re(off_sp + kp) += sign * cC;
            im(p) += -oC;
            im(off_sp + kp) += sign * cR;
            im(off_cp + kp) += -cC;
        }
        re(p) += bus.shunt_re;
        im(p) += -bus.shunt_im;
        for (size_t gi = 0; gi < g.generators.size(); ++gi)
            if (g.generators[gi].bus == bus.id) {
                re(off_pg + static_cast<int>(gi)) -= 1.0;
                im(off_qg + static_cast<int>(gi)) -= 1.0;
            }
        m.A.row(2 * p) = re;
        m.b(2 * p) = -bus.demand_re;
        m.A.row(2 * p + 1) = im;
        m.b(2 * p + 1) = -bus.demand_im;
    }

    std::vector<Eigen::VectorXd> extra_eq;
    std::vector<double> extra_rhs;
    auto add_box = [&](int idx, double lo, double hi) {
        if (!is_unbounded(lo) && !is_unbounded(hi) && hi - lo <= 1e-12) {
            Eigen::VectorXd row = Eigen::VectorXd::Zero(m.nvar);
            row(idx) = 1.0;
            extra_eq.push_back(row);
            extra_rhs.push_back(lo);
            return;
        }
        if (!is_unbounded(lo)) {
            Eigen::VectorXd a = Eigen::VectorXd::Zero(m.nvar);
            a(idx) = 1.0;
            m.lins.push_back({a, -lo});
        }
        if (!is_unbounded(hi)) {
            Eigen::VectorXd a = Eigen::VectorXd::Zero(m.nvar);
            a(idx) = -1.0;
            m.lins.push_back({a, hi});
        }
    };

    for (int p = 0; p < m.nb; ++p) {
        const Bus& bus = g.buses[static_cast<size_t>(p)];
        add_box(p, bus.v_min * bus.v_min,
                is_unbounded(bus.v_max) ? kInf : bus.v_max * bus.v_max);
    }
    for (int gi = 0; gi < m.ng; ++gi) {
        add_box(off_pg + gi, g.generators[static_cast<size_t>(gi)].p_min,
                g.generators[static_cast<size_t>(gi)].p_max);
        add_box(off_qg + gi, g.generators[static_cast<size_t>(gi)].q_min,
                g.generators[static_cast<size_t>(gi)].q_max);
    }

    if (!extra_eq.empty()) {
        const int base = static_cast<int>(m.A.rows());
        m.A.conservativeResize(base + static_cast<int>(extra_eq.size()), Eigen::NoChange);
        m.b.conservativeResize(base + static_cast<int>(extra_eq.size()));
        for (size_t k = 0; k < extra_eq.size(); ++k) {
            m.A.row(base + static_cast<int>(k)) = extra_eq[k];
            m.b(base + static_cast<int>(k)) = extra_rhs[k];
        }
    }

    for (int kp = 0; kp < m.np; ++kp) {
        const int bpos = g.bus_pos(m.pairs[static_cast<size_t>(kp)].first);
        const int apos = g.bus_pos(m.pairs[static_cast<size_t>(kp)].second);
        m.cones.push_back({bpos, apos, off_cp + kp, off_sp + kp});
    }

    constexpr double kTanGuard = kPi / 2 - 1e-9;
    for (const Branch* br : g.active_branches()) {
        auto [pr, sign] = canonical_pair(m.pairs, br->from_bus, br->to_bus);
        (void)sign;  // L0 orientation, sign is +1
        const int kp = m.pair_at(pr.first, pr.second);
        const bool lo = br->eta_min > -kTanGuard;
        const bool hi = br->eta_max < kTanGuard;
        if (lo) {  // sp - tan(lo) cp >= 0
            Eigen::VectorXd a = Eigen::VectorXd::Zero(m.nvar);
            a(off_sp + kp) = 1.0;
            a(off_cp + kp) = -std::tan(br->eta_min);
            m.lins.push_back({a, 0.0});
        }
        if (hi) {  // tan(hi) cp - sp >= 0
            Eigen::VectorXd a = Eigen::VectorXd::Zero(m.nvar);
            a(off_cp + kp) = std::tan(br->eta_max);
            a(off_sp + kp) = -1.0;
            m.lins.push_back({a, 0.0});
        }
        if (lo || hi) {  // cp >= 0
            Eigen::VectorXd a = Eigen::VectorXd::Zero(m.nvar);
            a(off_cp + kp) = 1.0;
            m.lins.push_back({a, 0.0});
        }
    }

    for (const ArcView& av : arcs) {
        if (!finite_flow_bound(*av.arc.branch)) continue;
        auto [pr, sign] = canonical_pair(m.pairs, av.arc.from, av.arc.to);
        const int kp = m.pair_at(pr.first, pr.second);
        const int bpos = g.bus_pos(av.arc.from);
        const double oR = av.own.real(), oC = av.own.imag();
        const double cR = av.cross.real(), cC = av.cross.imag();
        JabrModel::FlowTerm ft;
        ft.aR = Eigen::VectorXd::Zero(m.nvar);
        ft.aC = Eigen::VectorXd::Zero(m.nvar);
        ft.aR(bpos) = oR;
        ft.aR(off_cp + kp) = cR;
        ft.aR(off_sp + kp) = sign * cC;
        ft.aC(bpos) = -oC;
        ft.aC(off_sp + kp) = sign * cR;
        ft.aC(off_cp + kp) = -cC;
        ft.su2 = av.arc.branch->s_max * av.arc.branch->s_max;
        m.flows.push_back(ft);
    }

    m.scale = objective_scale(g);
    m.q1 = Eigen::VectorXd::Zero(m.nvar);
    m.q2 = Eigen::VectorXd::Zero(m.nvar);
    for (int gi = 0; gi < m.ng; ++gi) {
        const auto& cost = g.generators[static_cast<size_t>(gi)].cost;
        if (!cost.empty()) m.q0 += cost[0] / m.scale;
        if (cost.size() > 1) m.q1(off_pg + gi) = cost[1] / m.scale;
        if (cost.size() > 2) m.q2(off_pg + gi) = cost[2] / m.scale;
    }
    return m;
}

struct BarrierEval {
    double phi = 0.0;          // sum of -log terms
    Eigen::VectorXd grad;      // of phi
    Eigen::MatrixXd hess;      // of phi
    double min_slack = kInf;   // strict interior check
};

bool barrier_eval(const JabrModel& m, const Eigen::VectorXd& x, BarrierEval* out,
                  bool derivatives) {
    if (out && derivatives) {
        out->grad = Eigen::VectorXd::Zero(m.nvar);
        out->hess = Eigen::MatrixXd::Zero(m.nvar, m.nvar);
    }
    double phi = 0.0, min_slack = kInf;
    for (const auto& t : m.lins) {
        const double s = t.c + t.a.dot(x);
        min_slack = std::min(min_slack, s);
        if (s <= 0.0) {
            if (out) out->min_slack = min_slack;
            return false;
        }
        phi -= std::log(s);
        if (out && derivatives) {
            out->grad -= t.a / s;
            out->hess += (t.a * t.a.transpose()) / (s * s);
        }
    }
    for (const auto& t : m.cones) {
        const double q =
            x(t.cbb) * x(t.caa) - x(t.cp) * x(t.cp) - x(t.sp) * x(t.sp);
        min_slack = std::min(min_slack, q);
        if (q <= 0.0 || x(t.cbb) <= 0.0 || x(t.caa) <= 0.0) {
            if (out) out->min_slack = std::min(min_slack, 0.0);
            return false;
        }
        phi -= std::log(q);
        if (out && derivatives) {
            Eigen::VectorXd dq = Eigen::VectorXd::Zero(m.nvar);
            dq(t.cbb) = x(t.caa);
            dq(t.caa) = x(t.cbb);
            dq(t.cp) = -2.0 * x(t.cp);
            dq(t.sp) = -2.0 * x(t.sp);
            out->grad -= dq / q;
            out->hess += (dq * dq.transpose()) / (q * q);
            // -(d2 q)/q
            out->hess(t.cbb, t.caa) -= 1.0 / q;
            out->hess(t.caa, t.cbb) -= 1.0 / q;
            out->hess(t.cp, t.cp) += 2.0 / q;
            out->hess(t.sp, t.sp) += 2.0 / q;
        }
    }
    for (const auto& t : m.flows) {
        const double sR = t.aR.dot(x), sC = t.aC.dot(x);
        const double q = t.su2 - sR * sR - sC * sC;
        min_slack = std::min(min_slack, q);
        if (q <= 0.0) {
            if (out) out->min_slack = std::min(min_slack, 0.0);
            return false;
        }
        phi -= std::log(q);
        if (out && derivatives) {
            const Eigen::VectorXd dq = -2.0 * sR * t.aR - 2.0 * sC * t.aC;
            out->grad -= dq / q;
            out->hess += (dq * dq.transpose()) / (q * q);
            out->hess += (2.0 / q) * (t.aR * t.aR.transpose());
            out->hess += (2.0 / q) * (t.aC * t.aC.transpose());
        }
    }
    if (out) {
        out->phi = phi;
        out->min_slack = min_slack;
    }
    return true;
}

Eigen::VectorXd jabr_start(const Grid& g, const JabrModel& m) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(m.nvar);
    const int off_cp = m.nb, off_sp = m.nb + m.np;
    const int off_pg = m.nb + 2 * m.np, off_qg = off_pg + m.ng;
    for (int p = 0; p < m.nb; ++p) {
        const Bus& bus = g.buses[static_cast<size_t>(p)];
        const double lo = bus.v_min * bus.v_min;
        const double hi = is_unbounded(bus.v_max) ? lo + 1.0 : bus.v_max * bus.v_max;
        x(p) = (lo + hi) / 2.0;
        if (x(p) <= 0.0) x(p) = 0.5;
    }
    for (int kp = 0; kp < m.np; ++kp) {
        const int bpos = g.bus_pos(m.pairs[static_cast<size_t>(kp)].first);
        const int apos = g.bus_pos(m.pairs[static_cast<size_t>(kp)].second);
        x(off_cp + kp) = 0.98 * std::sqrt(x(bpos) * x(apos));
        x(off_sp + kp) = 0.0;
    }
    for (int gi = 0; gi < m.ng; ++gi) {
        const Generator& gen = g.generators[static_cast<size_t>(gi)];
        auto mid = [](double lo, double hi) {
            if (!is_unbounded(lo) && !is_unbounded(hi)) return (lo + hi) / 2.0;
            if (!is_unbounded(lo)) return lo + 1.0;
            if (!is_unbounded(hi)) return hi - 1.0;
            return 0.0;
        };
        x(off_pg + gi) = mid(gen.p_min, gen.p_max);
        x(off_qg + gi) = mid(gen.q_min, gen.q_max);
    }
    // a near-flat voltage profile keeps line flows small; push the pair
    // entries toward sqrt(c_bb c_aa) until every barrier term is interior
    BarrierEval be;
    double gamma = 0.98;
    for (int tries = 0; tries < 60 && !barrier_eval(m, x, &be, false); ++tries) {
        gamma = 1.0 - 0.5 * (1.0 - gamma);
        for (int kp = 0; kp < m.np; ++kp) {
            const int bpos = g.bus_pos(m.pairs[static_cast<size_t>(kp)].first);
            const int apos = g.bus_pos(m.pairs[static_cast<size_t>(kp)].second);
            x(off_cp + kp) = gamma * std::sqrt(x(bpos) * x(apos));
        }
    }
    return x;
}

}  // namespace

SolveResult solve_jabr_barrier(const Grid& g, const SolveOptions& opts) {
    require_valid(g);
    SolveResult res;
    res.bound_kind = BoundKind::lower;

    const JabrModel m = make_jabr_model(g);
    const int n = m.nvar, neq = static_cast<int>(m.A.rows());
    Eigen::VectorXd x = jabr_start(g, m);
    Eigen::VectorXd lam = Eigen::VectorXd::Zero(neq);

    const double nterms = static_cast<double>(m.lins.size() + m.cones.size() + m.flows.size());
    auto fval = [&](const Eigen::VectorXd& z) {
        return m.q0 + m.q1.dot(z) + m.q2.dot(z.cwiseProduct(z));
    };

    BarrierEval be;
    if (!barrier_eval(m, x, &be, false)) {
        res.status = SolveStatus::numerical_failure;
        return res;
    }

    double mu = std::max(1.0, std::fabs(fval(x))) / std::max(1.0, nterms);
    const double mu_target = 1e-8 / std::max(1.0, nterms);
    int iters = 0;
    bool hit_limit = false, failed = false;

    auto kkt_residual = [&](const Eigen::VectorXd& z, const Eigen::VectorXd& l, double mu_,
                            BarrierEval& bev) -> std::optional<double> {
        if (!barrier_eval(m, z, &bev, true)) return std::nullopt;
        const Eigen::VectorXd rd =
            m.q1 + 2.0 * m.q2.cwiseProduct(z) + mu_ * bev.grad + m.A.transpose() * l;
        const Eigen::VectorXd rp = m.A * z - m.b;
        return std::sqrt(rd.squaredNorm() + rp.squaredNorm());
    };

    while (mu > mu_target && !hit_limit && !failed) {
        for (int inner = 0; inner < 60; ++inner) {
            if (iters >= opts.max_iter) {
                hit_limit = true;
                break;
            }
            BarrierEval bev;
            const auto rnorm = kkt_residual(x, lam, mu, bev);
            if (!rnorm) {
                failed = true;
                break;
            }
            const double inner_tol = std::max(1e-10, 1e-4 * mu);
            if (*rnorm <= inner_tol) break;

            Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + neq, n + neq);
            K.topLeftCorner(n, n) = mu * bev.hess;
            K.topLeftCorner(n, n).diagonal() += 2.0 * m.q2;
            K.topRightCorner(n, neq) = m.A.transpose();
            K.bottomLeftCorner(neq, n) = m.A;
            Eigen::VectorXd rhs(n + neq);
            rhs.head(n) =
                -(m.q1 + 2.0 * m.q2.cwiseProduct(x) + mu * bev.grad + m.A.transpose() * lam);
            rhs.tail(neq) = -(m.A * x - m.b);

            Eigen::VectorXd d;
            double reg = 0.0;
            for (int attempt = 0; attempt < 10; ++attempt) {
                Eigen::MatrixXd Kr = K;
                if (reg > 0.0) {
                    Kr.topLeftCorner(n, n).diagonal().array() += reg;
                    Kr.bottomRightCorner(neq, neq).diagonal().array() -= reg;
                }
                d = Kr.fullPivLu().solve(rhs);
                if (d.allFinite()) break;
                reg = reg == 0.0 ? 1e-10 : reg * 10.0;
                if (reg > 1e-2) break;
            }
            if (!d.allFinite()) {
                failed = true;
                break;
            }
            const Eigen::VectorXd dx = d.head(n), dl = d.tail(neq);

            double alpha = 1.0;
            BarrierEval probe;
            for (int k = 0; k < 200 && !barrier_eval(m, x + alpha * dx, &probe, false); ++k)
                alpha *= 0.8;
            alpha *= 0.99;
            bool accepted = false;
            while (alpha > 1e-12) {
                BarrierEval bev2;
                const auto rn2 = kkt_residual(x + alpha * dx, lam + alpha * dl, mu, bev2);
                if (rn2 && *rn2 <= (1.0 - 1e-4 * alpha) * *rnorm) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) break;  // stalled at this mu; move on
            x += alpha * dx;
            lam += alpha * dl;
            ++iters;
        }
        mu *= opts.barrier_reduction;
    }

    res.iterations = iters;
    const double f = fval(x);
    res.objective = m.scale * (f - mu / opts.barrier_reduction * nterms);

    // report the point in the conic model's variable names
    const int off_cp = m.nb, off_sp = m.nb + m.np;
    const int off_pg = m.nb + 2 * m.np, off_qg = off_pg + m.ng;
    for (int p = 0; p < m.nb; ++p) {
        const int id = g.buses[static_cast<size_t>(p)].id;
        res.point[vn("c", id, id)] = x(p);
    }
    for (int kp = 0; kp < m.np; ++kp) {
        res.point[vn("c", m.pairs[static_cast<size_t>(kp)].first,
                     m.pairs[static_cast<size_t>(kp)].second)] = x(off_cp + kp);
        res.point[vn("s", m.pairs[static_cast<size_t>(kp)].first,
                     m.pairs[static_cast<size_t>(kp)].second)] = x(off_sp + kp);
    }
    for (int gi = 0; gi < m.ng; ++gi) {
        const Generator& gen = g.generators[static_cast<size_t>(gi)];
        res.point[vn("SgenR", gen.bus, gen.index)] = x(off_pg + gi);
        res.point[vn("SgenC", gen.bus, gen.index)] = x(off_qg + gi);
    }

    // violation against the convex model: equalities plus barrier interiority
    BarrierEval fin;
    double viol = (m.A * x - m.b).cwiseAbs().maxCoeff();
    if (!barrier_eval(m, x, &fin, false)) viol = std::max(viol, -fin.min_slack);
    res.max_violation = viol;

    if (failed)
        res.status = SolveStatus::numerical_failure;
    else if (hit_limit)
        res.status = SolveStatus::iteration_limit;
    else if (viol <= opts.tol_feas)
        res.status = SolveStatus::optimal;
    else
        res.status = SolveStatus::feasible;
    return res;
}

// ---------------------------------------------------------------------------
// Polar multistart local solver
// ---------------------------------------------------------------------------

namespace {

// z = [v (nb) | theta (nb) | pg (ng) | qg (ng)]
struct PolarModel {
    const Grid* g;
    std::vector<ArcView> arcs;
    int nb, ng, nz;
    Eigen::VectorXd lo, hi;  // projection box
    double scale;
};

PolarModel make_polar_model(const Grid& g) {
    PolarModel m;
    m.g = &g;
    m.arcs = arc_views(g);
    m.nb = static_cast<int>(g.buses.size());
    m.ng = static_cast<int>(g.generators.size());
    m.nz = 2 * m.nb + 2 * m.ng;
    m.lo = Eigen::VectorXd::Constant(m.nz, -1e9);
    m.hi = Eigen::VectorXd::Constant(m.nz, 1e9);
    for (int p = 0; p < m.nb; ++p) {
        const Bus& b = g.buses[static_cast<size_t>(p)];
        m.lo(p) = b.v_min;
        m.hi(p) = is_unbounded(b.v_max) ? b.v_min + 10.0 : b.v_max;
        m.lo(m.nb + p) = -kPi;
        m.hi(m.nb + p) = kPi;
    }
    // pinning the reference angle removes the global rotation null space
    const int rpos = g.bus_pos(g.reference_bus());
    m.lo(m.nb + rpos) = 0.0;
    m.hi(m.nb + rpos) = 0.0;
    for (int gi = 0; gi < m.ng; ++gi) {
        const Generator& gen = g.generators[static_cast<size_t>(gi)];
        if (!is_unbounded(gen.p_min)) m.lo(2 * m.nb + gi) = gen.p_min;
        if (!is_unbounded(gen.p_max)) m.hi(2 * m.nb + gi) = gen.p_max;
        if (!is_unbounded(gen.q_min)) m.lo(2 * m.nb + m.ng + gi) = gen.q_min;
        if (!is_unbounded(gen.q_max)) m.hi(2 * m.nb + m.ng + gi) = gen.q_max;
    }
    m.scale = objective_scale(g);
    return m;
}

struct PolarEval {
    double cost = 0.0;           // scaled generation cost
    Eigen::VectorXd cost_grad;
    Eigen::VectorXd cost_hess;   // diagonal
    Eigen::VectorXd r;           // penalized residuals
    Eigen::MatrixXd J;
};

// Power drawn into the network at each bus plus line/phase residuals.
PolarEval polar_eval(const PolarModel& m, const Eigen::VectorXd& z) {
    const Grid& g = *m.g;
    PolarEval ev;
    ev.cost_grad = Eigen::VectorXd::Zero(m.nz);
    ev.cost_hess = Eigen::VectorXd::Zero(m.nz);

    for (int gi = 0; gi < m.ng; ++gi) {
        const auto& cost = g.generators[static_cast<size_t>(gi)].cost;
        const int ip = 2 * m.nb + gi;
        const double p = z(ip);
        double c0 = cost.empty() ? 0.0 : cost[0];
        double c1 = cost.size() > 1 ? cost[1] : 0.0;
        double c2 = cost.size() > 2 ? cost[2] : 0.0;
        ev.cost += (c0 + c1 * p + c2 * p * p) / m.scale;
        ev.cost_grad(ip) = (c1 + 2.0 * c2 * p) / m.scale;
        ev.cost_hess(ip) = 2.0 * c2 / m.scale;
    }

    int nflow = 0;
    for (const ArcView& av : m.arcs)
        if (finite_flow_bound(*av.arc.branch)) ++nflow;
    const int nres = 2 * m.nb + nflow + 2 * static_cast<int>(g.branches.size());
    ev.r = Eigen::VectorXd::Zero(nres);
    ev.J = Eigen::MatrixXd::Zero(nres, m.nz);

    // balance rows first; arcs accumulate into their from-bus rows
    for (int p = 0; p < m.nb; ++p) {
        const Bus& bus = g.buses[static_cast<size_t>(p)];
        const int iv = p;
        const double v = z(iv);
        ev.r(2 * p) += bus.shunt_re * v * v + bus.demand_re;
        ev.J(2 * p, iv) += 2.0 * bus.shunt_re * v;
        ev.r(2 * p + 1) += -bus.shunt_im * v * v + bus.demand_im;
        ev.J(2 * p + 1, iv) += -2.0 * bus.shunt_im * v;
    }
    for (int gi = 0; gi < m.ng; ++gi) {
        const int p = g.bus_pos(g.generators[static_cast<size_t>(gi)].bus);
        ev.r(2 * p) -= z(2 * m.nb + gi);
        ev.J(2 * p, 2 * m.nb + gi) -= 1.0;
        ev.r(2 * p + 1) -= z(2 * m.nb + m.ng + gi);
        ev.J(2 * p + 1, 2 * m.nb + m.ng + gi) -= 1.0;
    }

    int flow_row = 2 * m.nb;
    for (const ArcView& av : m.arcs) {
        const int bp = g.bus_pos(av.arc.from), ap = g.bus_pos(av.arc.to);
        const double vb = z(bp), va = z(ap);
        const double delta = z(m.nb + bp) - z(m.nb + ap);
        const double cs = std::cos(delta), sn = std::sin(delta);
        const double oR = av.own.real(), oC = av.own.imag();
        const double cR = av.cross.real(), cC = av.cross.imag();
        const double reS = oR * vb * vb + vb * va * (cR * cs + cC * sn);
        const double imS = -oC * vb * vb + vb * va * (cR * sn - cC * cs);
        // derivatives
        const double dre_dvb = 2.0 * oR * vb + va * (cR * cs + cC * sn);
        const double dre_dva = vb * (cR * cs + cC * sn);
        const double dre_dd = vb * va * (-cR * sn + cC * cs);
        const double dim_dvb = -2.0 * oC * vb + va * (cR * sn - cC * cs);
        const double dim_dva = vb * (cR * sn - cC * cs);
        const double dim_dd = vb * va * (cR * cs + cC * sn);

        const int row_re = 2 * bp, row_im = 2 * bp + 1;
        ev.r(row_re) += reS;
        ev.J(row_re, bp) += dre_dvb;
        ev.J(row_re, ap) += dre_dva;
        ev.J(row_re, m.nb + bp) += dre_dd;
        ev.J(row_re, m.nb + ap) -= dre_dd;
        ev.r(row_im) += imS;
        ev.J(row_im, bp) += dim_dvb;
        ev.J(row_im, ap) += dim_dva;
        ev.J(row_im, m.nb + bp) += dim_dd;
        ev.J(row_im, m.nb + ap) -= dim_dd;

        if (finite_flow_bound(*av.arc.branch)) {
            const double su2 = av.arc.branch->s_max * av.arc.branch->s_max;
            const double t = reS * reS + imS * imS - su2;
            if (t > 0.0) {
                ev.r(flow_row) = t;
                ev.J(flow_row, bp) = 2.0 * reS * dre_dvb + 2.0 * imS * dim_dvb;
                ev.J(flow_row, ap) = 2.0 * reS * dre_dva + 2.0 * imS * dim_dva;
                const double dt_dd = 2.0 * reS * dre_dd + 2.0 * imS * dim_dd;
                ev.J(flow_row, m.nb + bp) = dt_dd;
                ev.J(flow_row, m.nb + ap) = -dt_dd;
            }
            ++flow_row;
        }
    }

    int prow = flow_row;
    for (const Branch& br : g.branches) {
        if (!br.status) {
            prow += 2;
            continue;
        }
        const int bp = g.bus_pos(br.from_bus), ap = g.bus_pos(br.to_bus);
        const double delta = z(m.nb + bp) - z(m.nb + ap);
        if (br.eta_min > -kPi + 1e-12 && delta < br.eta_min) {
            ev.r(prow) = br.eta_min - delta;
            ev.J(prow, m.nb + bp) = -1.0;
            ev.J(prow, m.nb + ap) = 1.0;
        }
        ++prow;
        if (br.eta_max < kPi - 1e-12 && delta > br.eta_max) {
            ev.r(prow) = delta - br.eta_max;
            ev.J(prow, m.nb + bp) = 1.0;
            ev.J(prow, m.nb + ap) = -1.0;
        }
        ++prow;
    }
    return ev;
}

double polar_merit(const PolarModel& m, const Eigen::VectorXd& z, double rho) {
    const PolarEval ev = polar_eval(m, z);
    return ev.cost + rho * ev.r.squaredNorm();
}

// Exact generation split: fill the aggregate requirement at each bus, cheapest
// active-power marginal cost first; reactive power in declaration order.
GenerationPoint allocate_generation(const Grid& g, const std::map<int, Complex>& required) {
    GenerationPoint out;
    for (const Bus& b : g.buses) {
        auto gens = g.generators_at(b.id);
        if (gens.empty()) continue;
        const Complex req = required.at(b.id);

        auto clamp_lo = [](double v) { return is_unbounded(v) ? -1e9 : v; };
        auto clamp_hi = [](double v) { return is_unbounded(v) ? 1e9 : v; };

        std::vector<const Generator*> order(gens.begin(), gens.end());
        std::stable_sort(order.begin(), order.end(), [](const Generator* a, const Generator* b2) {
            const double ca = a->cost.size() > 1 ? a->cost[1] : 0.0;
            const double cb = b2->cost.size() > 1 ? b2->cost[1] : 0.0;
            return ca < cb;
        });

        std::map<const Generator*, double> pval, qval;
        double rem = req.real();
        for (const Generator* gen : order) {
            pval[gen] = clamp_lo(gen->p_min);
            rem -= pval[gen];
        }
        for (const Generator* gen : order) {
            const double add =
                std::clamp(rem, 0.0, clamp_hi(gen->p_max) - clamp_lo(gen->p_min));
            pval[gen] += add;
            rem -= add;
        }
        double remq = req.imag();
        for (const Generator* gen : gens) {
            qval[gen] = clamp_lo(gen->q_min);
            remq -= qval[gen];
        }
        for (const Generator* gen : gens) {
            const double add =
                std::clamp(remq, 0.0, clamp_hi(gen->q_max) - clamp_lo(gen->q_min));
            qval[gen] += add;
            remq -= add;
        }

        for (const Generator* gen : gens)
            out[{b.id, gen->index}] = Complex(pval[gen], qval[gen]);
    }
    return out;
}

}  // namespace

SolveResult solve_polar_local(const Grid& g, const SolveOptions& opts) {
    require_valid(g);
    const PolarModel m = make_polar_model(g);
    const Formulation polar = build_polar(g);
    const int rpos = g.bus_pos(g.reference_bus());

    std::mt19937 rng(opts.rng_seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    SolveResult best;
    best.bound_kind = BoundKind::upper;
    best.status = SolveStatus::numerical_failure;
    bool have_best = false;
    double best_obj = 0.0, best_viol = kInf;
    int total_iters = 0;

    const int starts = std::max(1, opts.multistart_count);
    for (int s = 0; s < starts; ++s) {
        Eigen::VectorXd z(m.nz);
        for (int p = 0; p < m.nb; ++p) {
            // start 0 is the flat profile; later starts are randomized
            z(p) = s == 0 ? (m.lo(p) + m.hi(p)) / 2.0
                          : m.lo(p) + uni(rng) * (m.hi(p) - m.lo(p));
            z(m.nb + p) = s == 0 ? 0.0 : -kPi / 6.0 + uni(rng) * (kPi / 3.0);
        }
        z(m.nb + rpos) = 0.0;
        for (int i = 2 * m.nb; i < m.nz; ++i) {
            const double lo = std::max(m.lo(i), -1.0), hi = std::min(m.hi(i), 1.0);
            z(i) = std::clamp((m.lo(i) + m.hi(i)) / 2.0, lo, hi);
        }

        double lambda = 1e-3;
        for (int round = 0; round < 10; ++round) {
            const double rho = 10.0 * std::pow(10.0, round);
            for (int it = 0; it < 60; ++it) {
                ++total_iters;
                const PolarEval ev = polar_eval(m, z);
                Eigen::VectorXd grad =
                    ev.cost_grad + 2.0 * rho * ev.J.transpose() * ev.r;
                Eigen::MatrixXd H = 2.0 * rho * ev.J.transpose() * ev.J;
                H.diagonal() += ev.cost_hess;
                // Levenberg-Marquardt damping relative to the diagonal keeps
                // the step bounded along nearly unobserved directions
                H.diagonal().array() += lambda * (H.diagonal().array() + 1.0);
                for (int j = 0; j < m.nz; ++j) {
                    if (m.hi(j) - m.lo(j) > 0.0) continue;
                    grad(j) = 0.0;
                    H.row(j).setZero();
                    H.col(j).setZero();
                    H(j, j) = 1.0;
                }
                const Eigen::VectorXd d = H.ldlt().solve(-grad);
                if (!d.allFinite()) {
                    lambda = std::min(lambda * 10.0, 1e8);
                    continue;
                }
                const double base = ev.cost + rho * ev.r.squaredNorm();
                double alpha = 1.0;
                bool moved = false;
                while (alpha > 1e-12) {
                    Eigen::VectorXd zt =
                        (z + alpha * d).cwiseMax(m.lo).cwiseMin(m.hi);
                    if (polar_merit(m, zt, rho) < base - 1e-14) {
                        z = zt;
                        moved = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if (!moved) {
                    lambda *= 10.0;
                    if (lambda > 1e8) break;
                } else {
                    lambda = std::max(lambda / 3.0, 1e-10);
                    if (alpha * d.norm() < 1e-12) break;
                }
            }
            lambda = std::min(lambda, 1e-3);
        }

        // shift the reference angle to zero and assemble the certified point
        VoltagePoint vp;
        vp.rep = VoltagePoint::Rep::Polar;
        const double shift = z(m.nb + rpos);
        for (int p = 0; p < m.nb; ++p) {
            double th = z(m.nb + p) - shift;
            if (th > kPi) th -= 2.0 * kPi;
            if (th < -kPi) th += 2.0 * kPi;
            vp.values[g.buses[static_cast<size_t>(p)].id] = {z(p), th};
        }
        const InjectionState inj = recover_injections(g, vp);
        const GenerationPoint gen = allocate_generation(g, inj.required_generation);
        const Point pt = make_polar_point(g, vp, gen);
        const ResidualReport rep = evaluate(polar, pt);

        const bool feas = rep.max_violation <= opts.tol_feas;
        const bool better =
            !have_best ||
            (feas && (best_viol > opts.tol_feas || rep.objective < best_obj - 1e-12)) ||
            (!feas && best_viol > opts.tol_feas && rep.max_violation < best_viol);
        if (better) {
            have_best = true;
            best.point = pt;
            best_obj = rep.objective;
            best_viol = rep.max_violation;
        }
    }

    best.iterations = total_iters;
    best.objective = best_obj;
    best.max_violation = best_viol;
    if (best_viol <= opts.tol_feas)
        best.status = SolveStatus::optimal;
    else if (best_viol <= 1e-4)
        best.status = SolveStatus::feasible;
    else
        best.status = SolveStatus::numerical_failure;
    return best;
}

double optimality_gap(const SolveResult& lb, const SolveResult& ub) {
    if (lb.bound_kind != BoundKind::lower || ub.bound_kind != BoundKind::upper)
        throw InvalidBoundKinds("optimality_gap expects a lower and an upper bound result");
    return (ub.objective - lb.objective) / std::max(1.0, std::fabs(ub.objective));
}

}  // namespace acopf
