#include "acopf/builders.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <set>

#include "acopf/names.hpp"

namespace acopf {

namespace {

constexpr double kPi = 3.14159265358979323846;
// tan() blows up at pi/2; phase bounds at or beyond it are treated as inactive.
constexpr double kTanGuard = kPi / 2 - 1e-9;

// One directed arc with the admittance row that drives it:
// I_bah = own * V_b + cross * V_a, S_bah = conj(own)|V_b|^2 + conj(cross) V_b conj(V_a).
struct ArcView {
    Arc arc;
    Complex own, cross;
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

std::string arc_tag(const std::string& base, const Arc& a) {
    return vn(base, a.from, a.to, a.parallel);
}

void add_generation_vars(Formulation& f, const Grid& g) {
    for (const Generator& gen : g.generators)
        f.add_variable(vn("SgenR", gen.bus, gen.index), gen.p_min, gen.p_max);
    for (const Generator& gen : g.generators)
        f.add_variable(vn("SgenC", gen.bus, gen.index), gen.q_min, gen.q_max);
}

// Generation cost objective; the trailing quadratic coefficient is kept only
// for the models whose objective may be degree 2.
void set_objective(Formulation& f, const Grid& g, bool linear_only) {
    PolyExpr obj;
    for (const Generator& gen : g.generators) {
        const int idx = f.var(vn("SgenR", gen.bus, gen.index));
        if (!gen.cost.empty()) obj.add(gen.cost[0], {});
        if (gen.cost.size() > 1) obj.add(gen.cost[1], {idx});
        if (!linear_only && gen.cost.size() > 2) obj.add(gen.cost[2], {idx, idx});
    }
    f.objective = obj.terms();
}

using FlowAdder = std::function<void(PolyExpr&, const ArcView&, bool imag)>;
using V2Adder = std::function<void(PolyExpr&, int bus, double coef)>;
using TrigAdder = std::function<void(PolyExpr&, double coef, int b, int a)>;

// Power balance per bus, arranged so the residual is identical across models:
//   sum of outgoing flows + Re(conj(A_b)) |V_b|^2 - sum of generation = -demand.
void add_balance(Formulation& f, const Grid& g, const std::vector<ArcView>& arcs,
                 const FlowAdder& add_flow, const V2Adder& add_v2) {
    for (const Bus& b : g.buses) {
        PolyExpr re, im;
        for (const ArcView& av : arcs) {
            if (av.arc.from != b.id) continue;
            add_flow(re, av, false);
            add_flow(im, av, true);
        }
        if (b.shunt_re != 0.0) add_v2(re, b.id, b.shunt_re);
        if (b.shunt_im != 0.0) add_v2(im, b.id, -b.shunt_im);
        for (const Generator* gen : g.generators_at(b.id)) {
            re.add(-1.0, {f.var(vn("SgenR", b.id, gen->index))});
            im.add(-1.0, {f.var(vn("SgenC", b.id, gen->index))});
        }
        f.polys.push_back(re.constraint(Sense::Eq, -b.demand_re, vn("balance_re", b.id)));
        f.polys.push_back(im.constraint(Sense::Eq, -b.demand_im, vn("balance_im", b.id)));
    }
}

void add_voltage_bounds(Formulation& f, const Grid& g,
                        const std::function<void(PolyExpr&, int)>& add_v2) {
    for (const Bus& b : g.buses) {
        PolyExpr lo;
        add_v2(lo, b.id);
        f.polys.push_back(lo.constraint(Sense::Ge, b.v_min * b.v_min, vn("voltage_lo", b.id)));
        if (!is_unbounded(b.v_max)) {
            PolyExpr hi;
            add_v2(hi, b.id);
            f.polys.push_back(
                hi.constraint(Sense::Le, b.v_max * b.v_max, vn("voltage_hi", b.id)));
        }
    }
}

// Tangent-form phase difference bounds. The cos/sin adders append the model's
// expression for Re/Im(V_b conj(V_a)) scaled by a coefficient. One auxiliary
// cos >= 0 constraint is emitted per adjacent pair when any tangent bound is.
void add_phase_bounds(Formulation& f, const Grid& g, const TrigAdder& add_cos,
                      const TrigAdder& add_sin) {
    std::set<std::pair<int, int>> aux_done;
    for (const Branch* br : g.active_branches()) {
        const bool lo = br->eta_min > -kTanGuard;
        const bool hi = br->eta_max < kTanGuard;
        if (lo) {
            PolyExpr e;
            add_cos(e, std::tan(br->eta_min), br->from_bus, br->to_bus);
            add_sin(e, -1.0, br->from_bus, br->to_bus);
            f.polys.push_back(e.constraint(
                Sense::Le, 0.0, vn("phase_lo", br->from_bus, br->to_bus, br->parallel)));
        }
        if (hi) {
            PolyExpr e;
            add_sin(e, 1.0, br->from_bus, br->to_bus);
            add_cos(e, -std::tan(br->eta_max), br->from_bus, br->to_bus);
            f.polys.push_back(e.constraint(
                Sense::Le, 0.0, vn("phase_hi", br->from_bus, br->to_bus, br->parallel)));
        }
        if ((lo || hi) && !aux_done.count({br->from_bus, br->to_bus})) {
            aux_done.insert({br->from_bus, br->to_bus});
            PolyExpr e;
            add_cos(e, 1.0, br->from_bus, br->to_bus);
            f.polys.push_back(
                e.constraint(Sense::Ge, 0.0, vn("phase_aux", br->from_bus, br->to_bus)));
        }
    }
}

double vr_bound(const Bus& b) { return is_unbounded(b.v_max) ? kInf : b.v_max; }

AffExpr aff_const(double c) {
    AffExpr e;
    e.constant = c;
    return e;
}

AffExpr aff_var(int idx, double coef = 1.0) {
    AffExpr e;
    e.coeffs.push_back({idx, coef});
    return e;
}

// Current bound value per arc: the given one, or Sbar / Vmin at the from bus.
std::optional<double> derived_current_bound(const Grid& g, const ArcView& av) {
    const Branch& br = *av.arc.branch;
    if (br.i_max) return *br.i_max;
    if (finite_flow_bound(br) && g.bus(av.arc.from).v_min > 0.0)
        return br.s_max / g.bus(av.arc.from).v_min;
    return std::nullopt;
}

bool usable_bound(const std::optional<double>& b) {
    return b && *b > 0.0 && !is_unbounded(*b);
}

}  // namespace

Formulation build_siv_cartesian(const Grid& g) {
    require_valid(g);
    Formulation f;
    f.kind = "siv";
    f.grid_hash = g.hash();
    const auto arcs = arc_views(g);

    for (const Bus& b : g.buses) f.add_variable(vn("VR", b.id), -vr_bound(b), vr_bound(b));
    for (const Bus& b : g.buses) f.add_variable(vn("VC", b.id), -vr_bound(b), vr_bound(b));
    for (const Bus& b : g.buses) f.add_variable(vn("V2", b.id), 0.0, kInf);
    for (const ArcView& av : arcs) f.add_variable(arc_tag("IR", av.arc), -kInf, kInf);
    for (const ArcView& av : arcs) f.add_variable(arc_tag("IC", av.arc), -kInf, kInf);
    for (const ArcView& av : arcs) f.add_variable(arc_tag("SR", av.arc), -kInf, kInf);
    for (const ArcView& av : arcs) f.add_variable(arc_tag("SC", av.arc), -kInf, kInf);
    add_generation_vars(f, g);

    for (const Bus& b : g.buses) {
        const int vr = f.var(vn("VR", b.id)), vc = f.var(vn("VC", b.id));
        PolyExpr e;
        e.add(1.0, {vr, vr});
        e.add(1.0, {vc, vc});
        e.add(-1.0, {f.var(vn("V2", b.id))});
        f.polys.push_back(e.constraint(Sense::Eq, 0.0, vn("v2_def", b.id)));
    }

    add_voltage_bounds(f, g, [&](PolyExpr& e, int bus) { e.add(1.0, {f.var(vn("V2", bus))}); });

    const int r = g.reference_bus();
    {
        PolyExpr e;
        e.add(1.0, {f.var(vn("VC", r))});
        f.polys.push_back(e.constraint(Sense::Eq, 0.0, "reference_im"));
        PolyExpr e2;
        e2.add(1.0, {f.var(vn("VR", r))});
        f.polys.push_back(e2.constraint(Sense::Ge, 0.0, "reference_re"));
    }

    for (const ArcView& av : arcs) {
        const int vrb = f.var(vn("VR", av.arc.from)), vcb = f.var(vn("VC", av.arc.from));
        const int vra = f.var(vn("VR", av.arc.to)), vca = f.var(vn("VC", av.arc.to));
        const double oR = av.own.real(), oC = av.own.imag();
        const double cR = av.cross.real(), cC = av.cross.imag();
        PolyExpr re;
        re.add(1.0, {f.var(arc_tag("IR", av.arc))});
        re.add(-oR, {vrb});
        re.add(oC, {vcb});
        re.add(-cR, {vra});
        re.add(cC, {vca});
        f.polys.push_back(re.constraint(
            Sense::Eq, 0.0, arc_tag(av.arc.reversed ? "ohm_to_re" : "ohm_from_re", av.arc)));
        PolyExpr im;
        im.add(1.0, {f.var(arc_tag("IC", av.arc))});
        im.add(-oR, {vcb});
        im.add(-oC, {vrb});
        im.add(-cR, {vca});
        im.add(-cC, {vra});
        f.polys.push_back(im.constraint(
            Sense::Eq, 0.0, arc_tag(av.arc.reversed ? "ohm_to_im" : "ohm_from_im", av.arc)));
    }

    for (const ArcView& av : arcs) {
        const int vrb = f.var(vn("VR", av.arc.from)), vcb = f.var(vn("VC", av.arc.from));
        const int ir = f.var(arc_tag("IR", av.arc)), ic = f.var(arc_tag("IC", av.arc));
        PolyExpr re;
        re.add(1.0, {f.var(arc_tag("SR", av.arc))});
        re.add(-1.0, {vrb, ir});
        re.add(-1.0, {vcb, ic});
        f.polys.push_back(re.constraint(Sense::Eq, 0.0, arc_tag("power_def_re", av.arc)));
        PolyExpr im;
        im.add(1.0, {f.var(arc_tag("SC", av.arc))});
        im.add(-1.0, {vcb, ir});
        im.add(1.0, {vrb, ic});
        f.polys.push_back(im.constraint(Sense::Eq, 0.0, arc_tag("power_def_im", av.arc)));
    }

    add_balance(
        f, g, arcs,
        [&](PolyExpr& e, const ArcView& av, bool imag) {
            e.add(1.0, {f.var(arc_tag(imag ? "SC" : "SR", av.arc))});
        },
        [&](PolyExpr& e, int bus, double coef) { e.add(coef, {f.var(vn("V2", bus))}); });

    for (const ArcView& av : arcs) {
        if (!finite_flow_bound(*av.arc.branch)) continue;
        const int sr = f.var(arc_tag("SR", av.arc)), sc = f.var(arc_tag("SC", av.arc));
        PolyExpr e;
        e.add(1.0, {sr, sr});
        e.add(1.0, {sc, sc});
        const double su = av.arc.branch->s_max;
        f.polys.push_back(e.constraint(Sense::Le, su * su, arc_tag("flow_bound", av.arc)));
    }

    add_phase_bounds(
        f, g,
        [&](PolyExpr& e, double k, int b, int a) {
            e.add(k, {f.var(vn("VR", b)), f.var(vn("VR", a))});
            e.add(k, {f.var(vn("VC", b)), f.var(vn("VC", a))});
        },
        [&](PolyExpr& e, double k, int b, int a) {
            e.add(k, {f.var(vn("VC", b)), f.var(vn("VR", a))});
            e.add(-k, {f.var(vn("VR", b)), f.var(vn("VC", a))});
        });

    set_objective(f, g, false);
    return f;
}

Formulation build_voltage_only(const Grid& g, BoundMode mode) {
    if (mode == BoundMode::power)
        throw std::invalid_argument(
            "the voltage-only model requires current-form line bounds");
    require_valid(g);
    Formulation f;
    f.kind = "voltage_only";
    f.grid_hash = g.hash();
    const auto arcs = arc_views(g);

    for (const Bus& b : g.buses) f.add_variable(vn("VR", b.id), -vr_bound(b), vr_bound(b));
    for (const Bus& b : g.buses) f.add_variable(vn("VC", b.id), -vr_bound(b), vr_bound(b));
    add_generation_vars(f, g);

    auto add_v2_of = [&](PolyExpr& e, int bus, double coef) {
        const int vr = f.var(vn("VR", bus)), vc = f.var(vn("VC", bus));
        e.add(coef, {vr, vr});
        e.add(coef, {vc, vc});
    };

    add_voltage_bounds(f, g, [&](PolyExpr& e, int bus) { add_v2_of(e, bus, 1.0); });

    const int r = g.reference_bus();
    {
        PolyExpr e;
        e.add(1.0, {f.var(vn("VC", r))});
        f.polys.push_back(e.constraint(Sense::Eq, 0.0, "reference_im"));
        PolyExpr e2;
        e2.add(1.0, {f.var(vn("VR", r))});
        f.polys.push_back(e2.constraint(Sense::Ge, 0.0, "reference_re"));
    }

    add_balance(
        f, g, arcs,
        [&](PolyExpr& e, const ArcView& av, bool imag) {
            const int vrb = f.var(vn("VR", av.arc.from)), vcb = f.var(vn("VC", av.arc.from));
            const int vra = f.var(vn("VR", av.arc.to)), vca = f.var(vn("VC", av.arc.to));
            const double oR = av.own.real(), oC = av.own.imag();
            const double cR = av.cross.real(), cC = av.cross.imag();
            if (!imag) {
                e.add(oR, {vrb, vrb});
                e.add(oR, {vcb, vcb});
                e.add(cR, {vrb, vra});
                e.add(cR, {vcb, vca});
                e.add(cC, {vcb, vra});
                e.add(-cC, {vrb, vca});
            } else {
                e.add(-oC, {vrb, vrb});
                e.add(-oC, {vcb, vcb});
                e.add(cR, {vcb, vra});
                e.add(-cR, {vrb, vca});
                e.add(-cC, {vrb, vra});
                e.add(-cC, {vcb, vca});
            }
        },
        add_v2_of);

    for (const ArcView& av : arcs) {
        std::optional<double> bound;
        if (mode == BoundMode::current_given) {
            if (av.arc.branch->i_max)
                bound = *av.arc.branch->i_max;
            else if (finite_flow_bound(*av.arc.branch))
                throw MissingCurrentBound("branch " + arc_tag("", av.arc) +
                                          " has a flow limit but no current bound");
        } else if (finite_flow_bound(*av.arc.branch) && g.bus(av.arc.from).v_min > 0.0) {
            bound = av.arc.branch->s_max / g.bus(av.arc.from).v_min;
        }
        if (!usable_bound(bound)) continue;
        const int vrb = f.var(vn("VR", av.arc.from)), vcb = f.var(vn("VC", av.arc.from));
        const int vra = f.var(vn("VR", av.arc.to)), vca = f.var(vn("VC", av.arc.to));
        const Complex m = av.own * std::conj(av.cross);
        PolyExpr e;
        e.add(std::norm(av.own), {vrb, vrb});
        e.add(std::norm(av.own), {vcb, vcb});
        e.add(std::norm(av.cross), {vra, vra});
        e.add(std::norm(av.cross), {vca, vca});
        e.add(2 * m.real(), {vrb, vra});
        e.add(2 * m.real(), {vcb, vca});
        e.add(-2 * m.imag(), {vcb, vra});
        e.add(2 * m.imag(), {vrb, vca});
        f.polys.push_back(
            e.constraint(Sense::Le, *bound * *bound, arc_tag("current_bound", av.arc)));
    }

    add_phase_bounds(
        f, g,
        [&](PolyExpr& e, double k, int b, int a) {
            e.add(k, {f.var(vn("VR", b)), f.var(vn("VR", a))});
            e.add(k, {f.var(vn("VC", b)), f.var(vn("VC", a))});
        },
        [&](PolyExpr& e, double k, int b, int a) {
            e.add(k, {f.var(vn("VC", b)), f.var(vn("VR", a))});
            e.add(-k, {f.var(vn("VR", b)), f.var(vn("VC", a))});
        });

    set_objective(f, g, true);
    return f;
}

Formulation build_polar(const Grid& g) {
    require_valid(g);
    Formulation f;
    f.kind = "polar";
    f.grid_hash = g.hash();
    const auto arcs = arc_views(g);
    const auto pairs = adjacent_pairs(g);

    for (const Bus& b : g.buses)
        f.add_variable(vn("v", b.id), b.v_min, is_unbounded(b.v_max) ? kInf : b.v_max);
    for (const Bus& b : g.buses) f.add_variable(vn("theta", b.id), -kPi, kPi);
    for (const auto& [b, a] : pairs) f.add_variable(vn("cs", b, a), -1.0, 1.0);
    for (const auto& [b, a] : pairs) f.add_variable(vn("sn", b, a), -1.0, 1.0);
    add_generation_vars(f, g);

    for (const auto& [b, a] : pairs) {
        const int cs = f.var(vn("cs", b, a)), sn = f.var(vn("sn", b, a));
        PolyExpr e;
        e.add(1.0, {cs, cs});
        e.add(1.0, {sn, sn});
        f.polys.push_back(e.constraint(Sense::Eq, 1.0, vn("trig_circle", b, a)));
    }

    {
        PolyExpr e;
        e.add(1.0, {f.var(vn("theta", g.reference_bus()))});
        f.polys.push_back(e.constraint(Sense::Eq, 0.0, "reference_theta"));
    }

    add_voltage_bounds(f, g, [&](PolyExpr& e, int bus) {
        const int v = f.var(vn("v", bus));
        e.add(1.0, {v, v});
    });

    for (const Branch* br : g.active_branches()) {
        const int tb = f.var(vn("theta", br->from_bus)), ta = f.var(vn("theta", br->to_bus));
        PolyExpr lo;
        lo.add(1.0, {tb});
        lo.add(-1.0, {ta});
        f.polys.push_back(lo.constraint(
            Sense::Ge, br->eta_min, vn("phase_angle_lo", br->from_bus, br->to_bus, br->parallel)));
        PolyExpr hi;
        hi.add(1.0, {tb});
        hi.add(-1.0, {ta});
        f.polys.push_back(hi.constraint(
            Sense::Le, br->eta_max, vn("phase_angle_hi", br->from_bus, br->to_bus, br->parallel)));
    }

    add_balance(
        f, g, arcs,
        [&](PolyExpr& e, const ArcView& av, bool imag) {
            const int vb = f.var(vn("v", av.arc.from)), va = f.var(vn("v", av.arc.to));
            const auto [pr, sign] = canonical_pair(pairs, av.arc.from, av.arc.to);
            const int cs = f.var(vn("cs", pr.first, pr.second));
            const int sn = f.var(vn("sn", pr.first, pr.second));
            const double oR = av.own.real(), oC = av.own.imag();
            const double cR = av.cross.real(), cC = av.cross.imag();
            if (!imag) {
                e.add(oR, {vb, vb});
                e.add(cR, {vb, va, cs});
                e.add(sign * cC, {vb, va, sn});
            } else {
                e.add(-oC, {vb, vb});
                e.add(sign * cR, {vb, va, sn});
                e.add(-cC, {vb, va, cs});
            }
        },
        [&](PolyExpr& e, int bus, double coef) {
            const int v = f.var(vn("v", bus));
            e.add(coef, {v, v});
        });

    for (const ArcView& av : arcs) {
        if (!finite_flow_bound(*av.arc.branch)) continue;
        const int vb = f.var(vn("v", av.arc.from)), va = f.var(vn("v", av.arc.to));
        const auto [pr, sign] = canonical_pair(pairs, av.arc.from, av.arc.to);
        const int cs = f.var(vn("cs", pr.first, pr.second));
        const int sn = f.var(vn("sn", pr.first, pr.second));
        const Complex m = av.own * std::conj(av.cross);
        PolyExpr e;
        e.add(std::norm(av.own), {vb, vb, vb, vb});
        e.add(std::norm(av.cross), {vb, vb, va, va});
        e.add(2 * m.real(), {vb, vb, vb, va, cs});
        e.add(-2 * m.imag() * sign, {vb, vb, vb, va, sn});
        const double su = av.arc.branch->s_max;
        f.polys.push_back(e.constraint(Sense::Le, su * su, arc_tag("flow_bound", av.arc)));
    }

    set_objective(f, g, false);
    return f;
}

Formulation build_jabr_socp(const Grid& g) {
    require_valid(g);
    Formulation f;
    f.kind = "jabr";
    f.grid_hash = g.hash();
    const auto arcs = arc_views(g);
    const auto pairs = adjacent_pairs(g);

    for (const Bus& b : g.buses) f.add_variable(vn("c", b.id, b.id), 0.0, kInf);
    for (const auto& [b, a] : pairs) f.add_variable(vn("c", b, a), -kInf, kInf);
    for (const auto& [b, a] : pairs) f.add_variable(vn("s", b, a), -kInf, kInf);
    add_generation_vars(f, g);

    add_voltage_bounds(f, g,
                       [&](PolyExpr& e, int bus) { e.add(1.0, {f.var(vn("c", bus, bus))}); });

    for (const auto& [b, a] : pairs) {
        SocConstraint soc;
        soc.members = {aff_var(f.var(vn("c", b, a))), aff_var(f.var(vn("s", b, a)))};
        soc.t = aff_var(f.var(vn("c", b, b)));
        soc.w = aff_var(f.var(vn("c", a, a)));
        soc.rotated = true;
        soc.tag = vn("jabr_cone", b, a);
        f.socs.push_back(soc);
    }

    add_phase_bounds(
        f, g,
        [&](PolyExpr& e, double k, int b, int a) {
            const auto [pr, sign] = canonical_pair(pairs, b, a);
            (void)sign;  // cos is symmetric in the pair
            e.add(k, {f.var(vn("c", pr.first, pr.second))});
        },
        [&](PolyExpr& e, double k, int b, int a) {
            const auto [pr, sign] = canonical_pair(pairs, b, a);
            e.add(k * sign, {f.var(vn("s", pr.first, pr.second))});
        });

    add_balance(
        f, g, arcs,
        [&](PolyExpr& e, const ArcView& av, bool imag) {
            const int cbb = f.var(vn("c", av.arc.from, av.arc.from));
            const auto [pr, sign] = canonical_pair(pairs, av.arc.from, av.arc.to);
            const int cba = f.var(vn("c", pr.first, pr.second));
            const int sba = f.var(vn("s", pr.first, pr.second));
            const double oR = av.own.real(), oC = av.own.imag();
            const double cR = av.cross.real(), cC = av.cross.imag();
            if (!imag) {
                e.add(oR, {cbb});
                e.add(cR, {cba});
                e.add(sign * cC, {sba});
            } else {
                e.add(-oC, {cbb});
                e.add(sign * cR, {sba});
                e.add(-cC, {cba});
            }
        },
        [&](PolyExpr& e, int bus, double coef) { e.add(coef, {f.var(vn("c", bus, bus))}); });

    for (const ArcView& av : arcs) {
        if (!finite_flow_bound(*av.arc.branch)) continue;
        const int cbb = f.var(vn("c", av.arc.from, av.arc.from));
        const int caa = f.var(vn("c", av.arc.to, av.arc.to));
        const auto [pr, sign] = canonical_pair(pairs, av.arc.from, av.arc.to);
        const int cba = f.var(vn("c", pr.first, pr.second));
        const int sba = f.var(vn("s", pr.first, pr.second));
        const Complex m = av.own * std::conj(av.cross);
        PolyExpr e;
        e.add(std::norm(av.own), {cbb, cbb});
        e.add(std::norm(av.cross), {cbb, caa});
        e.add(2 * m.real(), {cbb, cba});
        e.add(-2 * m.imag() * sign, {cbb, sba});
        const double su = av.arc.branch->s_max;
        f.polys.push_back(e.constraint(Sense::Le, su * su, arc_tag("flow_bound", av.arc)));
    }

    set_objective(f, g, false);
    return f;
}

Formulation build_mixed(const Grid& g) {
    Formulation f = build_jabr_socp(g);
    f.kind = "mixed";
    const auto pairs = adjacent_pairs(g);

    for (const Bus& b : g.buses) f.add_variable(vn("VR", b.id), -vr_bound(b), vr_bound(b));
    for (const Bus& b : g.buses) f.add_variable(vn("VC", b.id), -vr_bound(b), vr_bound(b));

    for (const Bus& b : g.buses) {
        const int vr = f.var(vn("VR", b.id)), vc = f.var(vn("VC", b.id));
        PolyExpr e;
        e.add(1.0, {f.var(vn("c", b.id, b.id))});
        e.add(-1.0, {vr, vr});
        e.add(-1.0, {vc, vc});
        f.polys.push_back(e.constraint(Sense::Eq, 0.0, vn("cs_link_bb", b.id)));
    }
    for (const auto& [b, a] : pairs) {
        const int vrb = f.var(vn("VR", b)), vcb = f.var(vn("VC", b));
        const int vra = f.var(vn("VR", a)), vca = f.var(vn("VC", a));
        PolyExpr ce;
        ce.add(1.0, {f.var(vn("c", b, a))});
        ce.add(-1.0, {vrb, vra});
        ce.add(-1.0, {vcb, vca});
        f.polys.push_back(ce.constraint(Sense::Eq, 0.0, vn("cs_link_c", b, a)));
        PolyExpr se;
        se.add(1.0, {f.var(vn("s", b, a))});
        se.add(-1.0, {vcb, vra});
        se.add(1.0, {vrb, vca});
        f.polys.push_back(se.constraint(Sense::Eq, 0.0, vn("cs_link_s", b, a)));
    }

    const int r = g.reference_bus();
    PolyExpr e;
    e.add(1.0, {f.var(vn("VC", r))});
    f.polys.push_back(e.constraint(Sense::Eq, 0.0, "reference_im"));
    PolyExpr e2;
    e2.add(1.0, {f.var(vn("VR", r))});
    f.polys.push_back(e2.constraint(Sense::Ge, 0.0, "reference_re"));
    return f;
}

namespace {

// Real symmetric 2n x 2n matrices whose trace against W picks out the real
// (imaginary) part of trace(M V V^H) for a complex coefficient matrix M.
Eigen::MatrixXd embed_re(const Eigen::MatrixXcd& M) {
    const Eigen::MatrixXd Rs = (M.real() + M.real().transpose()) / 2.0;
    const Eigen::MatrixXd Ka = (M.imag().transpose() - M.imag()) / 2.0;
    const auto n = M.rows();
    Eigen::MatrixXd out(2 * n, 2 * n);
    out.topLeftCorner(n, n) = Rs;
    out.topRightCorner(n, n) = Ka;
    out.bottomLeftCorner(n, n) = Ka.transpose();
    out.bottomRightCorner(n, n) = Rs;
    return out;
}

// Note the sign: trace(embed_im(M) W) = -Im trace(M V V^H). The injection and
// flow expressions arise as conjugates, so this is the one that yields +Im S.
Eigen::MatrixXd embed_im(const Eigen::MatrixXcd& M) {
    const Eigen::MatrixXd Is = (M.imag() + M.imag().transpose()) / 2.0;
    const Eigen::MatrixXd Ka = (M.real().transpose() - M.real()) / 2.0;
    const auto n = M.rows();
    Eigen::MatrixXd out(2 * n, 2 * n);
    out.topLeftCorner(n, n) = -Is;
    out.topRightCorner(n, n) = Ka;
    out.bottomLeftCorner(n, n) = Ka.transpose();
    out.bottomRightCorner(n, n) = -Is;
    return out;
}

}  // namespace

Eigen::MatrixXd ConstraintMatrices::theta(int bpos, int apos) const {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, n);
    E(bpos, apos) += 1.0;
    E(apos, bpos) += 1.0;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    out.topLeftCorner(n, n) = E / 2.0;
    out.bottomRightCorner(n, n) = E / 2.0;
    return out;
}

Eigen::MatrixXd ConstraintMatrices::theta_hat(int bpos, int apos) const {
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
    F(bpos, apos) += 1.0;
    F(apos, bpos) -= 1.0;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    out.topRightCorner(n, n) = -F / 2.0;
    out.bottomLeftCorner(n, n) = F.transpose() * (-1.0 / 2.0);
    return out;
}

ConstraintMatrices constraint_matrices(const Grid& g) {
    require_valid(g);
    ConstraintMatrices cm;
    cm.n = static_cast<int>(g.buses.size());
    const NetworkAdmittance Y = network_admittance(g);

    for (int p = 0; p < cm.n; ++p) {
        Eigen::MatrixXcd psi = Eigen::MatrixXcd::Zero(cm.n, cm.n);
        for (const auto& [pos, val] : Y.entries())
            if (pos.first == p) psi(p, pos.second) = val;
        cm.psi.push_back(embed_re(psi));
        cm.psi_hat.push_back(embed_im(psi));
    }

    for (const ArcView& av : arc_views(g)) {
        const int bp = g.bus_pos(av.arc.from), ap = g.bus_pos(av.arc.to);
        Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(cm.n, cm.n);
        phi(bp, bp) += av.own;
        phi(bp, ap) += av.cross;
        cm.phi.push_back(embed_re(phi));
        cm.phi_hat.push_back(embed_im(phi));
    }
    return cm;
}

namespace {

// Shared scaffolding for the two W-space models: trace-linear balance,
// voltage and phase constraints over the dense W entries.
struct WSpace {
    const Grid& g;
    Formulation& f;
    ConstraintMatrices cm;
    int n2;

    WSpace(const Grid& grid, Formulation& form) : g(grid), f(form) {
        cm = constraint_matrices(grid);
        n2 = 2 * cm.n;
    }

    void add_w_vars() {
        for (int i = 0; i < n2; ++i)
            for (int j = i; j < n2; ++j) f.add_variable(vn("W", i, j), -kInf, kInf);
    }

    void add_trace(PolyExpr& e, const Eigen::MatrixXd& M, double k) const {
        for (int i = 0; i < n2; ++i)
            for (int j = i; j < n2; ++j) {
                const double c = (i == j) ? M(i, i) : 2.0 * M(i, j);
                if (c != 0.0) e.add(k * c, {f.var(vn("W", i, j))});
            }
    }

    AffExpr trace_aff(const Eigen::MatrixXd& M) const {
        AffExpr out;
        for (int i = 0; i < n2; ++i)
            for (int j = i; j < n2; ++j) {
                const double c = (i == j) ? M(i, i) : 2.0 * M(i, j);
                if (c != 0.0) out.coeffs.push_back({f.var(vn("W", i, j)), c});
            }
        std::sort(out.coeffs.begin(), out.coeffs.end());
        return out;
    }

    void add_balance() {
        for (const Bus& b : g.buses) {
            const int p = g.bus_pos(b.id);
            PolyExpr re, im;
            add_trace(re, cm.psi[static_cast<size_t>(p)], 1.0);
            add_trace(im, cm.psi_hat[static_cast<size_t>(p)], 1.0);
            for (const Generator* gen : g.generators_at(b.id)) {
                re.add(-1.0, {f.var(vn("SgenR", b.id, gen->index))});
                im.add(-1.0, {f.var(vn("SgenC", b.id, gen->index))});
            }
            f.polys.push_back(re.constraint(Sense::Eq, -b.demand_re, vn("balance_re", b.id)));
            f.polys.push_back(im.constraint(Sense::Eq, -b.demand_im, vn("balance_im", b.id)));
        }
    }

    void add_voltage_phase() {
        add_voltage_bounds(f, g, [&](PolyExpr& e, int bus) {
            const int p = g.bus_pos(bus);
            e.add(1.0, {f.var(vn("W", p, p))});
            e.add(1.0, {f.var(vn("W", cm.n + p, cm.n + p))});
        });
        add_phase_bounds(
            f, g,
            [&](PolyExpr& e, double k, int b, int a) {
                add_trace(e, cm.theta(g.bus_pos(b), g.bus_pos(a)), k);
            },
            [&](PolyExpr& e, double k, int b, int a) {
                add_trace(e, cm.theta_hat(g.bus_pos(b), g.bus_pos(a)), k);
            });
    }
};

}  // namespace

Formulation build_matrix_form(const Grid& g) {
    require_valid(g);
    Formulation f;
    f.kind = "matrix";
    f.grid_hash = g.hash();

    for (const Bus& b : g.buses) f.add_variable(vn("VR", b.id), -vr_bound(b), vr_bound(b));
    for (const Bus& b : g.buses) f.add_variable(vn("VC", b.id), -vr_bound(b), vr_bound(b));
    WSpace w(g, f);
    w.add_w_vars();
    add_generation_vars(f, g);

    auto stacked = [&](int i) {
        return i < w.cm.n ? f.var(vn("VR", g.buses[static_cast<size_t>(i)].id))
                          : f.var(vn("VC", g.buses[static_cast<size_t>(i - w.cm.n)].id));
    };
    for (int i = 0; i < w.n2; ++i)
        for (int j = i; j < w.n2; ++j) {
            PolyExpr e;
            e.add(1.0, {f.var(vn("W", i, j))});
            e.add(-1.0, {stacked(i), stacked(j)});
            f.polys.push_back(e.constraint(Sense::Eq, 0.0, vn("rank1", i, j)));
        }

    w.add_balance();
    w.add_voltage_phase();

    {
        PolyExpr e;
        e.add(1.0, {f.var(vn("VC", g.reference_bus()))});
        f.polys.push_back(e.constraint(Sense::Eq, 0.0, "reference_im"));
    }

    const auto arcs = arc_views(g);
    for (size_t k = 0; k < arcs.size(); ++k) {
        if (!finite_flow_bound(*arcs[k].arc.branch)) continue;
        SocConstraint soc;
        soc.members = {w.trace_aff(w.cm.phi[k]), w.trace_aff(w.cm.phi_hat[k])};
        soc.t = aff_const(arcs[k].arc.branch->s_max);
        soc.rotated = false;
        soc.tag = arc_tag("flow_bound", arcs[k].arc);
        f.socs.push_back(soc);
    }

    set_objective(f, g, true);
    return f;
}

Formulation build_sdp_real(const Grid& g) {
    require_valid(g);
    Formulation f;
    f.kind = "sdp_real";
    f.grid_hash = g.hash();

    WSpace w(g, f);
    w.add_w_vars();
    add_generation_vars(f, g);

    w.add_balance();
    w.add_voltage_phase();

    {
        const int rp = g.bus_pos(g.reference_bus());
        PolyExpr e;
        e.add(1.0, {f.var(vn("W", w.cm.n + rp, w.cm.n + rp))});
        f.polys.push_back(e.constraint(Sense::Eq, 0.0, "reference_w"));
    }

    {
        PsdBlock blk;
        blk.dim = w.n2;
        blk.tag = "psd_w";
        for (int i = 0; i < w.n2; ++i)
            for (int j = i; j < w.n2; ++j) blk.entries[{i, j}] = aff_var(f.var(vn("W", i, j)));
        f.psds.push_back(blk);
    }

    const auto arcs = arc_views(g);
    for (size_t k = 0; k < arcs.size(); ++k) {
        if (!finite_flow_bound(*arcs[k].arc.branch)) continue;
        const double su = arcs[k].arc.branch->s_max;
        PsdBlock blk;
        blk.dim = 3;
        blk.negative = true;
        blk.tag = arc_tag("flow_schur", arcs[k].arc);
        blk.entries[{0, 0}] = aff_const(-su * su);
        blk.entries[{0, 1}] = w.trace_aff(w.cm.phi[k]);
        blk.entries[{0, 2}] = w.trace_aff(w.cm.phi_hat[k]);
        blk.entries[{1, 1}] = aff_const(-1.0);
        blk.entries[{2, 2}] = aff_const(-1.0);
        f.psds.push_back(blk);
    }

    set_objective(f, g, true);
    return f;
}

namespace {

// Hermitian matrix entries keyed by bus ids; the stored orientation follows
// the dense bus order (or the branch list for the adjacency-only models).
struct XSpace {
    const Grid& g;
    Formulation& f;
    bool adjacent_only;
    std::vector<std::pair<int, int>> pairs;

    XSpace(const Grid& grid, Formulation& form, bool adj)
        : g(grid), f(form), adjacent_only(adj) {
        if (adj) {
            pairs = adjacent_pairs(grid);
        } else {
            for (size_t i = 0; i < g.buses.size(); ++i)
                for (size_t j = i + 1; j < g.buses.size(); ++j)
                    pairs.push_back({g.buses[i].id, g.buses[j].id});
        }
    }

    void add_x_vars() {
        for (const Bus& b : g.buses) f.add_variable(vn("XR", b.id, b.id), 0.0, kInf);
        for (const auto& [b, a] : pairs) f.add_variable(vn("XR", b, a), -kInf, kInf);
        for (const auto& [b, a] : pairs) f.add_variable(vn("XC", b, a), -kInf, kInf);
    }

    // stored entry and sign for Im X(b,a); Re X is symmetric
    std::pair<std::pair<int, int>, int> stored(int b, int a) const {
        return canonical_pair(pairs, b, a);
    }

    int xr(int b, int a) const {
        if (b == a) return f.var(vn("XR", b, b));
        const auto [pr, sign] = stored(b, a);
        (void)sign;
        return f.var(vn("XR", pr.first, pr.second));
    }

    // imaginary entry with its orientation sign
    std::pair<int, int> xc(int b, int a) const {
        const auto [pr, sign] = stored(b, a);
        return {f.var(vn("XC", pr.first, pr.second)), sign};
    }

    // appends the model's expression for S_bah (real or imaginary part)
    void add_flow_expr(PolyExpr& e, const ArcView& av, bool imag, double k = 1.0) const {
        const int xbb = xr(av.arc.from, av.arc.from);
        const int xrba = xr(av.arc.from, av.arc.to);
        const auto [xcba, sign] = xc(av.arc.from, av.arc.to);
        const double oR = av.own.real(), oC = av.own.imag();
        const double cR = av.cross.real(), cC = av.cross.imag();
        if (!imag) {
            e.add(k * oR, {xbb});
            e.add(k * cR, {xrba});
            e.add(k * sign * cC, {xcba});
        } else {
            e.add(-k * oC, {xbb});
            e.add(k * sign * cR, {xcba});
            e.add(-k * cC, {xrba});
        }
    }

    // appends |I_bah|^2 as a linear expression in the X entries
    void add_current_expr(PolyExpr& e, const ArcView& av) const {
        const Complex m = av.own * std::conj(av.cross);
        e.add(std::norm(av.own), {xr(av.arc.from, av.arc.from)});
        e.add(std::norm(av.cross), {xr(av.arc.to, av.arc.to)});
        e.add(2 * m.real(), {xr(av.arc.from, av.arc.to)});
        const auto [xcba, sign] = xc(av.arc.from, av.arc.to);
        e.add(-2 * m.imag() * sign, {xcba});
    }

    void add_voltage_phase() {
        add_voltage_bounds(f, g,
                           [&](PolyExpr& e, int bus) { e.add(1.0, {f.var(vn("XR", bus, bus))}); });
        add_phase_bounds(
            f, g,
            [&](PolyExpr& e, double k, int b, int a) { e.add(k, {xr(b, a)}); },
            [&](PolyExpr& e, double k, int b, int a) {
                const auto [xcba, sign] = xc(b, a);
                e.add(k * sign, {xcba});
            });
    }
};

}  // namespace

Formulation build_sdp_complex(const Grid& g, SdpVariant variant) {
    require_valid(g);
    Formulation f;
    f.kind = variant == SdpVariant::v_sdp ? "sdp_v" : "sdp_x";
    f.grid_hash = g.hash();
    const auto arcs = arc_views(g);
    const int n = static_cast<int>(g.buses.size());

    if (variant == SdpVariant::v_sdp) {
        for (const Bus& b : g.buses) f.add_variable(vn("VR", b.id), -vr_bound(b), vr_bound(b));
        for (const Bus& b : g.buses) f.add_variable(vn("VC", b.id), -vr_bound(b), vr_bound(b));
    }
    XSpace x(g, f, false);
    x.add_x_vars();
    if (variant == SdpVariant::x_sdp) {
        for (const ArcView& av : arcs) f.add_variable(arc_tag("SR", av.arc), -kInf, kInf);
        for (const ArcView& av : arcs) f.add_variable(arc_tag("SC", av.arc), -kInf, kInf);
    }
    add_generation_vars(f, g);

    x.add_voltage_phase();

    if (variant == SdpVariant::v_sdp) {
        add_balance(
            f, g, arcs,
            [&](PolyExpr& e, const ArcView& av, bool imag) { x.add_flow_expr(e, av, imag); },
            [&](PolyExpr& e, int bus, double coef) { e.add(coef, {f.var(vn("XR", bus, bus))}); });

        for (const ArcView& av : arcs) {
            const auto bound = derived_current_bound(g, av);
            if (!usable_bound(bound)) continue;
            PolyExpr e;
            x.add_current_expr(e, av);
            f.polys.push_back(
                e.constraint(Sense::Le, *bound * *bound, arc_tag("current_bound", av.arc)));
        }

        const int r = g.reference_bus();
        PolyExpr e;
        e.add(1.0, {f.var(vn("VC", r))});
        f.polys.push_back(e.constraint(Sense::Eq, 0.0, "reference_im"));
        PolyExpr e2;
        e2.add(1.0, {f.var(vn("VR", r))});
        f.polys.push_back(e2.constraint(Sense::Ge, 0.0, "reference_re"));

        // Schur block [[1, V^H],[V, X]] in the real embedding, size 2(n+1)
        PsdBlock blk;
        blk.dim = 2 * (n + 1);
        blk.tag = "psd_schur";
        const int d = n + 1;
        auto re_entry = [&](int i, int j) -> AffExpr {
            if (i == 0 && j == 0) return aff_const(1.0);
            if (i == 0) return aff_var(f.var(vn("VR", g.buses[static_cast<size_t>(j - 1)].id)));
            if (j == 0) return aff_var(f.var(vn("VR", g.buses[static_cast<size_t>(i - 1)].id)));
            return aff_var(x.xr(g.buses[static_cast<size_t>(i - 1)].id,
                                g.buses[static_cast<size_t>(j - 1)].id));
        };
        auto im_entry = [&](int i, int j) -> AffExpr {
            if (i == 0 && j == 0) return AffExpr{};
            if (i == 0)
                return aff_var(f.var(vn("VC", g.buses[static_cast<size_t>(j - 1)].id)), -1.0);
            if (j == 0) return aff_var(f.var(vn("VC", g.buses[static_cast<size_t>(i - 1)].id)));
            if (i == j) return AffExpr{};
            const auto [xcv, sign] = x.xc(g.buses[static_cast<size_t>(i - 1)].id,
                                          g.buses[static_cast<size_t>(j - 1)].id);
            return aff_var(xcv, static_cast<double>(sign));
        };
        for (int i = 0; i < 2 * d; ++i)
            for (int j = i; j < 2 * d; ++j) {
                AffExpr e3;
                if (i < d && j < d) {
                    e3 = re_entry(i, j);
                } else if (i < d) {
                    e3 = im_entry(i, j - d);  // top-right block holds -Im
                    e3.constant = -e3.constant;
                    for (auto& c : e3.coeffs) c.second = -c.second;
                } else {
                    e3 = re_entry(i - d, j - d);
                }
                if (e3.constant == 0.0 && e3.coeffs.empty()) continue;
                blk.entries[{i, j}] = e3;
            }
        f.psds.push_back(blk);
    } else {
        for (const ArcView& av : arcs) {
            PolyExpr re;
            re.add(1.0, {f.var(arc_tag("SR", av.arc))});
            x.add_flow_expr(re, av, false, -1.0);
            f.polys.push_back(re.constraint(Sense::Eq, 0.0, arc_tag("flow_def_re", av.arc)));
            PolyExpr im;
            im.add(1.0, {f.var(arc_tag("SC", av.arc))});
            x.add_flow_expr(im, av, true, -1.0);
            f.polys.push_back(im.constraint(Sense::Eq, 0.0, arc_tag("flow_def_im", av.arc)));
        }

        add_balance(
            f, g, arcs,
            [&](PolyExpr& e, const ArcView& av, bool imag) {
                e.add(1.0, {f.var(arc_tag(imag ? "SC" : "SR", av.arc))});
            },
            [&](PolyExpr& e, int bus, double coef) { e.add(coef, {f.var(vn("XR", bus, bus))}); });

        for (const ArcView& av : arcs) {
            if (!finite_flow_bound(*av.arc.branch)) continue;
            SocConstraint soc;
            soc.members = {aff_var(f.var(arc_tag("SR", av.arc))),
                           aff_var(f.var(arc_tag("SC", av.arc)))};
            soc.t = aff_const(av.arc.branch->s_max);
            soc.rotated = false;
            soc.tag = arc_tag("flow_bound", av.arc);
            f.socs.push_back(soc);
        }

        // X >= 0 in the real embedding [[Re X, -Im X],[Im X, Re X]]
        PsdBlock blk;
        blk.dim = 2 * n;
        blk.tag = "psd_x";
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                const int bi = g.buses[static_cast<size_t>(i)].id;
                const int bj = g.buses[static_cast<size_t>(j)].id;
                const AffExpr re = aff_var(x.xr(bi, bj));
                blk.entries[{i, j}] = re;
                blk.entries[{n + i, n + j}] = re;
                if (i != j) {
                    const auto [xcv, sign] = x.xc(bi, bj);
                    blk.entries[{i, n + j}] = aff_var(xcv, -static_cast<double>(sign));
                    blk.entries[{j, n + i}] = aff_var(xcv, static_cast<double>(sign));
                }
            }
        f.psds.push_back(blk);
    }

    set_objective(f, g, true);
    return f;
}

Formulation build_socp_xspace(const Grid& g) {
    require_valid(g);
    Formulation f;
    f.kind = "socp_x";
    f.grid_hash = g.hash();

    XSpace x(g, f, true);
    x.add_x_vars();

    add_voltage_bounds(f, g,
                       [&](PolyExpr& e, int bus) { e.add(1.0, {f.var(vn("XR", bus, bus))}); });
    add_phase_bounds(
        f, g,
        [&](PolyExpr& e, double k, int b, int a) { e.add(k, {x.xr(b, a)}); },
        [&](PolyExpr& e, double k, int b, int a) {
            const auto [xcba, sign] = x.xc(b, a);
            e.add(k * sign, {xcba});
        });

    const NetworkAdmittance Y = network_admittance(g);

    // per-bus net power drawn from the network: sum_a X_ba conj(Y_ba)
    auto add_injection = [&](PolyExpr& e, int bus, bool imag, double k) {
        const int p = g.bus_pos(bus);
        for (const auto& [pos, val] : Y.entries()) {
            if (pos.first != p) continue;
            const int a = g.buses[static_cast<size_t>(pos.second)].id;
            const double yR = val.real(), yC = val.imag();
            if (a == bus) {
                // X_bb is real
                if (!imag)
                    e.add(k * yR, {f.var(vn("XR", bus, bus))});
                else
                    e.add(-k * yC, {f.var(vn("XR", bus, bus))});
            } else {
                const int xrba = x.xr(bus, a);
                const auto [xcba, sign] = x.xc(bus, a);
                if (!imag) {
                    e.add(k * yR, {xrba});
                    e.add(k * yC * sign, {xcba});
                } else {
                    e.add(k * yR * sign, {xcba});
                    e.add(-k * yC, {xrba});
                }
            }
        }
    };

    for (const Bus& b : g.buses) {
        double plo = 0.0, phi = 0.0, qlo = 0.0, qhi = 0.0;
        for (const Generator* gen : g.generators_at(b.id)) {
            plo += gen->p_min;
            phi += gen->p_max;
            qlo += gen->q_min;
            qhi += gen->q_max;
        }
        struct Side {
            bool imag;
            Sense sense;
            double agg;
            double demand;
            const char* base;
        };
        const Side sides[] = {{false, Sense::Ge, plo, b.demand_re, "inject_lo_re"},
                              {false, Sense::Le, phi, b.demand_re, "inject_hi_re"},
                              {true, Sense::Ge, qlo, b.demand_im, "inject_lo_im"},
                              {true, Sense::Le, qhi, b.demand_im, "inject_hi_im"}};
        for (const Side& s : sides) {
            if (is_unbounded(s.agg)) continue;
            PolyExpr e;
            add_injection(e, b.id, s.imag, 1.0);
            f.polys.push_back(e.constraint(s.sense, s.agg - s.demand, vn(s.base, b.id)));
        }
    }

    for (const auto& [b, a] : x.pairs) {
        SocConstraint soc;
        soc.members = {aff_var(f.var(vn("XR", b, a))), aff_var(f.var(vn("XC", b, a)))};
        soc.t = aff_var(f.var(vn("XR", b, b)));
        soc.w = aff_var(f.var(vn("XR", a, a)));
        soc.rotated = true;
        soc.tag = vn("jabr_cone", b, a);
        f.socs.push_back(soc);
    }

    // cheapest-generator proxy objective over net bus generation
    PolyExpr obj;
    for (const Bus& b : g.buses) {
        const auto gens = g.generators_at(b.id);
        if (gens.empty()) continue;
        double minc1 = kInf;
        for (const Generator* gen : gens) {
            obj.add(gen->cost.empty() ? 0.0 : gen->cost[0], {});
            minc1 = std::min(minc1, gen->cost.size() > 1 ? gen->cost[1] : 0.0);
        }
        add_injection(obj, b.id, false, minc1);
        obj.add(minc1 * b.demand_re, {});
    }
    f.objective = obj.terms();
    return f;
}

Formulation build_qc_lifted(const Grid& g) {
    require_valid(g);
    Formulation f;
    f.kind = "qc";
    f.grid_hash = g.hash();
    const auto arcs = arc_views(g);

    XSpace x(g, f, true);
    x.add_x_vars();
    for (const ArcView& av : arcs) f.add_variable(arc_tag("SR", av.arc), -kInf, kInf);
    for (const ArcView& av : arcs) f.add_variable(arc_tag("SC", av.arc), -kInf, kInf);
    std::vector<std::optional<double>> ibar;
    for (const ArcView& av : arcs) {
        auto bound = derived_current_bound(g, av);
        if (!usable_bound(bound)) bound.reset();
        ibar.push_back(bound);
        f.add_variable(arc_tag("ShatR", av.arc), 0.0, kInf);
        f.add_variable(arc_tag("ShatC", av.arc), 0.0, kInf);
        f.add_variable(arc_tag("Ihat", av.arc), 0.0, bound ? *bound * *bound : kInf);
        f.add_variable(arc_tag("WIhat", av.arc), 0.0, kInf);
    }
    add_generation_vars(f, g);

    for (const ArcView& av : arcs) {
        PolyExpr re;
        re.add(1.0, {f.var(arc_tag("SR", av.arc))});
        x.add_flow_expr(re, av, false, -1.0);
        f.polys.push_back(re.constraint(Sense::Eq, 0.0, arc_tag("flow_def_re", av.arc)));
        PolyExpr im;
        im.add(1.0, {f.var(arc_tag("SC", av.arc))});
        x.add_flow_expr(im, av, true, -1.0);
        f.polys.push_back(im.constraint(Sense::Eq, 0.0, arc_tag("flow_def_im", av.arc)));
    }

    add_balance(
        f, g, arcs,
        [&](PolyExpr& e, const ArcView& av, bool imag) {
            e.add(1.0, {f.var(arc_tag(imag ? "SC" : "SR", av.arc))});
        },
        [&](PolyExpr& e, int bus, double coef) { e.add(coef, {f.var(vn("XR", bus, bus))}); });

    x.add_voltage_phase();

    for (const auto& [b, a] : x.pairs) {
        SocConstraint soc;
        soc.members = {aff_var(f.var(vn("XR", b, a))), aff_var(f.var(vn("XC", b, a)))};
        soc.t = aff_var(f.var(vn("XR", b, b)));
        soc.w = aff_var(f.var(vn("XR", a, a)));
        soc.rotated = true;
        soc.tag = vn("jabr_cone", b, a);
        f.socs.push_back(soc);
    }

    for (size_t k = 0; k < arcs.size(); ++k) {
        const ArcView& av = arcs[k];
        const Bus& fb = g.bus(av.arc.from);
        const int shr = f.var(arc_tag("ShatR", av.arc)), shc = f.var(arc_tag("ShatC", av.arc));
        const int ih = f.var(arc_tag("Ihat", av.arc)), wih = f.var(arc_tag("WIhat", av.arc));
        const int xbb = f.var(vn("XR", av.arc.from, av.arc.from));
        const int sr = f.var(arc_tag("SR", av.arc)), sc = f.var(arc_tag("SC", av.arc));

        {
            PolyExpr e;
            e.add(1.0, {shr});
            e.add(1.0, {shc});
            e.add(-1.0, {wih});
            f.polys.push_back(e.constraint(Sense::Eq, 0.0, arc_tag("lift_energy", av.arc)));
        }
        {
            PolyExpr e;
            e.add(1.0, {ih});
            PolyExpr cur;
            x.add_current_expr(cur, av);
            for (const Term& t : cur.terms()) e.add(-t.coef, t.mono);
            f.polys.push_back(e.constraint(Sense::Eq, 0.0, arc_tag("lift_current", av.arc)));
        }
        if (finite_flow_bound(*av.arc.branch)) {
            const double su2 = av.arc.branch->s_max * av.arc.branch->s_max;
            PolyExpr e;
            e.add(1.0, {shr});
            e.add(1.0, {shc});
            f.polys.push_back(e.constraint(Sense::Le, su2, arc_tag("flow_cap", av.arc)));
        }

        const double vlo2 = fb.v_min * fb.v_min;
        {
            PolyExpr e;
            e.add(1.0, {wih});
            e.add(-vlo2, {ih});
            f.polys.push_back(e.constraint(Sense::Ge, 0.0, arc_tag("wi_box_lo", av.arc)));
        }
        if (!is_unbounded(fb.v_max)) {
            const double vhi2 = fb.v_max * fb.v_max;
            PolyExpr e;
            e.add(1.0, {wih});
            e.add(-vhi2, {ih});
            f.polys.push_back(e.constraint(Sense::Le, 0.0, arc_tag("wi_box_hi", av.arc)));
            if (ibar[k]) {
                const double i2 = *ibar[k] * *ibar[k];
                PolyExpr c;
                c.add(1.0, {wih});
                c.add(-vhi2, {ih});
                c.add(-i2, {xbb});
                f.polys.push_back(
                    c.constraint(Sense::Ge, -vhi2 * i2, arc_tag("wi_corner_lo", av.arc)));
            }
        }
        if (ibar[k]) {
            const double i2 = *ibar[k] * *ibar[k];
            PolyExpr c;
            c.add(1.0, {wih});
            c.add(-vlo2, {ih});
            c.add(-i2, {xbb});
            f.polys.push_back(
                c.constraint(Sense::Le, -vlo2 * i2, arc_tag("wi_corner_hi", av.arc)));
        }

        {
            PolyExpr e;
            e.add(1.0, {sr, sr});
            e.add(-1.0, {shr});
            f.polys.push_back(e.constraint(Sense::Le, 0.0, arc_tag("square_lo_re", av.arc)));
            PolyExpr e2;
            e2.add(1.0, {sc, sc});
            e2.add(-1.0, {shc});
            f.polys.push_back(e2.constraint(Sense::Le, 0.0, arc_tag("square_lo_im", av.arc)));
        }
        if (finite_flow_bound(*av.arc.branch)) {
            const double su2 = av.arc.branch->s_max * av.arc.branch->s_max;
            PolyExpr e;
            e.add(1.0, {shr});
            f.polys.push_back(e.constraint(Sense::Le, su2, arc_tag("secant_hi_re", av.arc)));
            PolyExpr e2;
            e2.add(1.0, {shc});
            f.polys.push_back(e2.constraint(Sense::Le, su2, arc_tag("secant_hi_im", av.arc)));
        }
    }

    set_objective(f, g, true);
    return f;
}

const std::vector<std::string>& formulation_kinds() {
    static const std::vector<std::string> kinds = {
        "siv",      "voltage_only", "polar", "jabr",   "mixed", "matrix",
        "sdp_real", "sdp_v",        "sdp_x", "socp_x", "qc"};
    return kinds;
}

Formulation build_formulation(const Grid& g, const std::string& kind) {
    if (kind == "siv") return build_siv_cartesian(g);
    if (kind == "voltage_only") return build_voltage_only(g);
    if (kind == "polar") return build_polar(g);
    if (kind == "jabr") return build_jabr_socp(g);
    if (kind == "mixed") return build_mixed(g);
    if (kind == "matrix") return build_matrix_form(g);
    if (kind == "sdp_real") return build_sdp_real(g);
    if (kind == "sdp_v") return build_sdp_complex(g, SdpVariant::v_sdp);
    if (kind == "sdp_x") return build_sdp_complex(g, SdpVariant::x_sdp);
    if (kind == "socp_x") return build_socp_xspace(g);
    if (kind == "qc") return build_qc_lifted(g);
    throw std::invalid_argument("unknown formulation kind '" + kind + "'");
}

}  // namespace acopf
