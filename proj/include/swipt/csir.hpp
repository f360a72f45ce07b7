#pragma once

// Per-block power-splitting policies when only the receiver tracks the
// channel: the transmitter sends at sys.p_fixed every block and the receiver
// picks the split rho(h). Two per-state rules are provided: the exact
// Lagrangian maximizer and a closed-form rule that maximizes a chord-based
// lower bound on the rate ("suboptimal"). A bisection on the energy
// multiplier meets an average harvested-energy target, time-sharing a single
// boundary state so the constraint holds with equality.
//
// Multiplier conventions: the public solvers and solution records use the
// multiplier of the bits-rate Lagrangian R_bits + lambda * Q. The five-row
// decision table for the exact rule and the stationarity equation solved by
// rho_opt_root are stated for a natural-log rate term, so they take that
// Lagrangian's own multiplier; the solvers convert with ln 2 where needed.
// Candidate-value comparisons are scale-invariant either way.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "swipt/channel.hpp"
#include "swipt/eh_model.hpp"
#include "swipt/errors.hpp"
#include "swipt/rootfind.hpp"

namespace swipt {

enum class CsirCase {
    case1,   // exact rule: harvest nothing
    case2,   // exact rule: interior stationary point, must beat rho = 0
    case3,   // exact rule: boundary comparison rho in {0, 1}
    case4,   // exact rule: interior stationary point
    case5,   // exact rule: harvest everything
    case1p,  // closed-form rule counterparts
    case2p,
    case3p,
    case4p,
    case5p,
};

enum class CsirMode { optimal, suboptimal };

struct SolveOptions {
    double tol = 1e-6;    // constraint tolerance relative to the achievable maximum
    int max_iter = 200;   // ensemble evaluations allowed in a one-multiplier search
    int max_outer = 500;  // outer steps (subgradient or bisection) in a two-multiplier search
};

// Randomize one state: use rho_alt with probability theta, the policy value
// with probability 1 - theta.
struct TimeShare {
    std::size_t state = 0;
    double rho_alt = 0.0;
    double theta = 0.0;
};

struct CsirSolution {
    std::vector<double> rho;
    double lambda = 0.0;  // bits-rate energy multiplier
    double achieved_rate = 0.0;
    double achieved_q = 0.0;
    int iterations = 0;
    double gap_bound = 0.0;  // dual value minus achieved objective at the final multiplier
    CsirMode mode = CsirMode::optimal;
    std::optional<TimeShare> time_share;
};

// Decision table of the exact per-state rule, written for the natural-log
// rate Lagrangian; lambda is that Lagrangian's multiplier. Rows are evaluated
// first-match in the order written. The row set covers the whole parameter
// plane; the trailing return only catches NaN-poisoned inputs and routes them
// to the comparison-based row, which re-derives its answer from candidate
// values.
inline CsirCase classify_optimal(double h, double lambda, const NonlinearEhParams& eh,
                                 const SystemParams& sys) {
    const double lf0 = lambda * csir_f(0.0, eh, sys);
    const double lfh = lambda * csir_f(h, eh, sys);
    const double gh = csir_g(h, eh, sys);
    const double g0 = csir_g(0.0, eh, sys);
    if (csir_gamma(h, eh, sys) >= 0.25 * lambda) return CsirCase::case1;
    if (lf0 <= gh && lfh < g0) return CsirCase::case2;
    if (lf0 <= gh && lfh >= g0) return CsirCase::case3;
    if (lf0 > gh && lfh < g0) return CsirCase::case4;
    if (lf0 > gh && lfh >= g0) return CsirCase::case5;
    return CsirCase::case2;
}

// Decision table of the closed-form rule; lambda multiplies the energy next
// to a bits rate. Boundary ties not covered by a row fall through to the
// comparison-based row.
inline CsirCase classify_suboptimal(double h, double lambda, const NonlinearEhParams& eh,
                                    const SystemParams& sys) {
    const double lf0 = lambda * csir_f(0.0, eh, sys);
    const double lfh = lambda * csir_f(h, eh, sys);
    const double z = csir_z(h, eh, sys);
    if (z >= 0.25 * lambda) return CsirCase::case1p;
    if (z > std::max(lfh, lf0)) return CsirCase::case2p;
    if (lf0 <= z && z <= lfh) return CsirCase::case3p;
    if (lfh < z && z < lf0) return CsirCase::case4p;
    if (z <= std::min(lfh, lf0)) return CsirCase::case5p;
    return CsirCase::case2p;
}

// Interior stationary split: the root of
//   lambda * psi (1 - psi) = (1 - omega) / (p_s t a ((1 - x) h p + sigma2))
// on (b/(h p), 1), on the falling flank of the logistic slope. lambda is the
// natural-log Lagrangian multiplier, matching the equation as written.
// Fixed-point iteration through the logistic inverse, with a bisection
// fallback; the result is validated against the equation's own scale.
inline double rho_opt_root(double h, double lambda, const NonlinearEhParams& eh,
                           const SystemParams& sys) {
    const double hp = h * sys.p_fixed;
    if (!(lambda > 0.0)) throw std::domain_error("rho_opt_root: lambda must be positive");
    if (!(hp > eh.b)) throw NoRootInBracket("rho_opt_root: interval (b/(h p), 1) is empty");
    const double lo = eh.b / hp;
    if (!(lo < 1.0)) throw NoRootInBracket("rho_opt_root: interval (b/(h p), 1) is empty");
    const double scale = eh.p_s * eh.t_block * eh.a;

    auto rhs = [&](double x) { return (1.0 - eh.omega) / (scale * ((1.0 - x) * hp + sys.sigma2)); };
    auto balance = [&](double x) {
        return lambda * detail::sigmoid_slope(eh.a * (x * hp - eh.b)) - rhs(x);
    };

    double x = 0.5 * (lo + 1.0);
    bool converged = false;
    for (int i = 0; i < 40; ++i) {
        const double eps = rhs(x) / lambda;
        if (!(eps > 0.0 && eps < 0.25)) break;
        const double next = detail::logistic_upper_preimage(eps, eh.a, eh.b) / hp;
        if (!(next > lo && next < 1.0)) break;
        if (std::abs(next - x) <= 1e-15 * std::fmax(1.0, std::abs(x))) {
            x = next;
            converged = true;
            break;
        }
        x = next;
    }

    const double resid_scale = std::fmax(1.0, 0.25 * lambda);
    if (converged && !(std::abs(balance(x)) <= 1e-10 * resid_scale)) converged = false;
    if (!converged) {
        const double a0 = lo + 1e-12 * (1.0 - lo);
        const double b0 = 1.0;
        const double fa = balance(a0);
        const double fb = balance(b0);
        if (!((fa > 0.0) != (fb > 0.0)))
            throw NoRootInBracket("rho_opt_root: no sign change in (b/(h p), 1)");
        x = detail::bisect(balance, a0, b0, fa, fb);
        if (!(std::abs(balance(x)) <= 1e-10 * resid_scale))
            throw NonConvergence("rho_opt_root: residual above tolerance");
    }
    return x;
}

namespace detail {

// Per-state quantities that do not depend on the multiplier.
struct CsirStateTerms {
    double h = 0.0;
    double hp = 0.0;       // h * p_fixed
    double r0_nats = 0.0;  // ln(1 + h p / sigma2)
    double f_h = 0.0;      // logistic slope at full harvesting
    double g_h = 0.0;      // rate slope scale at rho = 0
    double z_h = 0.0;      // chord surrogate slope scale (bits)
    double gam_h = 0.0;    // rate slope scale at the turn-on split
    double q1 = 0.0;       // harvested energy at rho = 1
};

inline CsirStateTerms make_csir_terms(double h, const NonlinearEhParams& eh,
                                      const SystemParams& sys) {
    CsirStateTerms st;
    st.h = h;
    st.hp = h * sys.p_fixed;
    st.r0_nats = std::log1p(st.hp / sys.sigma2);
    st.f_h = csir_f(h, eh, sys);
    st.g_h = csir_g(h, eh, sys);
    st.gam_h = csir_gamma(h, eh, sys);
    st.z_h = st.hp > 0.0 ? csir_z(h, eh, sys) : 0.0;
    st.q1 = q_nonlinear_received(st.hp, eh);
    return st;
}

// Exact per-state objective with a natural-log rate term.
inline double csir_value_nats(const CsirStateTerms& st, double rho, double lambda_nats,
                              const NonlinearEhParams& eh, const SystemParams& sys) {
    return std::log1p((1.0 - rho) * st.hp / sys.sigma2) +
           lambda_nats * q_nonlinear_received(rho * st.hp, eh);
}

// Prefer the smaller split when two candidate values tie within noise.
inline bool strictly_better(double v_new, double v_base) {
    const double tie = 1e-12 * std::fmax(1.0, std::fmax(std::abs(v_new), std::abs(v_base)));
    return v_new > v_base + tie;
}

// Direct maximization for states whose case row has no usable interior
// bracket (possible when h p <= b): compare rho = 0, rho = 1 and every sign
// change of the objective derivative.
inline double csir_scan_argmax(const CsirStateTerms& st, double lambda_nats,
                               const NonlinearEhParams& eh, const SystemParams& sys) {
    auto deriv = [&](double rho) {
        return lambda_nats * eh.p_s * eh.t_block * eh.a * st.hp *
                   sigmoid_slope(eh.a * (rho * st.hp - eh.b)) / (1.0 - eh.omega) -
               st.hp / ((1.0 - rho) * st.hp + sys.sigma2);
    };
    std::vector<double> cands = scan_roots(deriv, 0.0, 1.0, 48);
    double best_rho = 0.0;
    double best_val = csir_value_nats(st, 0.0, lambda_nats, eh, sys);
    cands.push_back(1.0);
    for (double r : cands) {
        const double v = csir_value_nats(st, r, lambda_nats, eh, sys);
        if (strictly_better(v, best_val) || (v > best_val && r < best_rho)) {
            best_val = v;
            best_rho = r;
        }
    }
    return best_rho;
}

// Exact per-state rule. lambda_bits multiplies the energy next to a bits
// rate; the table and stationarity equation run on the natural-log
// equivalent. f0 and g0 are csir_f(0)/csir_g(0), shared across states.
inline double state_rho_optimal(const CsirStateTerms& st, double f0, double g0,
                                double lambda_bits, const NonlinearEhParams& eh,
                                const SystemParams& sys) {
    if (!(st.hp > 0.0) || !(lambda_bits > 0.0)) return 0.0;
    const double lam = lambda_bits * kLn2;
    if (st.gam_h >= 0.25 * lam) return 0.0;  // case 1
    const bool flat_at_zero = lam * f0 <= st.g_h;
    const bool falling_at_one = lam * st.f_h < g0;
    if (flat_at_zero && !falling_at_one) {  // case 3
        return strictly_better(lam * st.q1, st.r0_nats) ? 1.0 : 0.0;
    }
    if (!flat_at_zero && !falling_at_one) return 1.0;  // case 5
    // case 2 (flat_at_zero) or case 4: interior stationary point wanted.
    if (!(st.hp > eh.b)) return csir_scan_argmax(st, lam, eh, sys);
    double root;
    try {
        root = rho_opt_root(st.h, lam, eh, sys);
    } catch (const NoRootInBracket&) {
        return csir_scan_argmax(st, lam, eh, sys);
    }
    if (flat_at_zero) {  // case 2: the interior point must beat rho = 0
        const double v_root = csir_value_nats(st, root, lam, eh, sys);
        const double v_zero = st.r0_nats;
        return strictly_better(v_root, v_zero) ? root : 0.0;
    }
    return root;  // case 4
}

// Closed-form per-state rule; lambda_bits is used directly since the rule's
// table and stationarity equation carry the bits normalization already.
inline double state_rho_suboptimal(const CsirStateTerms& st, double f0, double lambda_bits,
                                   const NonlinearEhParams& eh, const SystemParams& sys) {
    (void)sys;
    if (!(st.hp > 0.0) || !(lambda_bits > 0.0)) return 0.0;
    const double z = st.z_h;
    const double lf0 = lambda_bits * f0;
    const double lfh = lambda_bits * st.f_h;
    if (z >= 0.25 * lambda_bits) return 0.0;  // case 1'
    const double r0_bits = st.r0_nats / kLn2;

    auto surrogate = [&](double rho) {
        return (1.0 - rho) * r0_bits + lambda_bits * q_nonlinear_received(rho * st.hp, eh);
    };
    auto closed_form = [&]() {
        return logistic_upper_preimage(z / lambda_bits, eh.a, eh.b) / st.hp;
    };

    if (lf0 <= z && z <= lfh) {  // case 3'
        return strictly_better(lambda_bits * st.q1, r0_bits) ? 1.0 : 0.0;
    }
    if (lfh < z && z < lf0) {  // case 4'
        const double r = closed_form();
        if (r > 0.0 && r <= 1.0) return r;
        return strictly_better(lambda_bits * st.q1, r0_bits) ? 1.0 : 0.0;
    }
    if (z <= std::min(lfh, lf0)) return 1.0;  // case 5'
    // case 2' (z above both flank values), plus boundary ties falling through:
    // with h p <= b the slope never reaches z on (0, 1], so rho = 0 wins.
    if (!(st.hp > eh.b)) return 0.0;
    const double r = closed_form();
    if (!(r > 0.0 && r < 1.0)) return 0.0;
    return strictly_better(surrogate(r), r0_bits) ? r : 0.0;
}

class CsirProblem {
  public:
    CsirProblem(const FadingEnsemble& ens, const NonlinearEhParams& eh, const SystemParams& sys)
        : eh_(eh), sys_(sys), f0_(csir_f(0.0, eh, sys)), g0_(csir_g(0.0, eh, sys)) {
        st_.reserve(ens.gains.size());
        for (double h : ens.gains) {
            if (!(h >= 0.0)) throw std::invalid_argument("gain ensemble: negative or NaN gain");
            st_.push_back(make_csir_terms(h, eh, sys));
        }
        if (st_.empty()) throw std::invalid_argument("gain ensemble: empty");
    }

    std::size_t size() const { return st_.size(); }
    const CsirStateTerms& state(std::size_t k) const { return st_[k]; }

    double q_max() const {
        double s = 0.0;
        for (const auto& st : st_) s += st.q1;
        return s / static_cast<double>(st_.size());
    }

    double rho_for(std::size_t k, double lambda_bits, CsirMode mode) const {
        return mode == CsirMode::optimal
                   ? state_rho_optimal(st_[k], f0_, g0_, lambda_bits, eh_, sys_)
                   : state_rho_suboptimal(st_[k], f0_, lambda_bits, eh_, sys_);
    }

    double rate_bits(std::size_t k, double rho) const {
        return std::log1p((1.0 - rho) * st_[k].hp / sys_.sigma2) / kLn2;
    }

    double q_of(std::size_t k, double rho) const {
        return q_nonlinear_received(rho * st_[k].hp, eh_);
    }

    // Chord-surrogate rate used by the closed-form rule's objective.
    double surrogate_rate_bits(std::size_t k, double rho) const {
        return (1.0 - rho) * st_[k].r0_nats / kLn2;
    }

    struct Eval {
        double mean_rate = 0.0;  // bits
        double mean_q = 0.0;
        double mean_surrogate = 0.0;  // bits, chord rate for the closed-form rule
    };

    Eval evaluate(double lambda_bits, CsirMode mode, std::vector<double>* rho_out) const {
        if (rho_out) rho_out->resize(st_.size());
        Eval ev;
        for (std::size_t k = 0; k < st_.size(); ++k) {
            const double r = rho_for(k, lambda_bits, mode);
            if (rho_out) (*rho_out)[k] = r;
            ev.mean_rate += rate_bits(k, r);
            ev.mean_q += q_of(k, r);
            ev.mean_surrogate += surrogate_rate_bits(k, r);
        }
        const double n = static_cast<double>(st_.size());
        ev.mean_rate /= n;
        ev.mean_q /= n;
        ev.mean_surrogate /= n;
        return ev;
    }

    const NonlinearEhParams& eh() const { return eh_; }
    const SystemParams& sys() const { return sys_; }

  private:
    NonlinearEhParams eh_;
    SystemParams sys_;
    double f0_, g0_;
    std::vector<CsirStateTerms> st_;
};

}  // namespace detail

// Exact per-state split for a bits-rate multiplier.
inline double solve_state_optimal(double h, double lambda, const NonlinearEhParams& eh,
                                  const SystemParams& sys) {
    return detail::state_rho_optimal(detail::make_csir_terms(h, eh, sys), csir_f(0.0, eh, sys),
                                     csir_g(0.0, eh, sys), lambda, eh, sys);
}

// Closed-form per-state split for a bits-rate multiplier.
inline double solve_state_suboptimal(double h, double lambda, const NonlinearEhParams& eh,
                                     const SystemParams& sys) {
    return detail::state_rho_suboptimal(detail::make_csir_terms(h, eh, sys), csir_f(0.0, eh, sys),
                                        lambda, eh, sys);
}

// Meet E[Q] = q_target by bisecting the energy multiplier. The policy family
// is piecewise constant in lambda, so the final step time-shares one state
// between the two bracketing policies to land on the target exactly.
inline CsirSolution find_lambda(const FadingEnsemble& ens, double q_target, CsirMode mode,
                                const NonlinearEhParams& eh, const SystemParams& sys,
                                const SolveOptions& opt = {}) {
    detail::CsirProblem prob(ens, eh, sys);
    const double n = static_cast<double>(prob.size());
    const double qmax = prob.q_max();

    CsirSolution sol;
    sol.mode = mode;
    if (q_target > qmax * (1.0 + 1e-9) + 1e-300)
        throw InfeasibleTarget("find_lambda: q_target above the all-harvesting average");
    const double q_eff = std::min(q_target, qmax);

    int evals = 0;
    auto run = [&](double lam, std::vector<double>* rho_out) {
        ++evals;
        return prob.evaluate(lam, mode, rho_out);
    };

    if (!(q_eff > 0.0)) {
        sol.lambda = 0.0;
        sol.rho.assign(prob.size(), 0.0);
        double rsum = 0.0;
        for (std::size_t k = 0; k < prob.size(); ++k) rsum += prob.rate_bits(k, 0.0);
        sol.achieved_rate = rsum / n;
        sol.achieved_q = 0.0;
        sol.iterations = evals;
        sol.gap_bound = 0.0;
        return sol;
    }

    const double accept = opt.tol * qmax;

    // Bracket the target: E[Q] is nondecreasing in the multiplier.
    double lam_lo = 0.0;
    double lam_hi = 1.0;
    auto ev_hi = run(lam_hi, nullptr);
    while (ev_hi.mean_q < q_eff && evals < opt.max_iter) {
        lam_lo = lam_hi;
        lam_hi *= 16.0;
        if (lam_hi > 1e24) throw NonConvergence("find_lambda: multiplier bracket expansion failed");
        ev_hi = run(lam_hi, nullptr);
    }
    if (ev_hi.mean_q < q_eff) throw NonConvergence("find_lambda: iteration budget exhausted");

    // Bisect to a jump or until the energy lands inside the acceptance band.
    double lam_mid = lam_hi;
    detail::CsirProblem::Eval ev_mid = ev_hi;
    bool accepted = std::abs(ev_hi.mean_q - q_eff) <= accept;
    while (!accepted && evals < opt.max_iter) {
        if (lam_hi - lam_lo <= 1e-14 * lam_hi) break;
        lam_mid = lam_lo > 0.0 ? std::sqrt(lam_lo * lam_hi) : 0.5 * (lam_lo + lam_hi);
        ev_mid = run(lam_mid, nullptr);
        if (std::abs(ev_mid.mean_q - q_eff) <= accept) {
            accepted = true;
            break;
        }
        if (ev_mid.mean_q < q_eff) {
            lam_lo = lam_mid;
        } else {
            lam_hi = lam_mid;
            ev_hi = ev_mid;
        }
    }

    if (accepted) {
        sol.lambda = lam_mid;
        auto ev = run(lam_mid, &sol.rho);
        sol.achieved_rate = ev.mean_rate;
        sol.achieved_q = ev.mean_q;
        // The policy is the per-state argmax at lam_mid, so the dual exceeds
        // the achieved objective exactly by the constraint slack.
        sol.gap_bound = lam_mid * (ev.mean_q - q_eff);
        sol.iterations = evals;
        return sol;
    }
    if (evals >= opt.max_iter && lam_hi - lam_lo > 1e-14 * lam_hi)
        throw NonConvergence("find_lambda: iteration budget exhausted");

    // The target sits on a jump: walk the states whose split differs between
    // the bracketing policies and time-share the one that overshoots.
    std::vector<double> rho_lo, rho_hi;
    auto ev_lo_f = lam_lo > 0.0 ? run(lam_lo, &rho_lo) : detail::CsirProblem::Eval{};
    if (!(lam_lo > 0.0)) {
        rho_lo.assign(prob.size(), 0.0);
        double rsum = 0.0;
        for (std::size_t k = 0; k < prob.size(); ++k) rsum += prob.rate_bits(k, 0.0);
        ev_lo_f.mean_rate = rsum / n;
        ev_lo_f.mean_surrogate = ev_lo_f.mean_rate;
        ev_lo_f.mean_q = 0.0;
    }
    auto ev_hi_f = run(lam_hi, &rho_hi);
    (void)ev_hi_f;

    sol.lambda = lam_hi;
    sol.rho = rho_lo;
    double cur_q = ev_lo_f.mean_q;
    double cur_rate = ev_lo_f.mean_rate;
    for (std::size_t k = 0; k < prob.size(); ++k) {
        if (rho_hi[k] == rho_lo[k]) continue;
        const double dq = (prob.q_of(k, rho_hi[k]) - prob.q_of(k, rho_lo[k])) / n;
        const double dr = (prob.rate_bits(k, rho_hi[k]) - prob.rate_bits(k, rho_lo[k])) / n;
        if (dq <= 0.0 || cur_q + dq <= q_eff) {
            sol.rho[k] = rho_hi[k];
            cur_q += dq;
            cur_rate += dr;
            continue;
        }
        const double theta = std::clamp((q_eff - cur_q) / dq, 0.0, 1.0);
        sol.time_share = TimeShare{k, rho_hi[k], theta};
        cur_q += theta * dq;
        cur_rate += theta * dr;
        break;
    }
    sol.achieved_rate = cur_rate;
    sol.achieved_q = cur_q;

    // Dual value at lam_hi minus the achieved objective; for the closed-form
    // rule the bound applies to its chord-based surrogate objective.
    double dual = 0.0, primal_obj = 0.0;
    for (std::size_t k = 0; k < prob.size(); ++k) {
        const double rb =
            mode == CsirMode::optimal ? prob.rate_bits(k, rho_hi[k]) : prob.surrogate_rate_bits(k, rho_hi[k]);
        dual += rb + lam_hi * prob.q_of(k, rho_hi[k]);
        double rate_term = mode == CsirMode::optimal ? prob.rate_bits(k, sol.rho[k])
                                                     : prob.surrogate_rate_bits(k, sol.rho[k]);
        double q_term = prob.q_of(k, sol.rho[k]);
        if (sol.time_share && sol.time_share->state == k) {
            const double th = sol.time_share->theta;
            const double ra = mode == CsirMode::optimal
                                  ? prob.rate_bits(k, sol.time_share->rho_alt)
                                  : prob.surrogate_rate_bits(k, sol.time_share->rho_alt);
            rate_term = (1.0 - th) * rate_term + th * ra;
            q_term = (1.0 - th) * q_term + th * prob.q_of(k, sol.time_share->rho_alt);
        }
        primal_obj += rate_term + lam_hi * q_term;
    }
    sol.gap_bound = (dual - primal_obj) / n;
    sol.iterations = evals;
    return sol;
}

struct PartialCsitSolution {
    double p_star = 0.0;
    CsirSolution solution;
};

// One long-term knob at the transmitter: pick the fixed transmit power
// P in (0, p_th] whose receiver-side solve yields the best rate at the
// energy target. Coarse grid plus golden-section refinement; evaluated
// endpoints stay in the comparison so a monotone profile returns p_th.
inline PartialCsitSolution solve_partial_csit(const FadingEnsemble& ens, double q_target,
                                              double p_th, const NonlinearEhParams& eh,
                                              const SystemParams& sys,
                                              const SolveOptions& opt = {}) {
    if (!(p_th > 0.0)) throw std::invalid_argument("solve_partial_csit: p_th must be positive");

    auto sys_at = [&](double p) {
        return SystemParams(sys.sigma2, p, sys.p_avg, std::fmax(sys.p_max, p), sys.zeta);
    };
    auto q_cap = [&](double p) {
        double sum = 0.0;
        for (double h : ens.gains) sum += q_nonlinear(h, p, 1.0, eh);
        return sum / static_cast<double>(ens.gains.size());
    };
    if (q_target > q_cap(p_th) * (1.0 + 1e-9) + 1e-300)
        throw InfeasibleTarget("solve_partial_csit: q_target unreachable at p_th");

    struct Best {
        double p = 0.0;
        double value = -1.0;
        CsirSolution sol;
        bool valid = false;
    } best;

    auto value_at = [&](double p) -> double {
        if (!(p > 0.0)) return -1.0;
        if (q_target > q_cap(p) * (1.0 + 1e-12)) return -1.0;
        CsirSolution s = find_lambda(ens, q_target, CsirMode::optimal, eh, sys_at(p), opt);
        const double v = s.achieved_rate;
        if (!best.valid || v > best.value + 1e-15 * std::fmax(1.0, best.value)) {
            best = Best{p, v, std::move(s), true};
        }
        return v;
    };

    const int kGrid = 48;
    std::vector<double> vals(kGrid + 1, -1.0);
    int j_best = -1;
    for (int j = 1; j <= kGrid; ++j) {
        const double p = p_th * static_cast<double>(j) / kGrid;
        vals[j] = value_at(p);
        if (vals[j] >= 0.0 && (j_best < 0 || vals[j] > vals[j_best])) j_best = j;
    }
    if (j_best < 0) throw InfeasibleTarget("solve_partial_csit: no feasible transmit power");

    double lo = p_th * static_cast<double>(std::max(j_best - 1, 0)) / kGrid;
    double hi = p_th * static_cast<double>(std::min(j_best + 1, kGrid)) / kGrid;
    if (!(lo > 0.0)) lo = p_th * 0.5 / kGrid;

    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double v1 = value_at(x1);
    double v2 = value_at(x2);
    while (hi - lo > 1e-4 * p_th) {
        if (v1 < v2) {
            lo = x1;
            x1 = x2;
            v1 = v2;
            x2 = lo + gr * (hi - lo);
            v2 = value_at(x2);
        } else {
            hi = x2;
            x2 = x1;
            v2 = v1;
            x1 = hi - gr * (hi - lo);
            v1 = value_at(x1);
        }
    }

    PartialCsitSolution out;
    out.p_star = best.p;
    out.solution = std::move(best.sol);
    return out;
}

}  // namespace swipt
