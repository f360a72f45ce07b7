#pragma once

// Joint power-allocation and power-splitting policies when the transmitter
// also tracks the channel: each block picks a transmit power p(h) <= p_max
// and a split, subject to an average-power budget E[p] = p_avg and an
// average-energy target E[Q] = q_target. Internally every block's split is a
// corner: p_id feeds the decoder and p_eh the harvester (received splitting
// and transmit splitting describe the same set of operating points).
//
// Per-state structure: given duals (lambda, mu) of the bits-rate Lagrangian
//   R(p_id) + lambda Q(p_eh) - mu (p_id + p_eh),
// the decoder side alone wants the water-filling power; the state then either
// keeps that water level and adds harvesting power on top, up to p_max
// (candidate A, where the rate term does not move), or spends the whole
// budget p_max and trades the two branches directly (candidate B). The
// decision tables below resolve each candidate's inner maximization; the
// better Lagrangian value wins.
//
// Multiplier conventions mirror csir.hpp: public entry points take bits-rate
// duals. water_fill_id and the candidate-B "optimal" table are stated for the
// natural-log Lagrangian and take that form's own multipliers; candidate A is
// invariant to a common rescaling of (lambda, mu); the candidate-B
// closed-form table is bits-native.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "swipt/csir.hpp"

namespace swipt {

enum class CsiMode { optimal, suboptimal, longterm_only };

struct PowerSplit {
    double p_id = 0.0;
    double p_eh = 0.0;

    double total() const { return p_id + p_eh; }
    double rho() const {
        const double t = total();
        return t > 0.0 ? p_eh / t : 0.0;
    }
};

// One vertex of a randomized dual solution; the policy at each vertex is the
// deterministic per-state rule at (lambda, mu).
struct DualComponent {
    double weight = 1.0;
    double lambda = 0.0;
    double mu = 0.0;
};

struct CsiSolution {
    std::vector<double> p;    // per-state transmit power of the leading component
    std::vector<double> rho;  // per-state split of the leading component
    double lambda = 0.0;      // bits-rate energy multiplier of the leading component
    double mu = 0.0;          // bits-rate power multiplier of the leading component
    double achieved_rate = 0.0;  // averages over the full randomization
    double achieved_q = 0.0;
    double achieved_p_avg = 0.0;
    CsiMode mode = CsiMode::optimal;
    int iterations = 0;
    double gap_bound = 0.0;
    std::vector<DualComponent> components;  // empty when the solution is one pure policy
};

// Water-filling power for the decoder branch once p_eh is fixed; mu is the
// natural-log power multiplier.
inline double water_fill_id(double h, double mu, double p_eh, const SystemParams& sys) {
    if (!(mu > 0.0)) throw std::domain_error("water_fill_id: mu must be positive");
    if (!(h > 0.0) || h <= mu * sys.sigma2) return 0.0;
    return std::min(1.0 / mu - sys.sigma2 / h, sys.p_max - p_eh);
}

// Candidate A inner maximization: argmax over x in [p_low, p_up] of
// lambda Q(x) - mu x. The stationarity threshold mu Z(h) is constant in x, so
// the five rows compare it against the logistic flank at the two endpoints;
// interior solutions come from the logistic inverse closed form. Only the
// ratio of the multipliers and lambda's pairing with Q matter.
inline double p_eh_case_a(double h, double lambda, double mu, double p_low, double p_up,
                          const NonlinearEhParams& eh) {
    if (!(lambda > 0.0) || !(mu > 0.0))
        throw std::domain_error("p_eh_case_a: multipliers must be positive");
    if (!(p_low >= 0.0) || !(p_up >= p_low))
        throw std::domain_error("p_eh_case_a: need 0 <= p_low <= p_up");
    if (!(h > 0.0) || p_up == p_low) return p_low;

    const double muz = mu * csi_z(h, eh);
    const double f_lo = lambda * csi_f_at(h, p_low, eh);
    const double f_up = lambda * csi_f_at(h, p_up, eh);

    auto value = [&](double x) { return lambda * q_nonlinear_received(h * x, eh) - mu * x; };
    auto interior = [&]() {
        const double eps = muz / lambda;
        if (!(eps > 0.0 && eps <= 0.25))
            throw std::domain_error("p_eh_case_a: interior form outside its domain");
        return detail::logistic_upper_preimage(eps, eh.a, eh.b) / h;
    };

    if (muz >= 0.25 * lambda) return p_low;  // A.1
    if (muz > std::max(f_up, f_lo)) {        // A.2: interior point must beat p_low
        const double x = interior();
        if (!(x > p_low && x < p_up)) return p_low;
        return detail::strictly_better(value(x), value(p_low)) ? x : p_low;
    }
    if (f_lo <= muz && muz <= f_up) {  // A.3: endpoint comparison
        return detail::strictly_better(value(p_up), value(p_low)) ? p_up : p_low;
    }
    if (f_up <= muz && muz <= f_lo) {  // A.4: interior point
        const double x = interior();
        if (x > p_low && x < p_up) return x;
        return detail::strictly_better(value(p_up), value(p_low)) ? p_up : p_low;
    }
    if (muz <= std::min(f_up, f_lo)) return p_up;  // A.5
    // NaN-poisoned comparisons only; fall back to direct candidate comparison.
    const double x = interior();
    double best = p_low;
    if (x > p_low && x < p_up && detail::strictly_better(value(x), value(best))) best = x;
    if (detail::strictly_better(value(p_up), value(best))) best = p_up;
    return best;
}

namespace detail {

// Direct candidate comparison over derivative sign changes; the safety net
// for degenerate candidate-B brackets.
template <class Value, class Balance>
double scan_best(double p_low, double p_up, Value&& value, Balance&& balance) {
    std::vector<double> cands = scan_roots(balance, p_low, p_up, 48);
    double best = p_low;
    double best_val = value(p_low);
    cands.push_back(p_up);
    for (double x : cands) {
        const double v = value(x);
        if (strictly_better(v, best_val)) {
            best_val = v;
            best = x;
        }
    }
    return best;
}

// Candidate B inner maximization, exact variant: argmax over x in
// [p_low, p_up] of ln(1 + h (p_up - x)/sigma2) + lambda Q(x); lambda is the
// natural-log multiplier. Table rows compare the logistic flank against the
// rate slope scale at the endpoints; interior roots live on the bracket
// (max(b/h, p_low), p_up), found like rho_opt_root.
inline double p_eh_case_b_optimal(double h, double lambda, double p_low, double p_up,
                                  const NonlinearEhParams& eh, const SystemParams& sys) {
    const double scale = eh.p_s * eh.t_block * eh.a;
    auto rhs = [&](double x) {
        return (1.0 - eh.omega) / (scale * (h * (p_up - x) + sys.sigma2));
    };
    auto value = [&](double x) {
        return std::log1p(h * (p_up - x) / sys.sigma2) + lambda * q_nonlinear_received(h * x, eh);
    };
    auto balance = [&](double x) {
        return lambda * sigmoid_slope(eh.a * (h * x - eh.b)) - rhs(x);
    };

    const double gam =
        (1.0 - eh.omega) / (scale * (std::fmax(h * p_up - eh.b, 0.0) + sys.sigma2));
    if (gam >= 0.25 * lambda) return p_low;  // B.1
    const double g_lo = rhs(p_low);
    const double g_up = rhs(p_up);
    const double f_lo = lambda * csi_f_at(h, p_low, eh);
    const double f_up = lambda * csi_f_at(h, p_up, eh);
    const bool flat_at_low = f_lo <= g_lo;
    const bool falling_at_up = f_up < g_up;

    if (flat_at_low && !falling_at_up) {  // B.3
        return strictly_better(value(p_up), value(p_low)) ? p_up : p_low;
    }
    if (!flat_at_low && !falling_at_up) return p_up;  // B.5

    // B.2 (flat_at_low) or B.4: interior root on the falling logistic flank.
    const double lo = std::fmax(eh.b / h, p_low);
    if (!(lo < p_up)) {
        // The flank never turns over inside the interval.
        if (flat_at_low) return p_low;  // B.2 with the interior candidate absent
        return scan_best(p_low, p_up, value, balance);
    }
    const double flo_val = balance(lo);
    const double fup_val = balance(p_up);
    double x;
    if (flo_val > 0.0 && fup_val < 0.0) {
        // Fixed point through the logistic inverse, bisection as fallback.
        x = 0.5 * (lo + p_up);
        bool converged = false;
        for (int i = 0; i < 40; ++i) {
            const double eps = rhs(x) / lambda;
            if (!(eps > 0.0 && eps < 0.25)) break;
            const double next = logistic_upper_preimage(eps, eh.a, eh.b) / h;
            if (!(next > lo && next < p_up)) break;
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
            const double a0 = lo + 1e-12 * (p_up - lo);
            const double fa = balance(a0);
            if ((fa > 0.0) != (fup_val > 0.0)) {
                x = bisect(balance, a0, p_up, fa, fup_val);
            } else {
                return scan_best(p_low, p_up, value, balance);
            }
            if (!(std::abs(balance(x)) <= 1e-10 * resid_scale))
                throw NonConvergence("p_eh_case_b: residual above tolerance");
        }
    } else if (flat_at_low) {
        return p_low;  // B.2 with no falling-flank crossing
    } else {
        return scan_best(p_low, p_up, value, balance);  // defensive for B.4
    }
    if (flat_at_low) {  // B.2: the interior point must beat p_low
        return strictly_better(value(x), value(p_low)) ? x : p_low;
    }
    return x;  // B.4
}

// Candidate B inner maximization, closed-form variant: the rate curve is
// replaced by its chord (1 - x/p_up) R(p_up), making the stationarity
// threshold constant in x; lambda is the bits multiplier and the endpoint
// comparisons use the true bits rate of the subproblem.
inline double p_eh_case_b_suboptimal(double h, double lambda, double p_low, double p_up,
                                     const NonlinearEhParams& eh, const SystemParams& sys) {
    const double hpu = h * p_up;
    const double zp = (1.0 - eh.omega) * std::log1p(hpu / sys.sigma2) /
                      (kLn2 * eh.p_s * eh.t_block * eh.a * hpu);
    auto value = [&](double x) {
        return std::log1p(h * (p_up - x) / sys.sigma2) / kLn2 +
               lambda * q_nonlinear_received(h * x, eh);
    };
    auto closed_form = [&]() { return logistic_upper_preimage(zp / lambda, eh.a, eh.b) / h; };

    if (zp >= 0.25 * lambda) return p_low;  // B.1'
    const double f_lo = lambda * csi_f_at(h, p_low, eh);
    const double f_up = lambda * csi_f_at(h, p_up, eh);
    if (f_lo <= zp && zp <= f_up) {  // B.3'
        return strictly_better(value(p_up), value(p_low)) ? p_up : p_low;
    }
    if (f_up < zp && zp < f_lo) {  // B.4'
        const double x = closed_form();
        if (x > p_low && x < p_up) return x;
        return strictly_better(value(p_up), value(p_low)) ? p_up : p_low;
    }
    if (zp <= std::min(f_up, f_lo)) return p_up;  // B.5'
    // B.2' (zp above both flank values) plus boundary ties falling through.
    if (!(hpu > eh.b)) return p_low;  // flank never turns over inside the interval
    const double x = closed_form();
    if (!(x > p_low && x < p_up)) return p_low;
    return strictly_better(value(x), value(p_low)) ? x : p_low;
}

// Harvesting power of the average-power-only rule (no per-block cap): the
// unconstrained argmax of lambda Q(x) - mu x over x >= 0. Thresholds are the
// gains where mu Z(h) crosses lambda/4 (a turn-over exists at all) and
// lambda omega (1 - omega) (the interior point dominates x = 0 outright);
// between them the two candidates are compared directly. Scale-invariant in
// (lambda, mu).
inline double longterm_eh_power(double h, double lambda, double mu, const NonlinearEhParams& eh) {
    if (!(h > 0.0)) return 0.0;
    const double denom = eh.p_s * eh.t_block * eh.a;
    const double x1 = 4.0 * mu * (1.0 - eh.omega) / (lambda * denom);
    if (!(h > x1)) return 0.0;
    const double x2 = mu / (lambda * eh.omega * denom);
    const double eps = mu * csi_z(h, eh) / lambda;
    const double x = logistic_upper_preimage(eps, eh.a, eh.b) / h;
    if (h >= x2) return x;
    const double gain = lambda * q_nonlinear_received(h * x, eh) - mu * x;
    return strictly_better(gain, 0.0) ? x : 0.0;
}

}  // namespace detail

// Candidate B inner maximization; variant selects the exact rule (natural-log
// lambda) or the closed-form rule (bits lambda).
inline double p_eh_case_b(double h, double lambda, double p_low, double p_up,
                          const NonlinearEhParams& eh, const SystemParams& sys, CsiMode variant) {
    if (!(lambda > 0.0)) throw std::domain_error("p_eh_case_b: lambda must be positive");
    if (!(p_low >= 0.0) || !(p_up >= p_low))
        throw std::domain_error("p_eh_case_b: need 0 <= p_low <= p_up");
    if (!(h > 0.0) || p_up == p_low) return p_low;
    switch (variant) {
        case CsiMode::optimal:
            return detail::p_eh_case_b_optimal(h, lambda, p_low, p_up, eh, sys);
        case CsiMode::suboptimal:
            return detail::p_eh_case_b_suboptimal(h, lambda, p_low, p_up, eh, sys);
        default:
            throw std::invalid_argument("p_eh_case_b: variant must be optimal or suboptimal");
    }
}

// Per-state allocation at bits-rate duals (lambda, mu).
inline PowerSplit solve_state_csi(double h, double lambda, double mu, CsiMode mode,
                                  const NonlinearEhParams& eh, const SystemParams& sys) {
    if (!(lambda > 0.0) || !(mu > 0.0))
        throw std::domain_error("solve_state_csi: duals must be positive");
    if (!(h > 0.0)) return {};
    const double mu_n = mu * kLn2;
    const double lam_n = lambda * kLn2;

    if (mode == CsiMode::longterm_only) {
        PowerSplit out;
        out.p_id = std::fmax(1.0 / mu_n - sys.sigma2 / h, 0.0);
        out.p_eh = detail::longterm_eh_power(h, lambda, mu, eh);
        return out;
    }

    if (h <= mu_n * sys.sigma2) {
        // Water level below the noise floor: the decoder gets nothing and the
        // harvester may use the whole per-block budget.
        return {0.0, p_eh_case_a(h, lambda, mu, 0.0, sys.p_max, eh)};
    }
    const double wf = 1.0 / mu_n - sys.sigma2 / h;
    const double p_th = std::fmax(sys.p_max - wf, 0.0);

    PowerSplit cand_a;
    if (p_th > 0.0) {
        cand_a.p_eh = p_eh_case_a(h, lambda, mu, 0.0, p_th, eh);
        cand_a.p_id = water_fill_id(h, mu_n, cand_a.p_eh, sys);
    } else {
        cand_a.p_id = std::min(wf, sys.p_max);
        cand_a.p_eh = 0.0;
    }

    const double x_b = (mode == CsiMode::optimal)
                           ? p_eh_case_b(h, lam_n, p_th, sys.p_max, eh, sys, CsiMode::optimal)
                           : p_eh_case_b(h, lambda, p_th, sys.p_max, eh, sys, CsiMode::suboptimal);
    const PowerSplit cand_b{sys.p_max - x_b, x_b};

    auto value = [&](const PowerSplit& ps) {
        return std::log1p(h * ps.p_id / sys.sigma2) - mu_n * ps.p_id +
               lam_n * q_nonlinear_received(h * ps.p_eh, eh) - mu_n * ps.p_eh;
    };
    return detail::strictly_better(value(cand_b), value(cand_a)) ? cand_b : cand_a;
}

namespace detail {

struct CsiAgg {
    double rate = 0.0;  // bits
    double q = 0.0;
    double p = 0.0;
};

class CsiProblem {
  public:
    CsiProblem(const FadingEnsemble& ens, const NonlinearEhParams& eh, const SystemParams& sys)
        : eh_(eh), sys_(sys), h_(ens.gains) {
        if (h_.empty()) throw std::invalid_argument("gain ensemble: empty");
        for (double h : h_)
            if (!(h >= 0.0)) throw std::invalid_argument("gain ensemble: negative or NaN gain");
    }

    std::size_t size() const { return h_.size(); }
    const std::vector<double>& gains() const { return h_; }
    const NonlinearEhParams& eh() const { return eh_; }
    const SystemParams& sys() const { return sys_; }

    CsiAgg evaluate(double lambda, double mu, CsiMode mode, std::vector<double>* p_out,
                    std::vector<double>* rho_out) const {
        if (p_out) p_out->resize(h_.size());
        if (rho_out) rho_out->resize(h_.size());
        CsiAgg agg;
        for (std::size_t k = 0; k < h_.size(); ++k) {
            const PowerSplit ps = solve_state_csi(h_[k], lambda, mu, mode, eh_, sys_);
            if (p_out) (*p_out)[k] = ps.total();
            if (rho_out) (*rho_out)[k] = ps.rho();
            agg.rate += std::log1p(h_[k] * ps.p_id / sys_.sigma2);
            agg.q += q_nonlinear_received(h_[k] * ps.p_eh, eh_);
            agg.p += ps.total();
        }
        const double n = static_cast<double>(h_.size());
        agg.rate /= n * kLn2;
        agg.q /= n;
        agg.p /= n;
        return agg;
    }

  private:
    NonlinearEhParams eh_;
    SystemParams sys_;
    std::vector<double> h_;
};

// Inner dual solve: with lambda held fixed, pick mu so the average transmit
// power meets the budget. E[p] is nonincreasing in mu; jumps are handled by
// mixing the two bracketing policies.
struct InnerResult {
    double mu_a = 0.0, mu_b = 0.0;  // mu_a <= mu_b, E[p](mu_a) >= p_avg >= E[p](mu_b)
    double theta = 0.0;             // weight of the mu_a policy when mixed
    CsiAgg agg_a, agg_b;
    CsiAgg agg;  // mixed aggregates
    bool mixed = false;

    double mu() const { return mixed && theta >= 0.5 ? mu_a : mu_b; }
};

struct MuHint {
    double mu_a = 0.0, mu_b = 0.0;
    bool valid = false;
};

// eval(mu) -> CsiAgg; the caller owns the evaluation budget and throws from
// inside eval when it is exhausted.
template <class EvalMu>
inline InnerResult solve_inner_mu(EvalMu&& eval, double p_avg, MuHint& hint) {
    double mu_a = hint.valid ? hint.mu_a * 0.5 : 1e-3;
    double mu_b = hint.valid ? hint.mu_b * 2.0 : 1e3;
    if (!(mu_a > 0.0)) mu_a = 1e-12;
    if (!(mu_b > mu_a)) mu_b = mu_a * 4.0;

    CsiAgg agg_a = eval(mu_a);
    while (agg_a.p < p_avg && mu_a > 1e-17) {
        mu_a = std::fmax(mu_a / 64.0, 1e-18);
        agg_a = eval(mu_a);
    }
    if (agg_a.p < p_avg) {
        // The whole budget cannot be consumed (e.g. zero-gain states); the
        // power constraint goes slack with an effectively zero multiplier.
        InnerResult out;
        out.mu_a = out.mu_b = mu_a;
        out.agg_a = out.agg_b = out.agg = agg_a;
        hint = {mu_a, mu_a * 4.0, true};
        return out;
    }
    CsiAgg agg_b = eval(mu_b);
    while (agg_b.p > p_avg) {
        mu_b *= 64.0;
        if (mu_b > 1e20) throw NonConvergence("find_duals: power multiplier expansion failed");
        agg_b = eval(mu_b);
    }

    const double accept = 1e-9 * p_avg;
    auto pure_result = [&](double mu, const CsiAgg& agg) {
        InnerResult out;
        out.mu_a = out.mu_b = mu;
        out.agg_a = out.agg_b = out.agg = agg;
        hint = {mu_a, mu_b, true};
        return out;
    };
    if (std::abs(agg_a.p - p_avg) <= accept) return pure_result(mu_a, agg_a);
    if (std::abs(agg_b.p - p_avg) <= accept) return pure_result(mu_b, agg_b);
    while (mu_b - mu_a > 1e-14 * mu_b) {
        const double mid = std::sqrt(mu_a * mu_b);
        if (!(mid > mu_a && mid < mu_b)) break;
        const CsiAgg am = eval(mid);
        if (std::abs(am.p - p_avg) <= accept) return pure_result(mid, am);
        if (am.p > p_avg) {
            mu_a = mid;
            agg_a = am;
        } else {
            mu_b = mid;
            agg_b = am;
        }
    }

    InnerResult out;
    out.mu_a = mu_a;
    out.mu_b = mu_b;
    out.agg_a = agg_a;
    out.agg_b = agg_b;
    out.mixed = true;
    const double dp = agg_a.p - agg_b.p;
    out.theta = dp > 0.0 ? std::clamp((p_avg - agg_b.p) / dp, 0.0, 1.0) : 0.0;
    out.agg.rate = out.theta * agg_a.rate + (1.0 - out.theta) * agg_b.rate;
    out.agg.q = out.theta * agg_a.q + (1.0 - out.theta) * agg_b.q;
    out.agg.p = out.theta * agg_a.p + (1.0 - out.theta) * agg_b.p;
    hint = {mu_a, mu_b, true};
    return out;
}

inline void append_components(std::vector<DualComponent>& comps, double lambda,
                              const InnerResult& inner, double weight) {
    if (weight <= 0.0) return;
    if (inner.mixed) {
        if (inner.theta > 0.0) comps.push_back({weight * inner.theta, lambda, inner.mu_a});
        if (inner.theta < 1.0) comps.push_back({weight * (1.0 - inner.theta), lambda, inner.mu_b});
    } else {
        comps.push_back({weight, lambda, inner.mu_a});
    }
}

}  // namespace detail

// Meet E[Q] = q_target and E[p] = p_avg: a short projected-subgradient phase
// scales the duals, then nested bisection (mu inside, lambda outside) locks
// the constraints, randomizing across at most four dual vertices when a
// target falls on a policy jump.
inline CsiSolution find_duals(const FadingEnsemble& ens, double q_target, CsiMode mode,
                              const NonlinearEhParams& eh, const SystemParams& sys,
                              const SolveOptions& opt = {}) {
    detail::CsiProblem prob(ens, eh, sys);
    const int max_outer = opt.max_outer > 0 ? opt.max_outer : 500;
    int evals = 0;
    int outer = 0;

    CsiSolution sol;
    sol.mode = mode;

    auto inner = [&](double lambda, detail::MuHint& hint) {
        if (++outer > max_outer) throw NonConvergence("find_duals: outer iteration budget");
        auto eval_mu = [&prob, &evals, mode, lambda](double mu) {
            ++evals;
            return prob.evaluate(lambda, mu, mode, nullptr, nullptr);
        };
        return detail::solve_inner_mu(eval_mu, prob.sys().p_avg, hint);
    };

    // Feasibility ceiling: all available power to the harvester.
    detail::MuHint hint_cap;
    const double qmax = inner(1e14, hint_cap).agg.q;
    if (q_target > qmax * (1.0 + 1e-9) + 1e-300)
        throw InfeasibleTarget("find_duals: q_target above the all-harvesting ceiling");
    const double q_eff = std::min(q_target, qmax);
    const double accept = opt.tol * std::fmax(qmax, 1e-300);

    const double lam_floor = 1e-12;
    detail::MuHint hint_wf;
    const detail::InnerResult in_wf = inner(lam_floor, hint_wf);

    if (q_eff <= in_wf.agg.q + accept) {
        // Pure water-filling already meets (or exceeds) the target.
        sol.lambda = lam_floor;
        sol.mu = in_wf.mu();
        sol.achieved_rate = in_wf.agg.rate;
        sol.achieved_q = in_wf.agg.q;
        sol.achieved_p_avg = in_wf.agg.p;
        detail::append_components(sol.components, lam_floor, in_wf, 1.0);
        if (sol.components.size() == 1) sol.components.clear();
        prob.evaluate(sol.lambda, sol.mu, mode, &sol.p, &sol.rho);
        sol.iterations = evals;
        sol.gap_bound = sol.lambda * std::fmax(sol.achieved_q - q_eff, 0.0);
        return sol;
    }

    // Subgradient warm-up: scales the duals before bisection takes over.
    double lam_sg = std::fmax(in_wf.agg.rate / std::fmax(qmax, 1e-300), 1e-9);
    double mu_sg = std::fmax(in_wf.mu(), 1e-9);
    {
        detail::CsiAgg ag = prob.evaluate(lam_sg, mu_sg, mode, nullptr, nullptr);
        ++evals;
        const double s0_lam = 0.5 * lam_sg / std::fmax(std::abs(ag.q - q_eff), 1e-300);
        const double s0_mu = 0.5 * mu_sg / std::fmax(std::abs(ag.p - sys.p_avg), 1e-300);
        for (int i = 1; i <= 30 && outer < max_outer; ++i, ++outer) {
            const double step = 1.0 / std::sqrt(static_cast<double>(i));
            lam_sg = std::fmax(lam_sg - s0_lam * step * (ag.q - q_eff), 1e-12);
            mu_sg = std::fmax(mu_sg + s0_mu * step * (ag.p - sys.p_avg), 1e-12);
            ag = prob.evaluate(lam_sg, mu_sg, mode, nullptr, nullptr);
            ++evals;
        }
    }

    // Nested bisection on lambda; E[Q] after the inner solve is nondecreasing.
    detail::MuHint hint;
    double lam_a = lam_sg;
    detail::InnerResult in_a = inner(lam_a, hint);
    while (in_a.agg.q > q_eff && lam_a > 2.0 * lam_floor) {
        lam_a = std::fmax(lam_a / 64.0, lam_floor);
        in_a = inner(lam_a, hint);
    }
    double lam_b = lam_a;
    detail::InnerResult in_b = in_a;
    while (in_b.agg.q < q_eff) {
        lam_b *= 64.0;
        if (lam_b > 1e18) throw NonConvergence("find_duals: energy multiplier expansion failed");
        in_b = inner(lam_b, hint);
    }

    detail::InnerResult in_fin = in_b;
    double lam_fin = lam_b;
    bool pure = std::abs(in_b.agg.q - q_eff) <= accept && !in_b.mixed;
    while (!pure && lam_b - lam_a > 1e-14 * lam_b) {
        const double mid = std::sqrt(lam_a * lam_b);
        if (!(mid > lam_a && mid < lam_b)) break;
        const detail::InnerResult im = inner(mid, hint);
        if (std::abs(im.agg.q - q_eff) <= accept && !im.mixed) {
            in_fin = im;
            lam_fin = mid;
            pure = true;
            break;
        }
        if (im.agg.q < q_eff) {
            lam_a = mid;
            in_a = im;
        } else {
            lam_b = mid;
            in_b = im;
        }
    }

    if (!pure) {
        const double dq = in_b.agg.q - in_a.agg.q;
        const double theta_b = dq > 0.0 ? std::clamp((q_eff - in_a.agg.q) / dq, 0.0, 1.0) : 1.0;
        sol.achieved_rate = theta_b * in_b.agg.rate + (1.0 - theta_b) * in_a.agg.rate;
        sol.achieved_q = theta_b * in_b.agg.q + (1.0 - theta_b) * in_a.agg.q;
        sol.achieved_p_avg = theta_b * in_b.agg.p + (1.0 - theta_b) * in_a.agg.p;
        detail::append_components(sol.components, lam_b, in_b, theta_b);
        detail::append_components(sol.components, lam_a, in_a, 1.0 - theta_b);
    } else {
        sol.achieved_rate = in_fin.agg.rate;
        sol.achieved_q = in_fin.agg.q;
        sol.achieved_p_avg = in_fin.agg.p;
        detail::append_components(sol.components, lam_fin, in_fin, 1.0);
    }

    // Leading component provides the reported duals and policy arrays.
    std::sort(sol.components.begin(), sol.components.end(),
              [](const DualComponent& x, const DualComponent& y) { return x.weight > y.weight; });
    sol.lambda = sol.components.front().lambda;
    sol.mu = sol.components.front().mu;
    if (sol.components.size() == 1) sol.components.clear();
    const detail::CsiAgg lead = prob.evaluate(sol.lambda, sol.mu, mode, &sol.p, &sol.rho);

    // Dual value at the leading duals minus the achieved Lagrangian value;
    // nonnegative and shrinking to bisection accuracy.
    const double dual_val = lead.rate + sol.lambda * lead.q - sol.mu * lead.p;
    const double primal_val =
        sol.achieved_rate + sol.lambda * sol.achieved_q - sol.mu * sol.achieved_p_avg;
    sol.gap_bound = dual_val - primal_val;
    sol.iterations = evals;
    return sol;
}

// Maximize E[Q] subject to E[rate] = rate_target and the power constraints:
// the dual weight on the rate grows until the rate constraint binds. Reported
// duals are normalized back to the bits-rate Lagrangian so per-state
// stationarity checks read the same as for find_duals.
inline CsiSolution solve_energy_max(const FadingEnsemble& ens, double rate_target,
                                    const NonlinearEhParams& eh, const SystemParams& sys,
                                    const SolveOptions& opt = {}) {
    if (!(rate_target >= 0.0))
        throw std::invalid_argument("solve_energy_max: rate_target must be >= 0");
    detail::CsiProblem prob(ens, eh, sys);
    const int max_outer = opt.max_outer > 0 ? opt.max_outer : 500;
    int evals = 0;
    int outer = 0;

    // Outer variable: weight w on the rate inside max E[Q] + w E[rate].
    // Per-state this is the bits Lagrangian with lambda = 1/w, mu = mu'/w.
    auto inner_at = [&](double lambda, detail::MuHint& hint) {
        if (++outer > max_outer)
            throw NonConvergence("solve_energy_max: outer iteration budget");
        auto eval_mu = [&prob, &evals, lambda](double mu) {
            ++evals;
            return prob.evaluate(lambda, mu, CsiMode::optimal, nullptr, nullptr);
        };
        return detail::solve_inner_mu(eval_mu, prob.sys().p_avg, hint);
    };
    detail::MuHint hint;
    auto inner = [&](double w) { return inner_at(1.0 / w, hint); };

    double w_a = 1e-14;
    detail::MuHint hint_floor;
    detail::InnerResult in_a = inner_at(1.0 / w_a, hint_floor);
    const double r_floor = in_a.agg.rate;

    // Rate ceiling: water-filling with a negligible energy weight.
    detail::MuHint hint_cap;
    const double rate_cap = inner_at(1e-12, hint_cap).agg.rate;
    if (rate_target > rate_cap * (1.0 + 1e-9) + 1e-300)
        throw InfeasibleTarget("solve_energy_max: rate_target above the water-filling rate");
    const double r_eff = std::min(rate_target, rate_cap);
    const double accept = opt.tol * std::fmax(rate_cap, 1e-300);

    CsiSolution sol;
    sol.mode = CsiMode::optimal;

    detail::InnerResult in_fin = in_a;
    double w_fin = w_a;
    bool pure = r_eff <= r_floor + accept;  // energy-max endpoint: rate constraint slack
    double w_b = w_a;
    detail::InnerResult in_b = in_a;
    if (!pure) {
        w_b = 1e-6;
        in_b = inner(w_b);
        while (in_b.agg.rate < r_eff) {
            w_b *= 64.0;
            if (w_b > 1e18)
                throw NonConvergence("solve_energy_max: rate weight expansion failed");
            in_b = inner(w_b);
        }
        if (std::abs(in_b.agg.rate - r_eff) <= accept && !in_b.mixed) {
            pure = true;
            in_fin = in_b;
            w_fin = w_b;
        }
    }
    while (!pure && w_b - w_a > 1e-14 * w_b) {
        const double mid = std::sqrt(w_a * w_b);
        if (!(mid > w_a && mid < w_b)) break;
        const detail::InnerResult im = inner(mid);
        if (std::abs(im.agg.rate - r_eff) <= accept && !im.mixed) {
            in_fin = im;
            w_fin = mid;
            pure = true;
            break;
        }
        if (im.agg.rate < r_eff) {
            w_a = mid;
            in_a = im;
        } else {
            w_b = mid;
            in_b = im;
        }
    }

    if (!pure) {
        const double dr = in_b.agg.rate - in_a.agg.rate;
        const double theta_b = dr > 0.0 ? std::clamp((r_eff - in_a.agg.rate) / dr, 0.0, 1.0) : 1.0;
        sol.achieved_rate = theta_b * in_b.agg.rate + (1.0 - theta_b) * in_a.agg.rate;
        sol.achieved_q = theta_b * in_b.agg.q + (1.0 - theta_b) * in_a.agg.q;
        sol.achieved_p_avg = theta_b * in_b.agg.p + (1.0 - theta_b) * in_a.agg.p;
        detail::append_components(sol.components, 1.0 / w_b, in_b, theta_b);
        detail::append_components(sol.components, 1.0 / w_a, in_a, 1.0 - theta_b);
    } else {
        sol.achieved_rate = in_fin.agg.rate;
        sol.achieved_q = in_fin.agg.q;
        sol.achieved_p_avg = in_fin.agg.p;
        detail::append_components(sol.components, 1.0 / w_fin, in_fin, 1.0);
    }

    std::sort(sol.components.begin(), sol.components.end(),
              [](const DualComponent& x, const DualComponent& y) { return x.weight > y.weight; });
    sol.lambda = sol.components.front().lambda;
    sol.mu = sol.components.front().mu;
    if (sol.components.size() == 1) sol.components.clear();
    const detail::CsiAgg lead = prob.evaluate(sol.lambda, sol.mu, CsiMode::optimal, &sol.p, &sol.rho);

    // Gap in energy units: dual of the energy-max form at the leading duals.
    const double w_lead = 1.0 / sol.lambda;
    const double mup_lead = sol.mu / sol.lambda;
    const double dual_val = lead.q + w_lead * lead.rate - mup_lead * lead.p;
    const double primal_val =
        sol.achieved_q + w_lead * sol.achieved_rate - mup_lead * sol.achieved_p_avg;
    sol.gap_bound = dual_val - primal_val;
    sol.iterations = evals;
    return sol;
}

}  // namespace swipt
