#pragma once

// Benchmark transmission schemes the main solvers are compared against.
// Receiver-side schemes keep the transmit power fixed: one tunes a
// continuous split assuming the harvester were linear, the other restricts
// each block to all-decoding or all-harvesting. Transmitter-side schemes
// adapt power across blocks: one allocates jointly under the linear
// harvester assumption, the other is the exact optimum within the
// binary-split restriction. Schemes tuned under the linear model are always
// re-scored under the nonlinear harvester (achieved_q); achieved_q_model
// keeps the value their own tuning model believes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swipt/csi.hpp"
#include "swipt/csir.hpp"

namespace swipt {

enum class BaselineKind {
    linear_dps_csir,
    mode_switch_csir,
    linear_dps_csi,
    binary_restricted_csi,
};

struct BaselineSolution {
    BaselineKind kind = BaselineKind::linear_dps_csir;
    std::vector<double> rho;  // leading-component policy
    std::vector<double> p;
    double lambda = 0.0;  // energy multiplier in the scheme's own tuning convention
    double mu = 0.0;      // bits-rate power multiplier (0 for receiver-side schemes)
    double achieved_rate = 0.0;
    double achieved_q = 0.0;        // energy under the nonlinear harvester
    double achieved_q_model = 0.0;  // energy under the scheme's own tuning model
    double achieved_p_avg = 0.0;
    int iterations = 0;
    std::optional<TimeShare> time_share;    // receiver-side schemes
    std::vector<DualComponent> components;  // transmitter-side schemes
    double chi_lo = 0.0, chi_hi = 0.0;      // mode-switch harvest band over the ensemble
};

// Continuous split at fixed transmit power, tuned as if Q were linear in the
// harvested power: the split follows a water-filling-like rule
// rho = max(0, 1 - c/(h p)) and c is bisected until the linear-model energy
// meets the target. The deployed policy is then re-scored nonlinearly.
inline BaselineSolution linear_dps_csir(const FadingEnsemble& ens, double q_target,
                                        const NonlinearEhParams& eh, const SystemParams& sys,
                                        const SolveOptions& opt = {}) {
    const std::vector<double>& h = ens.gains;
    if (h.empty()) throw std::invalid_argument("gain ensemble: empty");
    const double n = static_cast<double>(h.size());
    const double p = sys.p_fixed;

    BaselineSolution out;
    out.kind = BaselineKind::linear_dps_csir;
    out.p.assign(h.size(), p);
    out.achieved_p_avg = p;

    auto rho_at = [&](double hp, double c) {
        if (!(hp > 0.0)) return 0.0;
        return std::clamp(1.0 - c / hp, 0.0, 1.0);
    };
    auto model_q = [&](double c) {
        double sum = 0.0;
        for (double g : h) sum += q_linear(g, p, rho_at(g * p, c), sys.zeta, eh.t_block);
        return sum / n;
    };

    const double cap = model_q(0.0);
    if (q_target > cap * (1.0 + 1e-9) + 1e-300)
        throw InfeasibleTarget("linear split: q_target above the linear-model ceiling");
    const double q_eff = std::min(q_target, cap);
    const double accept = opt.tol * std::fmax(cap, 1e-300);

    double c_fin = 0.0;
    int evals = 1;
    if (q_eff <= accept) {
        c_fin = std::numeric_limits<double>::infinity();  // harvest nothing
    } else if (cap - q_eff > accept) {
        double c_lo = 0.0;
        double c_hi = 0.0;
        for (double g : h) c_hi = std::fmax(c_hi, g * p);
        double q_mid = 0.0;
        for (int i = 0; i < 200; ++i) {
            c_fin = 0.5 * (c_lo + c_hi);
            q_mid = model_q(c_fin);
            ++evals;
            if (std::abs(q_mid - q_eff) <= accept) break;
            if (q_mid > q_eff)
                c_lo = c_fin;
            else
                c_hi = c_fin;
            if (c_hi - c_lo <= 1e-16 * std::fmax(c_hi, 1.0)) break;
        }
    }

    out.rho.resize(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) out.rho[k] = rho_at(h[k] * p, c_fin);
    double rate_sum = 0.0, q_sum = 0.0, ql_sum = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        rate_sum += rate(h[k], p, out.rho[k], sys);
        q_sum += q_nonlinear(h[k], p, out.rho[k], eh);
        ql_sum += q_linear(h[k], p, out.rho[k], sys.zeta, eh.t_block);
    }
    out.achieved_rate = rate_sum / n;
    out.achieved_q = q_sum / n;
    out.achieved_q_model = ql_sum / n;
    out.lambda = std::isfinite(c_fin) ? 1.0 / (sys.zeta * (c_fin + sys.sigma2)) : 0.0;
    out.iterations = evals;
    return out;
}

namespace detail {

struct HarvestBand {
    double lo = 0.0, hi = 0.0;
    bool empty = true;

    bool contains(double g) const { return !empty && g > lo && g < hi; }
};

// Hull of the superlevel set {x : margin(x) > 0} over (0, x_hi], with open
// ends when the margin is still positive at a scan edge.
template <class Margin>
HarvestBand harvest_band(Margin&& margin, double x_hi) {
    const double x_lo = x_hi * 1e-9;
    const std::vector<double> roots = scan_roots(margin, x_lo, x_hi, 256);
    HarvestBand band;
    const bool pos_lo = margin(x_lo) > 0.0;
    const bool pos_hi = margin(x_hi) > 0.0;
    if (roots.empty()) {
        if (pos_lo && pos_hi) band = {0.0, std::numeric_limits<double>::infinity(), false};
        return band;
    }
    band.empty = false;
    band.lo = pos_lo ? 0.0 : roots.front();
    band.hi = pos_hi ? std::numeric_limits<double>::infinity() : roots.back();
    return band;
}

}  // namespace detail

// Gain band inside which harvesting a whole block beats decoding it, at a
// given bits-rate energy multiplier: the outermost pair of roots of
// lambda * Q(x, rho=1) = R(x, rho=0) over (0, h_hi]. Throws NoRootPair when
// the equation has fewer than two roots there.
inline std::pair<double, double> mode_switch_thresholds(double lambda, const NonlinearEhParams& eh,
                                                        const SystemParams& sys, double h_hi) {
    if (!(lambda > 0.0) || !(h_hi > 0.0))
        throw std::domain_error("mode_switch_thresholds: lambda and h_hi must be positive");
    auto margin = [&](double g) {
        return lambda * q_nonlinear(g, sys.p_fixed, 1.0, eh) - rate(g, sys.p_fixed, 0.0, sys);
    };
    const std::vector<double> roots = detail::scan_roots(margin, h_hi * 1e-9, h_hi, 256);
    if (roots.size() < 2) throw NoRootPair("mode_switch_thresholds: no harvest band");
    return {roots.front(), roots.back()};
}

// Per-block mode switching at fixed transmit power: a block is harvested
// whole when its gain falls inside the band where the priced energy beats
// the block's rate, decoded whole otherwise. The multiplier is bisected
// until the average energy meets the target; when the target falls across a
// band-boundary jump, the entering states are flipped one at a time and the
// marginal block time-shares.
inline BaselineSolution mode_switch_csir(const FadingEnsemble& ens, double q_target,
                                         const NonlinearEhParams& eh, const SystemParams& sys,
                                         const SolveOptions& opt = {}) {
    const std::vector<double>& h = ens.gains;
    if (h.empty()) throw std::invalid_argument("gain ensemble: empty");
    const double n = static_cast<double>(h.size());
    const double p = sys.p_fixed;

    BaselineSolution out;
    out.kind = BaselineKind::mode_switch_csir;
    out.p.assign(h.size(), p);
    out.achieved_p_avg = p;
    out.rho.assign(h.size(), 0.0);

    std::vector<double> q1(h.size()), r0(h.size());
    double cap = 0.0, h_top = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        q1[k] = q_nonlinear(h[k], p, 1.0, eh);
        r0[k] = rate(h[k], p, 0.0, sys);
        cap += q1[k];
        h_top = std::fmax(h_top, h[k]);
    }
    cap /= n;
    if (q_target > cap * (1.0 + 1e-9) + 1e-300)
        throw InfeasibleTarget("mode switching: q_target above the all-harvesting ceiling");
    const double q_eff = std::min(q_target, cap);
    const double accept = opt.tol * std::fmax(cap, 1e-300);

    int evals = 0;
    auto band_at = [&](double lambda) {
        auto margin = [&, lambda](double x) {
            return lambda * q_nonlinear(x, p, 1.0, eh) - rate(x, p, 0.0, sys);
        };
        double hi = 4.0 * h_top;
        for (int i = 0; i < 40 && margin(hi) > 0.0; ++i) hi *= 4.0;
        return detail::harvest_band(margin, hi);
    };
    auto mean_q = [&](const detail::HarvestBand& band) {
        ++evals;
        double sum = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k)
            if (band.contains(h[k])) sum += q1[k];
        return sum / n;
    };
    auto finish = [&](double lambda, const detail::HarvestBand& band) {
        double rate_sum = 0.0, q_sum = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k) {
            if (band.contains(h[k])) {
                out.rho[k] = 1.0;
                q_sum += q1[k];
            } else {
                rate_sum += r0[k];
            }
        }
        out.lambda = lambda;
        out.achieved_rate = rate_sum / n;
        out.achieved_q = q_sum / n;
        out.achieved_q_model = out.achieved_q;
        out.chi_lo = band.empty ? 0.0 : band.lo;
        out.chi_hi = band.empty ? 0.0 : band.hi;
        out.iterations = evals;
    };

    if (q_eff <= accept) {
        finish(0.0, detail::HarvestBand{});
        return out;
    }

    double lam_lo = 0.0, q_lo = 0.0;
    detail::HarvestBand band_lo;
    double lam_hi = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k)
        if (q1[k] > 0.0) lam_hi = std::fmax(lam_hi, r0[k] / q1[k]);
    if (!(lam_hi > 0.0)) lam_hi = 1.0;
    detail::HarvestBand band_hi = band_at(lam_hi);
    double q_hi = mean_q(band_hi);
    for (int i = 0; q_hi < q_eff; ++i) {
        if (i >= 60) throw NonConvergence("mode switching: multiplier expansion failed");
        lam_hi *= 16.0;
        band_hi = band_at(lam_hi);
        q_hi = mean_q(band_hi);
    }

    while (lam_hi - lam_lo > 1e-14 * lam_hi) {
        const double mid = lam_lo > 0.0 ? std::sqrt(lam_lo * lam_hi) : 0.5 * (lam_lo + lam_hi);
        if (!(mid > lam_lo && mid < lam_hi)) break;
        const detail::HarvestBand bm = band_at(mid);
        const double qm = mean_q(bm);
        if (std::abs(qm - q_eff) <= accept) {
            finish(mid, bm);
            return out;
        }
        if (qm < q_eff) {
            lam_lo = mid;
            band_lo = bm;
            q_lo = qm;
        } else {
            lam_hi = mid;
            band_hi = bm;
            q_hi = qm;
        }
    }

    // The target sits across a band-boundary jump: start from the inner
    // policy and flip the states the wider band adds, one at a time.
    finish(lam_hi, band_lo);
    double cum = q_lo;
    double rate_sum = out.achieved_rate * n;
    for (std::size_t k = 0; k < h.size(); ++k) {
        if (band_lo.contains(h[k]) || !band_hi.contains(h[k]) || q1[k] <= 0.0) continue;
        const double dq = q1[k] / n;
        if (cum + dq <= q_eff * (1.0 + 1e-15)) {
            out.rho[k] = 1.0;
            cum += dq;
            rate_sum -= r0[k];
            if (cum >= q_eff * (1.0 - 1e-15)) break;
        } else {
            const double theta = std::clamp((q_eff - cum) / dq, 0.0, 1.0);
            out.time_share = TimeShare{k, 1.0, theta};
            cum = q_eff;
            rate_sum -= theta * r0[k];
            break;
        }
    }
    out.achieved_q = cum;
    out.achieved_q_model = cum;
    out.achieved_rate = rate_sum / n;
    out.chi_lo = band_hi.empty ? 0.0 : band_hi.lo;
    out.chi_hi = band_hi.empty ? 0.0 : band_hi.hi;
    out.iterations = evals;
    return out;
}

namespace detail {

struct NestedOut {
    std::vector<DualComponent> components;  // at least one entry
    CsiAgg achieved;
    double lambda = 0.0, mu = 0.0;  // leading component
    CsiAgg lead;
    int evals = 0;
    double gap_bound = 0.0;
    double q_cap = 0.0;
};

// Nested dual tuning shared by the transmitter-side benchmark schemes:
// eval(lambda, mu) -> averages of whatever per-state rule the scheme uses,
// with its own notion of tracked energy. Inner bisection meets the power
// budget, outer bisection the energy target; jumps are handled by mixing.
template <class EvalFn>
NestedOut nested_duals(EvalFn&& f, double q_target, double p_avg, const SolveOptions& opt,
                       const char* who) {
    const int max_outer = opt.max_outer > 0 ? opt.max_outer : 500;
    NestedOut out;
    int outer = 0;
    auto inner = [&](double lambda, MuHint& hint) {
        if (++outer > max_outer)
            throw NonConvergence(std::string(who) + ": outer iteration budget");
        auto eval_mu = [&, lambda](double mu) {
            ++out.evals;
            return f(lambda, mu);
        };
        return solve_inner_mu(eval_mu, p_avg, hint);
    };

    MuHint hint_cap;
    out.q_cap = inner(1e14, hint_cap).agg.q;
    if (q_target > out.q_cap * (1.0 + 1e-9) + 1e-300)
        throw InfeasibleTarget(std::string(who) + ": q_target above the scheme's ceiling");
    const double q_eff = std::min(q_target, out.q_cap);
    const double accept = opt.tol * std::fmax(out.q_cap, 1e-300);

    const double lam_floor = 1e-12;
    MuHint hint;
    InnerResult in_a = inner(lam_floor, hint);
    double lam_a = lam_floor;
    if (q_eff <= in_a.agg.q + accept) {
        out.achieved = in_a.agg;
        append_components(out.components, lam_floor, in_a, 1.0);
    } else {
        double lam_b = 1e-9;
        InnerResult in_b = inner(lam_b, hint);
        while (in_b.agg.q < q_eff) {
            lam_b *= 64.0;
            if (lam_b > 1e18)
                throw NonConvergence(std::string(who) + ": energy multiplier expansion failed");
            in_b = inner(lam_b, hint);
        }
        InnerResult in_fin = in_b;
        double lam_fin = lam_b;
        bool pure = std::abs(in_b.agg.q - q_eff) <= accept && !in_b.mixed;
        while (!pure && lam_b - lam_a > 1e-14 * lam_b) {
            const double mid = std::sqrt(lam_a * lam_b);
            if (!(mid > lam_a && mid < lam_b)) break;
            const InnerResult im = inner(mid, hint);
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
            const double theta_b =
                dq > 0.0 ? std::clamp((q_eff - in_a.agg.q) / dq, 0.0, 1.0) : 1.0;
            out.achieved.rate = theta_b * in_b.agg.rate + (1.0 - theta_b) * in_a.agg.rate;
            out.achieved.q = theta_b * in_b.agg.q + (1.0 - theta_b) * in_a.agg.q;
            out.achieved.p = theta_b * in_b.agg.p + (1.0 - theta_b) * in_a.agg.p;
            append_components(out.components, lam_b, in_b, theta_b);
            append_components(out.components, lam_a, in_a, 1.0 - theta_b);
        } else {
            out.achieved = in_fin.agg;
            append_components(out.components, lam_fin, in_fin, 1.0);
        }
    }

    std::sort(out.components.begin(), out.components.end(),
              [](const DualComponent& x, const DualComponent& y) { return x.weight > y.weight; });
    out.lambda = out.components.front().lambda;
    out.mu = out.components.front().mu;
    out.lead = f(out.lambda, out.mu);
    const double dual_val = out.lead.rate + out.lambda * out.lead.q - out.mu * out.lead.p;
    const double primal_val =
        out.achieved.rate + out.lambda * out.achieved.q - out.mu * out.achieved.p;
    out.gap_bound = dual_val - primal_val;
    return out;
}

// Per-state allocation of the linear-model joint scheme at bits duals: below
// the gain threshold mu/(lambda zeta T) the block is decode-only at the
// water-filling power; above it the block spends the whole per-block budget,
// with the decoder share set by the harvesting price.
inline PowerSplit linear_csi_state(double h, double lambda, double mu, const NonlinearEhParams& eh,
                                   const SystemParams& sys) {
    if (!(h > 0.0)) return {};
    const double mu_n = mu * kLn2;
    const double price = lambda * kLn2 * sys.zeta * eh.t_block * h;
    if (price <= mu_n) {
        const double d = std::clamp(1.0 / mu_n - sys.sigma2 / h, 0.0, sys.p_max);
        return {d, 0.0};
    }
    const double d = std::clamp(1.0 / price - sys.sigma2 / h, 0.0, sys.p_max);
    return {d, sys.p_max - d};
}

}  // namespace detail

// Joint power allocation and splitting tuned as if the harvester were
// linear: nested duals meet the power budget and the linear-model energy
// target, then the deployed policy is re-scored under the nonlinear model.
inline BaselineSolution linear_dps_csi(const FadingEnsemble& ens, double q_target,
                                       const NonlinearEhParams& eh, const SystemParams& sys,
                                       const SolveOptions& opt = {}) {
    const std::vector<double>& h = ens.gains;
    if (h.empty()) throw std::invalid_argument("gain ensemble: empty");
    const double n = static_cast<double>(h.size());

    auto eval = [&](double lambda, double mu) {
        detail::CsiAgg agg;
        for (double g : h) {
            const PowerSplit ps = detail::linear_csi_state(g, lambda, mu, eh, sys);
            agg.rate += std::log1p(g * ps.p_id / sys.sigma2);
            agg.q += sys.zeta * eh.t_block * g * ps.p_eh;
            agg.p += ps.total();
        }
        agg.rate /= n * kLn2;
        agg.q /= n;
        agg.p /= n;
        return agg;
    };
    detail::NestedOut nd = detail::nested_duals(eval, q_target, sys.p_avg, opt, "linear split");

    BaselineSolution out;
    out.kind = BaselineKind::linear_dps_csi;
    out.lambda = nd.lambda;
    out.mu = nd.mu;
    out.achieved_rate = nd.achieved.rate;
    out.achieved_q_model = nd.achieved.q;
    out.achieved_p_avg = nd.achieved.p;
    out.iterations = nd.evals;
    out.components = std::move(nd.components);

    // Nonlinear re-score, mixing across the dual components.
    double q_nl = 0.0;
    for (const DualComponent& c : out.components) {
        double sum = 0.0;
        for (double g : h)
            sum += q_nonlinear_received(
                g * detail::linear_csi_state(g, c.lambda, c.mu, eh, sys).p_eh, eh);
        q_nl += c.weight * sum / n;
    }
    out.achieved_q = q_nl;

    out.rho.resize(h.size());
    out.p.resize(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        const PowerSplit ps = detail::linear_csi_state(h[k], out.lambda, out.mu, eh, sys);
        out.rho[k] = ps.rho();
        out.p[k] = ps.total();
    }
    if (out.components.size() == 1) out.components.clear();
    return out;
}

// Exact optimum within the binary-split restriction (every block is decoded
// whole or harvested whole, transmit power free up to the per-block cap):
// per-state the two branch values are compared at their own best powers, and
// nested duals meet both average constraints. Energy is nonlinear-native.
inline BaselineSolution binary_restricted_csi(const FadingEnsemble& ens, double q_target,
                                              const NonlinearEhParams& eh, const SystemParams& sys,
                                              const SolveOptions& opt = {}) {
    const std::vector<double>& h = ens.gains;
    if (h.empty()) throw std::invalid_argument("gain ensemble: empty");
    const double n = static_cast<double>(h.size());

    auto state = [&](double g, double lambda, double mu) -> PowerSplit {
        if (!(g > 0.0)) return {};
        const double mu_n = mu * kLn2;
        const double lam_n = lambda * kLn2;
        const double d = g > mu_n * sys.sigma2
                             ? std::clamp(1.0 / mu_n - sys.sigma2 / g, 0.0, sys.p_max)
                             : 0.0;
        const double v0 = std::log1p(g * d / sys.sigma2) - mu_n * d;
        const double e = p_eh_case_a(g, lambda, mu, 0.0, sys.p_max, eh);
        const double v1 = lam_n * q_nonlinear_received(g * e, eh) - mu_n * e;
        if (detail::strictly_better(v1, v0)) return {0.0, e};
        return {d, 0.0};
    };
    auto eval = [&](double lambda, double mu) {
        detail::CsiAgg agg;
        for (double g : h) {
            const PowerSplit ps = state(g, lambda, mu);
            agg.rate += std::log1p(g * ps.p_id / sys.sigma2);
            agg.q += q_nonlinear_received(g * ps.p_eh, eh);
            agg.p += ps.total();
        }
        agg.rate /= n * kLn2;
        agg.q /= n;
        agg.p /= n;
        return agg;
    };
    detail::NestedOut nd = detail::nested_duals(eval, q_target, sys.p_avg, opt, "binary split");

    BaselineSolution out;
    out.kind = BaselineKind::binary_restricted_csi;
    out.lambda = nd.lambda;
    out.mu = nd.mu;
    out.achieved_rate = nd.achieved.rate;
    out.achieved_q = nd.achieved.q;
    out.achieved_q_model = nd.achieved.q;
    out.achieved_p_avg = nd.achieved.p;
    out.iterations = nd.evals;
    out.components = std::move(nd.components);
    out.rho.resize(h.size());
    out.p.resize(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        const PowerSplit ps = state(h[k], out.lambda, out.mu);
        out.rho[k] = ps.rho();
        out.p[k] = ps.total();
    }
    if (out.components.size() == 1) out.components.clear();
    return out;
}

}  // namespace swipt
