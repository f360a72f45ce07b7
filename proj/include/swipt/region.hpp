#pragma once

// Rate-energy region sweeps: a grid of energy targets is solved by the
// chosen scheme and the achieved (rate, energy) pairs are collected, plus
// the exact all-harvesting endpoint. Also houses the energy ceilings the
// grids are built from, the independent brute-force oracle used to verify
// the solvers, and CSV serialization of swept regions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "swipt/baselines.hpp"
#include "swipt/channel.hpp"
#include "swipt/csi.hpp"
#include "swipt/csir.hpp"

namespace swipt {

struct REPoint {
    double rate = 0.0;      // average rate, bits/s/Hz
    double energy = 0.0;    // average harvested energy under the nonlinear model
    double q_target = 0.0;  // requested threshold
};

enum class Scheme {
    csir_optimal,
    csir_suboptimal,
    linear_dps_csir,
    mode_switch_csir,
    csi_optimal,
    csi_suboptimal,
    csi_longterm,
    linear_dps_csi,
    binary_restricted_csi,
};

// Column values used in CSV output and CLI flags: the scheme label and the
// channel-knowledge case it runs under.
inline const char* scheme_label(Scheme s) {
    switch (s) {
        case Scheme::csir_optimal:
        case Scheme::csi_optimal:
            return "optimal";
        case Scheme::csir_suboptimal:
        case Scheme::csi_suboptimal:
            return "suboptimal";
        case Scheme::linear_dps_csir:
        case Scheme::linear_dps_csi:
            return "linear";
        case Scheme::mode_switch_csir:
            return "modeswitch";
        case Scheme::csi_longterm:
            return "longterm";
        case Scheme::binary_restricted_csi:
            return "binary";
    }
    return "?";
}

inline const char* scheme_case(Scheme s) {
    switch (s) {
        case Scheme::csir_optimal:
        case Scheme::csir_suboptimal:
        case Scheme::linear_dps_csir:
        case Scheme::mode_switch_csir:
            return "csir";
        default:
            return "csi";
    }
}

inline Scheme parse_scheme(const std::string& label, const std::string& case_name) {
    const bool csir = case_name == "csir";
    if (!csir && case_name != "csi")
        throw std::invalid_argument("unknown case: " + case_name);
    if (label == "optimal") return csir ? Scheme::csir_optimal : Scheme::csi_optimal;
    if (label == "suboptimal") return csir ? Scheme::csir_suboptimal : Scheme::csi_suboptimal;
    if (label == "linear") return csir ? Scheme::linear_dps_csir : Scheme::linear_dps_csi;
    if (label == "modeswitch" && csir) return Scheme::mode_switch_csir;
    if (label == "longterm" && !csir) return Scheme::csi_longterm;
    if (label == "binary" && !csir) return Scheme::binary_restricted_csi;
    throw std::invalid_argument("unknown scheme: " + label + " (" + case_name + ")");
}

struct SweepIssue {
    double q_target = 0.0;
    std::string what;
};

struct PointDiag {
    double lambda = 0.0;
    double mu = 0.0;
    double gap_bound = 0.0;
    int iterations = 0;
};

struct RERegion {
    Scheme scheme = Scheme::csir_optimal;
    std::string ensemble_meta;
    std::vector<REPoint> points;
    std::vector<PointDiag> diags;  // parallel to points
    std::vector<SweepIssue> issues;
};

// Fixed-power all-harvesting ceiling, summed with compensation so the value
// is reproducible to the last bit at any ensemble size.
inline double q_max_csir(const FadingEnsemble& ens, const NonlinearEhParams& eh,
                         const SystemParams& sys) {
    if (ens.gains.empty()) throw std::invalid_argument("gain ensemble: empty");
    long double sum = 0.0L, comp = 0.0L;
    for (double h : ens.gains) {
        const long double term = static_cast<long double>(q_nonlinear(h, sys.p_fixed, 1.0, eh)) - comp;
        const long double next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }
    return static_cast<double>(sum / static_cast<long double>(ens.gains.size()));
}

namespace detail {

// Budget-constrained all-harvesting ceiling for a per-state allocation rule:
// rule(h, mu) gives the state's power, mu is bisected until the average
// power meets the budget, mixing across a jump if one straddles it.
template <class Rule>
double q_ceiling(const std::vector<double>& h, const NonlinearEhParams& eh, double p_avg,
                 Rule&& rule) {
    const double n = static_cast<double>(h.size());
    auto eval = [&](double mu) {
        CsiAgg agg;
        for (double g : h) {
            const double x = g > 0.0 ? rule(g, mu) : 0.0;
            agg.q += q_nonlinear_received(g * x, eh);
            agg.p += x;
        }
        agg.q /= n;
        agg.p /= n;
        return agg;
    };
    MuHint hint;
    return solve_inner_mu(eval, p_avg, hint).agg.q;
}

}  // namespace detail

// Power-adaptive all-harvesting ceiling: all power to the harvester, the
// per-block cap respected, and the power multiplier bisected so the average
// power budget binds.
inline double q_max_csi(const FadingEnsemble& ens, const NonlinearEhParams& eh,
                        const SystemParams& sys) {
    if (ens.gains.empty()) throw std::invalid_argument("gain ensemble: empty");
    return detail::q_ceiling(ens.gains, eh, sys.p_avg, [&](double g, double mu) {
        return p_eh_case_a(g, 1.0, mu, 0.0, sys.p_max, eh);
    });
}

// All-harvesting ceiling without the per-block cap (average power only).
inline double q_max_longterm(const FadingEnsemble& ens, const NonlinearEhParams& eh,
                             const SystemParams& sys) {
    if (ens.gains.empty()) throw std::invalid_argument("gain ensemble: empty");
    return detail::q_ceiling(ens.gains, eh, sys.p_avg, [&](double g, double mu) {
        return detail::longterm_eh_power(g, 1.0, mu, eh);
    });
}

// Linear-model energy ceiling at fixed power: every block split fully.
inline double q_cap_linear_csir(const FadingEnsemble& ens, const NonlinearEhParams& eh,
                                const SystemParams& sys) {
    return sys.zeta * sys.p_fixed * eh.t_block * ens.mean_gain();
}

namespace detail {

// Best-gains-first fill of the per-block cap within the average budget: the
// exact maximizer of a linear energy measure.
inline std::vector<double> greedy_linear_fill(const std::vector<double>& h, double p_avg,
                                              double p_max) {
    std::vector<std::size_t> order(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return h[a] > h[b]; });
    std::vector<double> p(h.size(), 0.0);
    double budget = p_avg * static_cast<double>(h.size());
    for (std::size_t k : order) {
        if (budget <= 0.0) break;
        p[k] = std::min(p_max, budget);
        budget -= p[k];
    }
    return p;
}

}  // namespace detail

// Linear-model energy ceiling under power adaptation.
inline double q_cap_linear_csi(const FadingEnsemble& ens, const NonlinearEhParams& eh,
                               const SystemParams& sys) {
    if (ens.gains.empty()) throw std::invalid_argument("gain ensemble: empty");
    const std::vector<double> p = detail::greedy_linear_fill(ens.gains, sys.p_avg, sys.p_max);
    double sum = 0.0;
    for (std::size_t k = 0; k < ens.gains.size(); ++k) sum += ens.gains[k] * p[k];
    return sys.zeta * eh.t_block * sum / static_cast<double>(ens.gains.size());
}

// Grid ceiling of a scheme's sweep, in the units its targets are tuned in.
inline double sweep_q_cap(Scheme scheme, const FadingEnsemble& ens, const NonlinearEhParams& eh,
                          const SystemParams& sys) {
    switch (scheme) {
        case Scheme::csir_optimal:
        case Scheme::csir_suboptimal:
        case Scheme::mode_switch_csir:
            return q_max_csir(ens, eh, sys);
        case Scheme::linear_dps_csir:
            return q_cap_linear_csir(ens, eh, sys);
        case Scheme::csi_optimal:
        case Scheme::csi_suboptimal:
        case Scheme::binary_restricted_csi:
            return q_max_csi(ens, eh, sys);
        case Scheme::csi_longterm:
            return q_max_longterm(ens, eh, sys);
        case Scheme::linear_dps_csi:
            return q_cap_linear_csi(ens, eh, sys);
    }
    throw std::invalid_argument("sweep_q_cap: unknown scheme");
}

namespace detail {

// Nonlinear-model energy of the scheme's all-harvesting policy, paired with
// a rate of exactly zero for the appended endpoint.
inline double endpoint_energy(Scheme scheme, const FadingEnsemble& ens,
                              const NonlinearEhParams& eh, const SystemParams& sys) {
    switch (scheme) {
        case Scheme::csir_optimal:
        case Scheme::csir_suboptimal:
        case Scheme::mode_switch_csir:
        case Scheme::linear_dps_csir:
            return q_max_csir(ens, eh, sys);
        case Scheme::csi_optimal:
        case Scheme::csi_suboptimal:
        case Scheme::binary_restricted_csi:
            return q_max_csi(ens, eh, sys);
        case Scheme::csi_longterm:
            return q_max_longterm(ens, eh, sys);
        case Scheme::linear_dps_csi: {
            const std::vector<double> p = greedy_linear_fill(ens.gains, sys.p_avg, sys.p_max);
            double sum = 0.0;
            for (std::size_t k = 0; k < ens.gains.size(); ++k)
                sum += q_nonlinear_received(ens.gains[k] * p[k], eh);
            return sum / static_cast<double>(ens.gains.size());
        }
    }
    throw std::invalid_argument("endpoint_energy: unknown scheme");
}

}  // namespace detail

// Solve one scheme at one target; rate and nonlinear-model energy plus the
// duals and iteration count behind them.
inline REPoint solve_scheme(Scheme scheme, const FadingEnsemble& ens, double q_target,
                            const NonlinearEhParams& eh, const SystemParams& sys,
                            const SolveOptions& opt, PointDiag* diag = nullptr) {
    REPoint pt;
    pt.q_target = q_target;
    PointDiag d;
    switch (scheme) {
        case Scheme::csir_optimal:
        case Scheme::csir_suboptimal: {
            const CsirSolution s = find_lambda(ens, q_target,
                                               scheme == Scheme::csir_optimal
                                                   ? CsirMode::optimal
                                                   : CsirMode::suboptimal,
                                               eh, sys, opt);
            pt.rate = s.achieved_rate;
            pt.energy = s.achieved_q;
            d = {s.lambda, 0.0, s.gap_bound, s.iterations};
            break;
        }
        case Scheme::csi_optimal:
        case Scheme::csi_suboptimal:
        case Scheme::csi_longterm: {
            const CsiMode mode = scheme == Scheme::csi_optimal      ? CsiMode::optimal
                                 : scheme == Scheme::csi_suboptimal ? CsiMode::suboptimal
                                                                    : CsiMode::longterm_only;
            const CsiSolution s = find_duals(ens, q_target, mode, eh, sys, opt);
            pt.rate = s.achieved_rate;
            pt.energy = s.achieved_q;
            d = {s.lambda, s.mu, s.gap_bound, s.iterations};
            break;
        }
        case Scheme::linear_dps_csir:
        case Scheme::mode_switch_csir:
        case Scheme::linear_dps_csi:
        case Scheme::binary_restricted_csi: {
            const BaselineSolution s =
                scheme == Scheme::linear_dps_csir ? linear_dps_csir(ens, q_target, eh, sys, opt)
                : scheme == Scheme::mode_switch_csir
                    ? mode_switch_csir(ens, q_target, eh, sys, opt)
                : scheme == Scheme::linear_dps_csi
                    ? linear_dps_csi(ens, q_target, eh, sys, opt)
                    : binary_restricted_csi(ens, q_target, eh, sys, opt);
            pt.rate = s.achieved_rate;
            pt.energy = s.achieved_q;
            d = {s.lambda, s.mu, 0.0, s.iterations};
            break;
        }
    }
    if (diag) *diag = d;
    return pt;
}

// Sweep a scheme over a linear grid of targets spanning its own energy
// ceiling; per-point solver failures are recorded and skipped. The exact
// all-harvesting endpoint (rate zero) is appended after the grid.
inline RERegion sweep_region(Scheme scheme, const FadingEnsemble& ens, int n_points,
                             const NonlinearEhParams& eh, const SystemParams& sys,
                             const SolveOptions& opt = {}) {
    if (n_points < 2) throw std::invalid_argument("sweep_region: n_points must be >= 2");
    RERegion region;
    region.scheme = scheme;
    region.ensemble_meta = ens.meta;

    const double cap = sweep_q_cap(scheme, ens, eh, sys);
    const double top = cap * (1.0 - 1e-6);
    for (int i = 0; i < n_points; ++i) {
        const double q = top * static_cast<double>(i) / static_cast<double>(n_points - 1);
        PointDiag diag;
        try {
            const REPoint pt = solve_scheme(scheme, ens, q, eh, sys, opt, &diag);
            region.points.push_back(pt);
            region.diags.push_back(diag);
        } catch (const std::runtime_error& e) {
            region.issues.push_back({q, e.what()});
        }
    }
    if (cap > 0.0) {
        region.points.push_back({0.0, detail::endpoint_energy(scheme, ens, eh, sys), cap});
        region.diags.push_back({});
    }
    return region;
}

// ---------------------------------------------------------------------------
// Brute-force oracle: multiplier sweeps over per-state grids, independent of
// the case tables, used to verify solver output at small ensemble sizes.

enum class OracleCase { csir, csi };

struct OracleOptions {
    int rho_grid = 10001;    // per-state split grid (step 1e-4)
    int lambda_grid = 3000;  // receiver-case multiplier sweep
    int e_grid = 4001;       // per-state harvest-power grid, joint case (step p_max/4000)
    int lambda_coarse = 160; // joint-case multiplier sweep before refinement
    int refine_points = 33;  // multipliers inserted per refinement round
    int refine_rounds = 2;
    std::size_t guardrail = 256;
    CsirMode csir_mode = CsirMode::optimal;
    std::vector<double> refine_targets;  // joint case: targets to refine around
};

// Achievable frontier traced by the oracle: q ascending, rate strictly
// decreasing; any point between listed ones is reachable by time sharing.
struct OracleCurve {
    std::vector<double> q;
    std::vector<double> rate;
};

namespace detail {

inline void oracle_frontier(std::vector<double>& qs, std::vector<double>& rs) {
    std::vector<std::size_t> order(qs.size());
    for (std::size_t k = 0; k < qs.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return qs[a] < qs[b]; });
    std::vector<double> q_keep, r_keep;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = order.size(); i-- > 0;) {
        const std::size_t k = order[i];
        if (rs[k] > best) {
            best = rs[k];
            q_keep.push_back(qs[k]);
            r_keep.push_back(rs[k]);
        }
    }
    std::reverse(q_keep.begin(), q_keep.end());
    std::reverse(r_keep.begin(), r_keep.end());
    qs = std::move(q_keep);
    rs = std::move(r_keep);
}

}  // namespace detail

// Rate certified achievable at the target: the chord between the bracketing
// frontier points (time sharing), the flat extension below the first point.
inline double oracle_rate_at(const OracleCurve& curve, double q_target) {
    if (curve.q.empty()) throw std::invalid_argument("oracle curve: empty");
    const double q_top = curve.q.back();
    if (q_target > q_top * (1.0 + 1e-9) + 1e-300)
        throw InfeasibleTarget("oracle: q_target above the traced frontier");
    if (q_target >= q_top) return curve.rate.back();
    std::size_t i = 0;
    while (i + 1 < curve.q.size() && curve.q[i + 1] < q_target) ++i;
    if (q_target <= curve.q[i]) return curve.rate[i];
    const double w = (q_target - curve.q[i]) / (curve.q[i + 1] - curve.q[i]);
    return curve.rate[i] + w * (curve.rate[i + 1] - curve.rate[i]);
}

// Receiver-case oracle: per state, every split on a uniform grid is scored
// once; a geometric multiplier sweep then picks per-state grid argmaxes
// through each state's concave hull (the exact argmax of a linear functional
// over a finite point set). In the closed-form variant the hull is built on
// the surrogate rate while true rates ride along for reporting.
inline OracleCurve oracle_csir_curve(const FadingEnsemble& ens, const NonlinearEhParams& eh,
                                     const SystemParams& sys, const OracleOptions& oo = {}) {
    const std::vector<double>& h = ens.gains;
    if (h.empty()) throw std::invalid_argument("gain ensemble: empty");
    if (h.size() > oo.guardrail) throw GuardrailExceeded("oracle: ensemble too large");
    const std::size_t n = h.size();
    const int m = std::max(oo.rho_grid, 3);
    const bool surrogate = oo.csir_mode == CsirMode::suboptimal;

    // Per-state hulls over (q, objective-rate) with the true rate carried.
    struct Vertex {
        double q, y, r;
    };
    std::vector<std::vector<Vertex>> hull(n);
    double rate0_sum = 0.0, qall_sum = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const double r0 = rate(h[s], sys.p_fixed, 0.0, sys);
        rate0_sum += r0;
        std::vector<Vertex> pts;
        pts.reserve(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
            const double rho = static_cast<double>(j) / static_cast<double>(m - 1);
            const double q = q_nonlinear(h[s], sys.p_fixed, rho, eh);
            const double r = rate(h[s], sys.p_fixed, rho, sys);
            const double y = surrogate ? (1.0 - rho) * r0 : r;
            if (!pts.empty() && q <= pts.back().q) {
                if (y > pts.back().y) pts.back() = {q, y, r};
                continue;
            }
            pts.push_back({q, y, r});
        }
        qall_sum += pts.back().q;
        // Upper hull over q-sorted points: slopes strictly decreasing.
        std::vector<Vertex>& hs = hull[s];
        for (const Vertex& v : pts) {
            while (hs.size() >= 2) {
                const Vertex& a = hs[hs.size() - 2];
                const Vertex& b = hs[hs.size() - 1];
                if ((b.y - a.y) * (v.q - a.q) <= (v.y - a.y) * (b.q - a.q))
                    hs.pop_back();
                else
                    break;
            }
            while (!hs.empty() && hs.back().q == v.q) hs.pop_back();
            hs.push_back(v);
        }
    }
    const double nn = static_cast<double>(n);
    const double q_all = qall_sum / nn;

    std::vector<double> qs, rs;
    qs.push_back(0.0);
    rs.push_back(rate0_sum / nn);
    qs.push_back(q_all);
    rs.push_back(0.0);
    if (q_all > 0.0) {
        const double lam_ref = std::fmax(rate0_sum / nn, 1e-300) / q_all;
        const int k_max = std::max(oo.lambda_grid, 2);
        for (int k = 0; k < k_max; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(k_max - 1);
            const double lam = lam_ref * std::pow(10.0, -6.0 + 12.0 * t);
            double q_sum = 0.0, r_sum = 0.0;
            for (std::size_t s = 0; s < n; ++s) {
                const std::vector<Vertex>& hs = hull[s];
                // First vertex whose incoming edge slope drops below -lam.
                std::size_t lo = 0, hi = hs.size() - 1;
                while (lo < hi) {
                    const std::size_t mid = (lo + hi + 1) / 2;
                    const Vertex& a = hs[mid - 1];
                    const Vertex& b = hs[mid];
                    if (b.y - a.y + lam * (b.q - a.q) >= 0.0)
                        lo = mid;
                    else
                        hi = mid - 1;
                }
                q_sum += hs[lo].q;
                r_sum += hs[lo].r;
            }
            qs.push_back(q_sum / nn);
            rs.push_back(r_sum / nn);
        }
    }
    detail::oracle_frontier(qs, rs);
    return {std::move(qs), std::move(rs)};
}

namespace detail {

// Joint-case oracle: the harvest power is swept on a uniform grid while the
// decoder power is water-filled exactly against the remaining per-block
// budget, so the per-state score is exact for every grid point. The power
// multiplier is bisected to the budget; the energy multiplier sweeps
// geometrically, refined around requested targets.
class CsiOracle {
  public:
    CsiOracle(const FadingEnsemble& ens, const NonlinearEhParams& eh, const SystemParams& sys,
              const OracleOptions& oo)
        : h_(ens.gains), sys_(sys), m_(std::max(oo.e_grid, 3)) {
        const std::size_t n = h_.size();
        q_tab_.resize(n * static_cast<std::size_t>(m_));
        r2_tab_.resize(n * static_cast<std::size_t>(m_));
        e_tab_.resize(static_cast<std::size_t>(m_));
        for (int j = 0; j < m_; ++j)
            e_tab_[static_cast<std::size_t>(j)] =
                sys.p_max * static_cast<double>(j) / static_cast<double>(m_ - 1);
        for (std::size_t s = 0; s < n; ++s) {
            for (int j = 0; j < m_; ++j) {
                const double e = e_tab_[static_cast<std::size_t>(j)];
                q_tab_[s * static_cast<std::size_t>(m_) + static_cast<std::size_t>(j)] =
                    q_nonlinear_received(h_[s] * e, eh);
                r2_tab_[s * static_cast<std::size_t>(m_) + static_cast<std::size_t>(j)] =
                    std::log1p(h_[s] * (sys.p_max - e) / sys.sigma2);
            }
        }
    }

    CsiAgg eval(double lam_n, double mu_n) const {
        CsiAgg agg;
        const std::size_t n = h_.size();
        for (std::size_t s = 0; s < n; ++s) {
            if (!(h_[s] > 0.0)) continue;
            const double wfc = std::clamp(1.0 / mu_n - sys_.sigma2 / h_[s], 0.0, sys_.p_max);
            const double r_wf = std::log1p(h_[s] * wfc / sys_.sigma2);
            const double c_wf = r_wf - mu_n * wfc;
            const double cap1 = sys_.p_max - wfc;
            const double* qrow = &q_tab_[s * static_cast<std::size_t>(m_)];
            const double* rrow = &r2_tab_[s * static_cast<std::size_t>(m_)];
            double best = -std::numeric_limits<double>::infinity();
            int best_j = 0;
            bool best_r1 = true;
            for (int j = 0; j < m_; ++j) {
                const double e = e_tab_[static_cast<std::size_t>(j)];
                const bool r1 = e <= cap1;
                const double v = lam_n * qrow[j] +
                                 (r1 ? c_wf - mu_n * e : rrow[j] - mu_n * sys_.p_max);
                if (v > best) {
                    best = v;
                    best_j = j;
                    best_r1 = r1;
                }
            }
            const double e = e_tab_[static_cast<std::size_t>(best_j)];
            agg.q += qrow[best_j];
            if (best_r1) {
                agg.rate += r_wf;
                agg.p += wfc + e;
            } else {
                agg.rate += rrow[best_j];
                agg.p += sys_.p_max;
            }
        }
        const double nn = static_cast<double>(n);
        agg.rate /= nn * kLn2;
        agg.q /= nn;
        agg.p /= nn;
        return agg;
    }

    // Budget-feasible point at one energy multiplier (nats).
    CsiAgg solve_at(double lam_n, MuHint& hint) const {
        auto eval_mu = [&](double mu) { return eval(lam_n, mu); };
        return solve_inner_mu(eval_mu, sys_.p_avg, hint).agg;
    }

  private:
    std::vector<double> h_;
    SystemParams sys_;
    int m_;
    std::vector<double> q_tab_, r2_tab_, e_tab_;
};

}  // namespace detail

inline OracleCurve oracle_csi_curve(const FadingEnsemble& ens, const NonlinearEhParams& eh,
                                    const SystemParams& sys, const OracleOptions& oo = {}) {
    if (ens.gains.empty()) throw std::invalid_argument("gain ensemble: empty");
    if (ens.gains.size() > oo.guardrail) throw GuardrailExceeded("oracle: ensemble too large");
    detail::CsiOracle oracle(ens, eh, sys, oo);

    std::vector<double> lams, qs, rs;
    auto add_point = [&](double lam_n) {
        detail::MuHint hint;
        const detail::CsiAgg agg = oracle.solve_at(lam_n, hint);
        lams.push_back(lam_n);
        qs.push_back(agg.q);
        rs.push_back(agg.rate);
    };

    add_point(1e-15);  // water-filling end
    const double r_wf = rs.back();
    add_point(1e12);  // all-harvesting end
    const double q_cap = qs.back();
    if (q_cap > 0.0) {
        const double lam_ref = std::fmax(r_wf, 1e-300) / q_cap;
        const int k_max = std::max(oo.lambda_coarse, 2);
        for (int k = 0; k < k_max; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(k_max - 1);
            add_point(lam_ref * std::pow(10.0, -4.0 + 8.0 * t));
        }
        for (double target : oo.refine_targets) {
            for (int round = 0; round < oo.refine_rounds; ++round) {
                // Bracket the target between adjacent swept energies.
                double lam_a = 0.0, lam_b = 0.0, q_a = -1.0, q_b = 1e300;
                for (std::size_t i = 0; i < lams.size(); ++i) {
                    if (qs[i] <= target && qs[i] > q_a) {
                        q_a = qs[i];
                        lam_a = lams[i];
                    }
                    if (qs[i] >= target && qs[i] < q_b) {
                        q_b = qs[i];
                        lam_b = lams[i];
                    }
                }
                if (!(lam_a > 0.0) || !(lam_b > 0.0) || lam_b <= lam_a * (1.0 + 1e-12)) break;
                const int r_pts = std::max(oo.refine_points, 2);
                for (int k = 1; k <= r_pts; ++k) {
                    const double t = static_cast<double>(k) / static_cast<double>(r_pts + 1);
                    add_point(lam_a * std::pow(lam_b / lam_a, t));
                }
            }
        }
    }
    detail::oracle_frontier(qs, rs);
    return {std::move(qs), std::move(rs)};
}

// One-call oracle: trace the frontier at the requested resolution and read
// the certified rate at the target.
inline REPoint oracle_solve(const FadingEnsemble& ens, double q_target, OracleCase which,
                            const NonlinearEhParams& eh, const SystemParams& sys,
                            OracleOptions oo = {}) {
    OracleCurve curve;
    if (which == OracleCase::csir) {
        curve = oracle_csir_curve(ens, eh, sys, oo);
    } else {
        if (oo.refine_targets.empty()) oo.refine_targets.push_back(q_target);
        curve = oracle_csi_curve(ens, eh, sys, oo);
    }
    REPoint pt;
    pt.q_target = q_target;
    pt.energy = std::min(q_target, curve.q.back());
    pt.rate = oracle_rate_at(curve, q_target);
    return pt;
}

// ---------------------------------------------------------------------------
// CSV serialization. Numbers are printed with 17 significant digits so a
// write-read cycle reproduces every double bit-exactly.

inline void write_regions_csv(std::ostream& os, const std::vector<RERegion>& regions) {
    os << "q_target,rate,energy,scheme,mode\n";
    char buf[96];
    for (const RERegion& region : regions) {
        for (const REPoint& pt : region.points) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", pt.q_target, pt.rate, pt.energy);
            os << buf << ',' << scheme_label(region.scheme) << ',' << scheme_case(region.scheme)
               << '\n';
        }
    }
}

inline void write_regions_csv(const std::string& path, const std::vector<RERegion>& regions) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_regions_csv(os, regions);
}

inline std::vector<RERegion> read_regions_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("region csv: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "q_target,rate,energy,scheme,mode")
        throw std::runtime_error("region csv: unexpected header: " + line);
    std::vector<RERegion> regions;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                cells.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (cells.size() != 5)
            throw std::runtime_error("region csv: bad row at line " + std::to_string(lineno));
        REPoint pt;
        double* fields[3] = {&pt.q_target, &pt.rate, &pt.energy};
        for (int f = 0; f < 3; ++f) {
            const char* c = cells[static_cast<std::size_t>(f)].c_str();
            char* end = nullptr;
            *fields[f] = std::strtod(c, &end);
            if (end == c || *end != '\0')
                throw std::runtime_error("region csv: bad number at line " +
                                         std::to_string(lineno));
        }
        const Scheme scheme = parse_scheme(cells[3], cells[4]);
        if (regions.empty() || regions.back().scheme != scheme) {
            RERegion next;
            next.scheme = scheme;
            regions.push_back(std::move(next));
        }
        regions.back().points.push_back(pt);
    }
    return regions;
}

inline std::vector<RERegion> read_regions_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    return read_regions_csv(is);
}

}  // namespace swipt
