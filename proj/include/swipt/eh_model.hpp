#pragma once

// Receiver-side model for simultaneous information decoding and energy
// harvesting with a saturating (logistic) harvester. All spectral
// efficiencies are in bits/s/Hz; harvested energy is joules per block.

#include <cmath>
#include <stdexcept>

#include "swipt/errors.hpp"

namespace swipt {

inline constexpr double kLn2 = 0.69314718055994530942;

namespace detail {

// Logistic function evaluated without overflow for any argument.
inline double sigmoid(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// sigmoid(t) * (1 - sigmoid(t)), stable for large |t|.
inline double sigmoid_slope(double t) { return sigmoid(t) * sigmoid(-t); }

// Received power at which the logistic level reaches s = 1/2 + sqrt(1/4 - eps),
// i.e. b - ln((1-s)/s)/a. The complement 1 - s is formed as eps/s (their
// product telescopes), which stays accurate when eps underflows the naive
// 1/2 - sqrt(1/4 - eps). Requires 0 < eps <= 1/4.
inline double logistic_upper_preimage(double eps, double a, double b) {
    const double s = 0.5 + std::sqrt(0.25 - eps);
    const double one_minus_s = eps / s;
    return b - std::log(one_minus_s / s) / a;
}

inline double rate_nats(double h, double p, double rho, double sigma2) {
    return std::log1p((1.0 - rho) * h * p / sigma2);
}

}  // namespace detail

struct NonlinearEhParams {
    double a;        // logistic steepness [1/W]
    double b;        // logistic turn-on threshold [W]
    double p_s;      // harvester saturation power [W]
    double t_block;  // block duration [s]
    double omega;    // zero-input logistic level 1/(1 + e^{a b}), derived

    NonlinearEhParams(double a_in, double b_in, double p_s_in, double t_block_in = 1.0)
        : a(a_in), b(b_in), p_s(p_s_in), t_block(t_block_in), omega(detail::sigmoid(-a_in * b_in)) {
        if (!(a > 0.0) || !(b > 0.0) || !(p_s > 0.0) || !(t_block > 0.0))
            throw std::invalid_argument("NonlinearEhParams: a, b, p_s, t_block must be positive");
        if (!(omega > 0.0))
            throw std::invalid_argument("NonlinearEhParams: a*b too large, zero-input level underflows");
    }
};

struct SystemParams {
    double sigma2;   // receiver noise power [W]
    double p_fixed;  // per-block transmit power without transmitter CSI [W]
    double p_avg;    // long-term average transmit power budget [W]
    double p_max;    // per-block transmit power limit [W]
    double zeta;     // conversion efficiency of the linear harvester model

    SystemParams(double sigma2_in, double p_fixed_in, double p_avg_in, double p_max_in,
                 double zeta_in = 1.0)
        : sigma2(sigma2_in), p_fixed(p_fixed_in), p_avg(p_avg_in), p_max(p_max_in), zeta(zeta_in) {
        if (!(sigma2 > 0.0) || !(p_fixed > 0.0) || !(p_avg > 0.0) || !(p_max > 0.0))
            throw std::invalid_argument("SystemParams: powers and noise must be positive");
        if (!(zeta > 0.0) || !(zeta <= 1.0))
            throw std::invalid_argument("SystemParams: zeta must lie in (0, 1]");
        if (!(p_max >= p_avg))
            throw std::invalid_argument("SystemParams: p_max must be at least p_avg");
    }
};

struct SplitDecision {
    double rho;  // fraction of received power routed to the harvester

    explicit SplitDecision(double rho_in) : rho(rho_in) {
        if (!(rho >= 0.0 && rho <= 1.0))
            throw std::invalid_argument("SplitDecision: rho must lie in [0, 1]");
    }
};

// Spectral efficiency of the decoding branch.
inline double rate(double h, double p, double rho, const SystemParams& sys) {
    return detail::rate_nats(h, p, rho, sys.sigma2) / kLn2;
}

// Harvester activation level at received harvesting power rho*h*p.
inline double psi(double h, double p, double rho, const NonlinearEhParams& eh) {
    return detail::sigmoid(eh.a * (rho * h * p - eh.b));
}

// Harvested energy as a function of the received harvesting power x. The
// offset-removed logistic p_s*t*(psi - omega)/(1 - omega) is evaluated in the
// algebraically equal form p_s*t*(1 - e^{-a x})*sigmoid(a(x - b)), which is
// exactly zero at x = 0 and fully accurate for tiny x.
inline double q_nonlinear_received(double x, const NonlinearEhParams& eh) {
    return eh.p_s * eh.t_block * (-std::expm1(-eh.a * x)) * detail::sigmoid(eh.a * (x - eh.b));
}

inline double q_nonlinear(double h, double p, double rho, const NonlinearEhParams& eh) {
    return q_nonlinear_received(rho * h * p, eh);
}

inline double q_linear(double h, double p, double rho, double zeta, double t_block) {
    return zeta * rho * h * p * t_block;
}

// d q_nonlinear / d rho at fixed (h, p).
inline double dq_drho(double h, double p, double rho, const NonlinearEhParams& eh) {
    const double hp = h * p;
    return eh.p_s * eh.t_block * eh.a * hp *
           detail::sigmoid_slope(eh.a * (rho * hp - eh.b)) / (1.0 - eh.omega);
}

// Derivative in rho of the per-state objective rate + lambda * q_nonlinear.
inline double dl_drho(double h, double p, double rho, double lambda, const NonlinearEhParams& eh,
                      const SystemParams& sys) {
    const double hp = h * p;
    return lambda * dq_drho(h, p, rho, eh) - hp / (kLn2 * ((1.0 - rho) * hp + sys.sigma2));
}

// Scalar helpers for the fixed-transmit-power case tables; x is a channel
// power gain and the transmit power is sys.p_fixed.

// Logistic slope at the all-harvesting received power x * p.
inline double csir_f(double x, const NonlinearEhParams& eh, const SystemParams& sys) {
    return detail::sigmoid_slope(eh.a * (x * sys.p_fixed - eh.b));
}

// Rate-side slope scale when a fraction x of the gain still feeds the decoder.
inline double csir_g(double x, const NonlinearEhParams& eh, const SystemParams& sys) {
    return (1.0 - eh.omega) / (eh.p_s * eh.t_block * eh.a * (x * sys.p_fixed + sys.sigma2));
}

// Rate-side slope scale at the harvester turn-on point.
inline double csir_gamma(double x, const NonlinearEhParams& eh, const SystemParams& sys) {
    return (1.0 - eh.omega) /
           (eh.p_s * eh.t_block * eh.a * (std::fmax(x * sys.p_fixed - eh.b, 0.0) + sys.sigma2));
}

// Slope scale of the closed-form surrogate, which replaces the rate curve by
// its chord; uses the bits-rate normalization.
inline double csir_z(double x, const NonlinearEhParams& eh, const SystemParams& sys) {
    const double xp = x * sys.p_fixed;
    if (!(xp > 0.0)) throw std::domain_error("csir_z: requires x * p_fixed > 0");
    return (1.0 - eh.omega) * std::log1p(xp / sys.sigma2) /
           (kLn2 * eh.p_s * eh.t_block * eh.a * xp);
}

// Scalar helpers for the transmitter-side allocation tables; p_level is an
// endpoint of the candidate harvesting-power interval.

inline double csi_f_at(double h, double p_level, const NonlinearEhParams& eh) {
    return detail::sigmoid_slope(eh.a * (h * p_level - eh.b));
}

inline double csi_g_at(double h, double p_level, const NonlinearEhParams& eh,
                       const SystemParams& sys) {
    return (1.0 - eh.omega) /
           (eh.p_s * eh.t_block * eh.a * (h * (sys.p_max - p_level) + sys.sigma2));
}

inline double csi_z(double h, const NonlinearEhParams& eh) {
    if (!(h > 0.0)) throw std::domain_error("csi_z: requires h > 0");
    return (1.0 - eh.omega) / (eh.p_s * eh.t_block * eh.a * h);
}

inline double csi_gamma(double h, const NonlinearEhParams& eh, const SystemParams& sys) {
    return (1.0 - eh.omega) /
           (eh.p_s * eh.t_block * eh.a * (std::fmax(h * sys.p_max - eh.b, 0.0) + sys.sigma2));
}

inline double csi_zprime(double h, const NonlinearEhParams& eh, const SystemParams& sys) {
    const double hp = h * sys.p_max;
    if (!(hp > 0.0)) throw std::domain_error("csi_zprime: requires h > 0");
    return (1.0 - eh.omega) * std::log1p(hp / sys.sigma2) /
           (kLn2 * eh.p_s * eh.t_block * eh.a * hp);
}

}  // namespace swipt
