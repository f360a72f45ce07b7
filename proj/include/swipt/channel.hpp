#pragma once

// Block-fading gain ensembles: Rician draws, aperture/distance gains, and a
// bounded random-walk mobility trace, plus a CSV exchange format. Sampling is
// fully specified here (no library distributions) so identical seeds give
// identical ensembles on every platform.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace swipt {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kMinMobilityDistance = 0.1;  // [m]

struct RicianParams {
    double alpha;        // line-of-sight to scattered power ratio; may be +inf
    double los_power;    // power of the deterministic component
    double scatter_var;  // variance of the scattered complex component
};

struct DistanceChannelParams {
    double a_t;                // transmit aperture area [m^2]
    double a_r;                // receive aperture area [m^2]
    double f_c;                // carrier frequency [Hz]
    double c = 299792458.0;    // propagation speed [m/s]
};

struct MobilityParams {
    double d0;       // initial distance [m]
    double v_max;    // peak speed [m/s]
    double t_block;  // block duration [s]
};

struct FadingEnsemble {
    std::vector<double> gains;
    std::uint64_t seed = 0;
    std::string meta;

    std::size_t size() const { return gains.size(); }

    double mean_gain() const {
        if (gains.empty()) return 0.0;
        double s = 0.0;
        for (double g : gains) s += g;
        return s / static_cast<double>(gains.size());
    }
};

namespace detail {

// Uniform draw on (0, 1): 53-bit mantissa, half-step offset so 0 is excluded.
inline double uniform_open(std::mt19937_64& eng) {
    return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

// Box-Muller standard normal over the explicit uniform above; the library
// normal distribution is implementation-defined and would break seed
// reproducibility across standard libraries.
class NormalSampler {
  public:
    explicit NormalSampler(std::uint64_t seed) : eng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open(eng_);
        const double u2 = uniform_open(eng_);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * kPi * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

  private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

// n power gains |eta|^2 with eta = sqrt(alpha/(alpha+1)) * eta_bar
// + sqrt(1/(alpha+1)) * eta_tilde, eta_tilde circularly symmetric normal.
// alpha = +inf degenerates to the constant gain los_power.
inline FadingEnsemble gen_rician(std::size_t n, const RicianParams& par, std::uint64_t seed) {
    if (!(par.alpha >= 0.0)) throw std::invalid_argument("gen_rician: alpha must be >= 0");
    if (!(par.los_power >= 0.0)) throw std::invalid_argument("gen_rician: los_power must be >= 0");
    if (!(par.scatter_var > 0.0)) throw std::invalid_argument("gen_rician: scatter_var must be > 0");

    double w_los = 1.0, w_sc = 0.0;
    if (!std::isinf(par.alpha)) {
        w_los = std::sqrt(par.alpha / (par.alpha + 1.0));
        w_sc = std::sqrt(1.0 / (par.alpha + 1.0));
    }
    const double los_re = w_los * std::sqrt(par.los_power);
    const double comp_sd = w_sc * std::sqrt(par.scatter_var / 2.0);

    FadingEnsemble out;
    out.gains.resize(n);
    out.seed = seed;
    detail::NormalSampler normal(seed);
    for (double& g : out.gains) {
        const double re = los_re + comp_sd * normal();
        const double im = comp_sd * normal();
        g = re * re + im * im;
    }
    std::ostringstream meta;
    meta << "rician alpha=" << par.alpha << " los_power=" << par.los_power
         << " scatter_var=" << par.scatter_var << " n=" << n << " seed=" << seed;
    out.meta = meta.str();
    return out;
}

// Aperture-limited free-space power gain 1 - exp(-a_t a_r / (lambda d)^2).
inline double distance_gain(double d, const DistanceChannelParams& par) {
    if (!(d > 0.0)) throw std::invalid_argument("distance_gain: d must be positive");
    if (!(par.a_t > 0.0) || !(par.a_r > 0.0) || !(par.f_c > 0.0) || !(par.c > 0.0))
        throw std::invalid_argument("distance_gain: apertures, f_c and c must be positive");
    const double wavelength = par.c / par.f_c;
    return -std::expm1(-(par.a_t * par.a_r) / (wavelength * wavelength * d * d));
}

// Distance random walk d_k = d_{k-1} + beta_k * v_max * t_block with
// beta_k uniform on [-1, 1], clamped at a hard floor; the first block sits at
// d0. Gains follow the aperture model above.
inline FadingEnsemble mobility_trace(std::size_t n, const MobilityParams& mob,
                                     const DistanceChannelParams& par, std::uint64_t seed) {
    if (!(mob.d0 > 0.0)) throw std::invalid_argument("mobility_trace: d0 must be positive");
    if (!(mob.v_max >= 0.0)) throw std::invalid_argument("mobility_trace: v_max must be >= 0");
    if (!(mob.t_block > 0.0)) throw std::invalid_argument("mobility_trace: t_block must be positive");

    FadingEnsemble out;
    out.gains.resize(n);
    out.seed = seed;
    std::mt19937_64 eng(seed);
    double d = std::fmax(mob.d0, kMinMobilityDistance);
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            const double beta = 2.0 * detail::uniform_open(eng) - 1.0;
            d = std::fmax(d + beta * mob.v_max * mob.t_block, kMinMobilityDistance);
        }
        out.gains[i] = distance_gain(d, par);
    }
    std::ostringstream meta;
    meta << "mobility d0=" << mob.d0 << " v_max=" << mob.v_max << " t_block=" << mob.t_block
         << " n=" << n << " seed=" << seed;
    out.meta = meta.str();
    return out;
}

// One gain per row under a single "h" header, 17 significant digits so the
// round trip is bit exact.
inline void write_gains_csv(std::ostream& os, const FadingEnsemble& ens) {
    os << "h\n";
    for (double g : ens.gains) os << detail::format_g17(g) << '\n';
}

inline void write_gains_csv(const std::string& path, const FadingEnsemble& ens) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_gains_csv: cannot open " + path);
    write_gains_csv(os, ens);
}

inline FadingEnsemble read_gains_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || (line != "h" && line != "h\r"))
        throw std::runtime_error("read_gains_csv: expected header 'h'");
    FadingEnsemble out;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const char* begin = line.c_str();
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin || *end != '\0')
            throw std::runtime_error("read_gains_csv: malformed row '" + line + "'");
        out.gains.push_back(v);
    }
    out.meta = "csv";
    return out;
}

inline FadingEnsemble read_gains_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_gains_csv: cannot open " + path);
    return read_gains_csv(is);
}

}  // namespace swipt
