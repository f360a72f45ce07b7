#pragma once

// JSON views of solver output: solutions carry their policies, multipliers,
// and achieved averages; swept regions carry their points plus per-point
// diagnostics and any targets that failed to solve.

#include <string>
#include <vector>

#include <json.hpp>

#include "swipt/baselines.hpp"
#include "swipt/csi.hpp"
#include "swipt/csir.hpp"
#include "swipt/region.hpp"

namespace swipt {

inline const char* csir_mode_label(CsirMode m) {
    return m == CsirMode::optimal ? "optimal" : "suboptimal";
}

inline const char* csi_mode_label(CsiMode m) {
    switch (m) {
        case CsiMode::optimal: return "optimal";
        case CsiMode::suboptimal: return "suboptimal";
        case CsiMode::longterm_only: return "longterm";
    }
    return "?";
}

inline const char* baseline_kind_label(BaselineKind k) {
    switch (k) {
        case BaselineKind::linear_dps_csir: return "linear_dps_csir";
        case BaselineKind::mode_switch_csir: return "mode_switch_csir";
        case BaselineKind::linear_dps_csi: return "linear_dps_csi";
        case BaselineKind::binary_restricted_csi: return "binary_restricted_csi";
    }
    return "?";
}

inline nlohmann::json to_json(const TimeShare& ts) {
    return {{"state", ts.state}, {"rho_alt", ts.rho_alt}, {"theta", ts.theta}};
}

inline nlohmann::json to_json(const DualComponent& c) {
    return {{"weight", c.weight}, {"lambda", c.lambda}, {"mu", c.mu}};
}

inline nlohmann::json to_json(const CsirSolution& s) {
    nlohmann::json j{{"lambda", s.lambda},
                     {"rho", s.rho},
                     {"achieved_rate", s.achieved_rate},
                     {"achieved_q", s.achieved_q},
                     {"iterations", s.iterations},
                     {"gap_bound", s.gap_bound},
                     {"mode", csir_mode_label(s.mode)}};
    if (s.time_share) j["time_share"] = to_json(*s.time_share);
    return j;
}

inline nlohmann::json to_json(const CsiSolution& s) {
    nlohmann::json j{{"lambda", s.lambda},
                     {"mu", s.mu},
                     {"p", s.p},
                     {"rho", s.rho},
                     {"achieved_rate", s.achieved_rate},
                     {"achieved_q", s.achieved_q},
                     {"achieved_p_avg", s.achieved_p_avg},
                     {"iterations", s.iterations},
                     {"gap_bound", s.gap_bound},
                     {"mode", csi_mode_label(s.mode)}};
    if (!s.components.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const DualComponent& c : s.components) arr.push_back(to_json(c));
        j["components"] = arr;
    }
    return j;
}

inline nlohmann::json to_json(const BaselineSolution& s) {
    nlohmann::json j{{"baseline_kind", baseline_kind_label(s.kind)},
                     {"lambda", s.lambda},
                     {"mu", s.mu},
                     {"rho", s.rho},
                     {"p", s.p},
                     {"achieved_rate", s.achieved_rate},
                     {"achieved_q", s.achieved_q},
                     {"achieved_q_model", s.achieved_q_model},
                     {"achieved_p_avg", s.achieved_p_avg},
                     {"iterations", s.iterations}};
    if (s.time_share) j["time_share"] = to_json(*s.time_share);
    if (!s.components.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const DualComponent& c : s.components) arr.push_back(to_json(c));
        j["components"] = arr;
    }
    if (s.kind == BaselineKind::mode_switch_csir) {
        j["chi_lo"] = s.chi_lo;
        j["chi_hi"] = s.chi_hi;
    }
    return j;
}

inline nlohmann::json to_json(const RERegion& region) {
    nlohmann::json pts = nlohmann::json::array();
    for (std::size_t i = 0; i < region.points.size(); ++i) {
        const REPoint& pt = region.points[i];
        nlohmann::json jp{{"q_target", pt.q_target}, {"rate", pt.rate}, {"energy", pt.energy}};
        if (i < region.diags.size()) {
            const PointDiag& d = region.diags[i];
            jp["lambda"] = d.lambda;
            jp["mu"] = d.mu;
            jp["gap_bound"] = d.gap_bound;
            jp["iterations"] = d.iterations;
        }
        pts.push_back(jp);
    }
    nlohmann::json issues = nlohmann::json::array();
    for (const SweepIssue& issue : region.issues)
        issues.push_back({{"q_target", issue.q_target}, {"what", issue.what}});
    return {{"scheme", scheme_label(region.scheme)},
            {"case", scheme_case(region.scheme)},
            {"ensemble", region.ensemble_meta},
            {"points", pts},
            {"issues", issues}};
}

inline nlohmann::json to_json(const std::vector<RERegion>& regions) {
    nlohmann::json arr = nlohmann::json::array();
    for (const RERegion& r : regions) arr.push_back(to_json(r));
    return arr;
}

}  // namespace swipt
