#pragma once

#include <cmath>

#include "gridsched/core/types.hpp"

namespace gridsched::degradation {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kDefaultTemperatureK = 308.15; // 35 degC, thermally managed pack

/// Semi-empirical calendar and cycle aging coefficients for one chemistry.
struct ChemistryParams {
    // calendar
    double k_alpha = 0.0;
    double k_beta = 0.0;
    double k_gamma = 0.0; // K, negative
    double k_z = 0.5;
    // depth-of-discharge stress
    double k_delta1 = 0.0;
    double k_delta2 = 0.0;
    double k_delta3 = 0.0;
    // SEI film
    double alpha_sei = 5.75e-2;
    double beta_sei = 1.21e2;
    // mean-SoC, temperature and time stress
    double k_sigma = 1.04;
    double sigma_ref = 0.5;
    double k_T = 6.93e-2;
    double T_ref = 298.0;
    double k_t = 4.14e-10; // per second
    core::Chemistry chemistry = core::Chemistry::LFP;
};

inline ChemistryParams lfp_params() {
    ChemistryParams p;
    p.k_alpha = 5.98e6;
    p.k_beta = 6.90e-1;
    p.k_gamma = -6.46e3;
    p.k_delta1 = 9.05e-6;
    p.k_delta2 = 1.40;
    p.k_delta3 = 0.0;
    p.chemistry = core::Chemistry::LFP;
    return p;
}

inline ChemistryParams nmc_params() {
    ChemistryParams p;
    p.k_alpha = 1.14e12;
    p.k_beta = 4.70;
    p.k_gamma = -1.08e4;
    p.k_delta1 = 1.47e4;
    p.k_delta2 = -1.65;
    p.k_delta3 = 3.61e2;
    p.chemistry = core::Chemistry::NMC;
    return p;
}

inline ChemistryParams params_for(core::Chemistry c) {
    return c == core::Chemistry::LFP ? lfp_params() : nmc_params();
}

/// DoD stress. LFP grows exponentially with depth, NMC follows a saturating
/// power law.
inline double dod_stress(const ChemistryParams& p, double dod) {
    if (p.chemistry == core::Chemistry::LFP) return p.k_delta1 * dod * std::exp(p.k_delta2 * dod);
    if (dod <= 0.0) {
        // Limit of the power law at zero depth: the power term vanishes for a
        // positive exponent and diverges for a negative one.
        return p.k_delta2 > 0.0 ? 1.0 / p.k_delta3 : 0.0;
    }
    return 1.0 / (p.k_delta1 * std::pow(dod, p.k_delta2) + p.k_delta3);
}

inline double soc_stress(const ChemistryParams& p, double mean_soc) {
    return std::exp(p.k_sigma * (mean_soc - p.sigma_ref));
}

inline double temperature_stress(const ChemistryParams& p, double temp_k) {
    return std::exp(p.k_T * (temp_k - p.T_ref) * p.T_ref / temp_k);
}

inline double time_stress(const ChemistryParams& p, double duration_s) { return p.k_t * duration_s; }

} // namespace gridsched::degradation
