#pragma once

// Test-time corruption: Gaussian noise at a target per-sensor SNR,
// salt-and-pepper replacement with per-sensor extremes, and AR(1) colored
// noise with stationary power matched to the target SNR. All draws come
// from the given seed; labels are never touched.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "arta/data.hpp"
#include "arta/rng.hpp"

namespace arta {

enum class NoiseKind { gaussian, salt_pepper, colored };

inline NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "gaussian") return NoiseKind::gaussian;
    if (s == "salt_pepper") return NoiseKind::salt_pepper;
    if (s == "colored") return NoiseKind::colored;
    throw ConfigError("unknown noise kind: " + s);
}

struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double snr_db = 20.0;   // gaussian / colored
    double p = 0.05;        // salt_pepper
    double rho = 0.5;       // colored, |rho| < 1
    std::uint64_t seed = 0;
};

namespace detail {

// mean squared signal per sensor
inline std::vector<double> sensor_power(const TimeSeries& ts) {
    std::vector<double> p(static_cast<std::size_t>(ts.f), 0.0);
    for (int t = 0; t < ts.n; ++t)
        for (int s = 0; s < ts.f; ++s) {
            double v = ts.at(t, s);
            p[static_cast<std::size_t>(s)] += v * v;
        }
    for (auto& v : p) v /= static_cast<double>(ts.n);
    return p;
}

inline void require_nonzero_power(const std::vector<double>& p) {
    for (double v : p)
        if (v <= 0.0) throw ConfigError("SNR undefined: sensor with zero signal power");
}

}  // namespace detail

// i.i.d. normal noise, sigma chosen per sensor for the target SNR.
inline TimeSeries add_gaussian(const TimeSeries& ts, double snr_db, std::uint64_t seed) {
    if (std::isinf(snr_db) && snr_db > 0.0) return ts;  // no-noise sentinel
    auto power = detail::sensor_power(ts);
    detail::require_nonzero_power(power);
    TimeSeries out = ts;
    Rng rng = Rng(seed).split("noise.gaussian");
    std::vector<double> sigma(power.size());
    for (std::size_t s = 0; s < power.size(); ++s)
        sigma[s] = std::sqrt(power[s] / std::pow(10.0, snr_db / 10.0));
    for (int t = 0; t < ts.n; ++t)
        for (int s = 0; s < ts.f; ++s)
            out.at(t, s) = static_cast<float>(static_cast<double>(ts.at(t, s)) +
                                              sigma[static_cast<std::size_t>(s)] * rng.normal());
    return out;
}

// Each cell is independently replaced, with probability p, by the sensor's
// empirical minimum or maximum (coin flip). Untouched cells stay
// bit-identical.
inline TimeSeries add_salt_pepper(const TimeSeries& ts, double p, std::uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw ConfigError("salt_pepper: p must be in [0, 1]");
    TimeSeries out = ts;
    if (p == 0.0) return out;
    std::vector<float> lo(static_cast<std::size_t>(ts.f), std::numeric_limits<float>::max());
    std::vector<float> hi(static_cast<std::size_t>(ts.f), std::numeric_limits<float>::lowest());
    for (int t = 0; t < ts.n; ++t)
        for (int s = 0; s < ts.f; ++s) {
            lo[static_cast<std::size_t>(s)] = std::min(lo[static_cast<std::size_t>(s)], ts.at(t, s));
            hi[static_cast<std::size_t>(s)] = std::max(hi[static_cast<std::size_t>(s)], ts.at(t, s));
        }
    Rng rng = Rng(seed).split("noise.salt_pepper");
    for (int t = 0; t < ts.n; ++t)
        for (int s = 0; s < ts.f; ++s)
            if (rng.uniform() < p)
                out.at(t, s) = (rng.uniform() < 0.5) ? lo[static_cast<std::size_t>(s)]
                                                     : hi[static_cast<std::size_t>(s)];
    return out;
}

// AR(1) noise n_t = rho * n_{t-1} + eps_t per sensor. The innovation
// variance is chosen so the stationary noise power sigma^2/(1-rho^2) meets
// the target SNR; n_0 is drawn from the stationary distribution.
inline TimeSeries add_colored(const TimeSeries& ts, double snr_db, double rho, std::uint64_t seed) {
    if (std::abs(rho) >= 1.0) throw ConfigError("colored: |rho| must be < 1");
    if (std::isinf(snr_db) && snr_db > 0.0) return ts;
    auto power = detail::sensor_power(ts);
    detail::require_nonzero_power(power);
    TimeSeries out = ts;
    Rng rng = Rng(seed).split("noise.colored");
    for (int s = 0; s < ts.f; ++s) {
        double stationary_var = power[static_cast<std::size_t>(s)] / std::pow(10.0, snr_db / 10.0);
        double eps_sigma = std::sqrt(stationary_var * (1.0 - rho * rho));
        double n = std::sqrt(stationary_var) * rng.normal();
        out.at(0, s) = static_cast<float>(static_cast<double>(ts.at(0, s)) + n);
        for (int t = 1; t < ts.n; ++t) {
            n = rho * n + eps_sigma * rng.normal();
            out.at(t, s) = static_cast<float>(static_cast<double>(ts.at(t, s)) + n);
        }
    }
    return out;
}

// 10 log10(sum x^2 / sum (x~ - x)^2); +inf when the series are identical.
inline double measure_snr(const TimeSeries& clean, const TimeSeries& corrupted) {
    if (clean.n != corrupted.n || clean.f != corrupted.f)
        throw ConfigError("measure_snr: shape mismatch");
    double sig = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < clean.values.size(); ++i) {
        double x = clean.values[i];
        double d = static_cast<double>(corrupted.values[i]) - x;
        sig += x * x;
        noise += d * d;
    }
    if (noise == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(sig / noise);
}

inline TimeSeries corrupt(const TimeSeries& ts, const NoiseSpec& spec) {
    switch (spec.kind) {
        case NoiseKind::gaussian: return add_gaussian(ts, spec.snr_db, spec.seed);
        case NoiseKind::salt_pepper: return add_salt_pepper(ts, spec.p, spec.seed);
        default: return add_colored(ts, spec.snr_db, spec.rho, spec.seed);
    }
}

// Default sweep severities: corruption probabilities from mild to severe,
// and SNR levels from mild to severe.
inline std::vector<double> default_p_grid() { return {0.01, 0.05, 0.10, 0.15, 0.20}; }
inline std::vector<double> default_snr_grid() { return {30.0, 25.0, 20.0, 15.0, 10.0}; }

}  // namespace arta
