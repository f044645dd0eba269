/**
 * @file scenario.hpp
 * @brief Synthetic scenes: interference covariance, steering vectors, complex
 *        Gaussian sampling, target injection and mismatched steering.
 */
#pragma once

#include "embml/errors.hpp"
#include "embml/linalg.hpp"
#include "embml/rng.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace embml {

struct ScenarioConfig {
    std::size_t n = 8;               ///< channels (pulses)
    std::size_t k = 16;              ///< secondary vectors
    double rho = 0.9;                ///< one-lag clutter correlation
    double cnrDb = 30.0;
    double noisePower = 1.0;         ///< sigma^2
    double dopplerNorm = 0.1;        ///< normalized Doppler of the nominal steering vector
    std::optional<double> scnrDb;    ///< absent under H0
    double cosSqPhi = 1.0;           ///< whitened-space mismatch, 1 = matched
    double targetPhase = 0.0;        ///< radians
    std::uint64_t masterSeed = 20240917;

    void validate() const {
        if (n < 2) throw ValidationError("scenario: N must be >= 2");
        if (k < n) throw ValidationError("scenario: K must be >= N");
        if (!(rho >= 0.0 && rho < 1.0)) throw ValidationError("scenario: rho must lie in [0, 1)");
        if (!std::isfinite(cnrDb)) throw ValidationError("scenario: CNR must be finite");
        if (!(noisePower > 0.0) || !std::isfinite(noisePower)) throw ValidationError("scenario: noise power must be > 0");
        if (!(dopplerNorm >= -0.5 && dopplerNorm < 0.5)) throw ValidationError("scenario: Doppler must lie in [-0.5, 0.5)");
        if (!(cosSqPhi >= 0.0 && cosSqPhi <= 1.0)) throw ValidationError("scenario: cos^2 phi must lie in [0, 1]");
        if (scnrDb && std::isnan(*scnrDb)) throw ValidationError("scenario: SCNR is NaN");
    }

    bool operator==(const ScenarioConfig&) const = default;
};

/// CUT vector z and secondary vectors z_1..z_K.
struct DataBatch {
    ComplexVector cut;
    std::vector<ComplexVector> secondary;

    std::size_t dim() const noexcept { return cut.size(); }
    std::size_t secondaryCount() const noexcept { return secondary.size(); }
};

/// M = sigma^2 I + sigma_c^2 M_c with M_c(i,j) = rho^|i-j| and sigma_c^2 = sigma^2 10^(CNR/10).
inline HermitianMatrix buildCovariance(const ScenarioConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n;
    const double clutterPower = cfg.noisePower * std::pow(10.0, cfg.cnrDb / 10.0);
    std::vector<Complex> e(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const auto lag = static_cast<double>(i > j ? i - j : j - i);
            double v = clutterPower * std::pow(cfg.rho, lag);
            if (i == j) v += cfg.noisePower;
            e[i * n + j] = v;
        }
    return HermitianMatrix(n, std::move(e));
}

/// Temporal steering vector v[n] = exp(j 2 pi n f_d).
inline ComplexVector steeringVector(std::size_t n, double dopplerNorm) {
    if (n < 2) throw ValidationError("steeringVector: N must be >= 2");
    ComplexVector v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(i) * dopplerNorm);
    return v;
}

/// Unit-variance circular complex Gaussian vector from stream (seed, trial, vectorIndex).
inline ComplexVector whiteGaussian(std::size_t n, std::uint64_t seed, std::uint64_t trial, std::uint64_t vectorIndex) {
    CounterRng rng(streamKey(seed, trial, vectorIndex));
    std::normal_distribution<double> normal(0.0, std::numbers::sqrt2 / 2.0);
    ComplexVector w(n);
    for (auto& x : w) {
        const double re = normal(rng);
        const double im = normal(rng);
        x = Complex{re, im};
    }
    return w;
}

/// K+1 i.i.d. CN(0, M) vectors; vector 0 is the CUT. Reproducible per (masterSeed, trialIndex).
inline DataBatch sampleBatch(const ScenarioConfig& cfg, const CholeskyFactor& factor, std::uint64_t trialIndex) {
    DataBatch b;
    b.cut = factor.color(whiteGaussian(cfg.n, cfg.masterSeed, trialIndex, 0));
    b.secondary.reserve(cfg.k);
    for (std::size_t k = 0; k < cfg.k; ++k)
        b.secondary.push_back(factor.color(whiteGaussian(cfg.n, cfg.masterSeed, trialIndex, k + 1)));
    return b;
}

inline DataBatch sampleBatch(const ScenarioConfig& cfg, const HermitianMatrix& m, std::uint64_t trialIndex) {
    return sampleBatch(cfg, CholeskyFactor(m), trialIndex);
}

/// Amplitude alpha with |alpha|^2 vTrue^H M^{-1} vTrue = 10^(SCNR/10) and arg(alpha) = phase.
inline Complex targetAmplitude(std::span<const Complex> vTrue, const CholeskyFactor& factor, double scnrDb,
                               double phase) {
    if (std::isinf(scnrDb) && scnrDb < 0.0) return Complex{0.0, 0.0};
    const double magnitude = std::sqrt(std::pow(10.0, scnrDb / 10.0) / factor.quadForm(vTrue));
    return std::polar(magnitude, phase);
}

/// SCNR in dB of amplitude alpha along vTrue.
inline double scnrOf(Complex alpha, std::span<const Complex> vTrue, const CholeskyFactor& factor) {
    return 10.0 * std::log10(std::norm(alpha) * factor.quadForm(vTrue));
}

/// Adds alpha vTrue to the CUT; secondary data are left target-free.
inline DataBatch injectTarget(DataBatch batch, std::span<const Complex> vTrue, const CholeskyFactor& factor,
                              double scnrDb, double phase) {
    const Complex alpha = targetAmplitude(vTrue, factor, scnrDb, phase);
    for (std::size_t i = 0; i < batch.cut.size(); ++i) batch.cut[i] += alpha * vTrue[i];
    return batch;
}

inline DataBatch injectTarget(DataBatch batch, std::span<const Complex> vTrue, const HermitianMatrix& m,
                              double scnrDb, double phase) {
    return injectTarget(std::move(batch), vTrue, CholeskyFactor(m), scnrDb, phase);
}

/// Whitened-space cosine-squared between v and vt under M.
inline double mismatchCosSq(std::span<const Complex> v, std::span<const Complex> vt, const CholeskyFactor& factor) {
    return std::norm(factor.quadForm(v, vt)) / (factor.quadForm(v) * factor.quadForm(vt));
}

/**
 * True steering vector at a prescribed whitened-space cos^2 phi from v.
 *
 * The orthogonal direction is the whitened copy of v shifted by half a Doppler
 * bin (v[n] exp(j pi n / N)), Gram-Schmidt projected against the whitened v.
 * If that projection collapses, whitened elementary vectors are tried in order.
 */
inline ComplexVector mismatchedSteering(std::span<const Complex> v, const CholeskyFactor& factor, double cosSqPhi) {
    if (!(cosSqPhi >= 0.0 && cosSqPhi <= 1.0)) throw ValidationError("mismatchedSteering: cos^2 phi outside [0, 1]");
    const std::size_t n = v.size();
    ComplexVector u = factor.whiten(v);
    const double un = std::sqrt(squaredNorm(u));
    for (auto& x : u) x /= un;

    auto orthogonalize = [&](ComplexVector w) -> std::optional<ComplexVector> {
        const double before = std::sqrt(squaredNorm(w));
        const Complex proj = dot(u, w);
        for (std::size_t i = 0; i < n; ++i) w[i] -= proj * u[i];
        const double after = std::sqrt(squaredNorm(w));
        if (!(after > 1e-8 * before)) return std::nullopt;
        for (auto& x : w) x /= after;
        return w;
    };

    ComplexVector shifted(v.begin(), v.end());
    for (std::size_t i = 0; i < n; ++i)
        shifted[i] *= std::polar(1.0, std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    std::optional<ComplexVector> perp = orthogonalize(factor.whiten(shifted));
    for (std::size_t k = 0; !perp && k < n; ++k) perp = orthogonalize(factor.whiten(unitVector(n, k)));
    if (!perp) throw DegenerateDirection("mismatchedSteering: no direction orthogonal to the whitened steering vector");

    const double c = std::sqrt(cosSqPhi);
    const double s = std::sqrt(1.0 - cosSqPhi);
    ComplexVector mixed(n);
    for (std::size_t i = 0; i < n; ++i) mixed[i] = c * u[i] + s * (*perp)[i];
    return factor.color(mixed);
}

inline ComplexVector mismatchedSteering(std::span<const Complex> v, const HermitianMatrix& m, double cosSqPhi) {
    return mismatchedSteering(v, CholeskyFactor(m), cosSqPhi);
}

} // namespace embml
