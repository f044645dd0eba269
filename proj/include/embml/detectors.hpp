/**
 * @file detectors.hpp
 * @brief Classical adaptive detectors (Kelly GLRT, AMF, Rao, ACE) and the
 *        clairvoyant benchmark. Every statistic is oriented so that
 *        "statistic > threshold" decides H1.
 */
#pragma once

#include "embml/errors.hpp"
#include "embml/linalg.hpp"
#include "embml/scenario.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace embml {

enum class DetectorId { GLRT, AMF, RAO, ACE, BENCHMARK, EM_BML_D };

inline constexpr std::array<DetectorId, 6> kAllDetectorIds = {DetectorId::GLRT, DetectorId::AMF, DetectorId::RAO,
                                                              DetectorId::ACE, DetectorId::BENCHMARK,
                                                              DetectorId::EM_BML_D};

inline std::string_view detectorName(DetectorId id) {
    switch (id) {
        case DetectorId::GLRT: return "GLRT";
        case DetectorId::AMF: return "AMF";
        case DetectorId::RAO: return "RAO";
        case DetectorId::ACE: return "ACE";
        case DetectorId::BENCHMARK: return "BENCHMARK";
        case DetectorId::EM_BML_D: return "EM_BML_D";
    }
    return "?";
}

/// Accepts the canonical names plus the hyphenated spelling "EM-BML-D".
inline std::optional<DetectorId> parseDetectorId(std::string_view name) {
    for (DetectorId id : kAllDetectorIds)
        if (detectorName(id) == name) return id;
    if (name == "EM-BML-D") return DetectorId::EM_BML_D;
    return std::nullopt;
}

struct DetectorStatistic {
    double value = 0.0;
    DetectorId detectorId = DetectorId::GLRT;
};

/// Unnormalized S = sum_k z_k z_k^H, exactly as the likelihoods consume it.
struct SampleCovariance {
    HermitianMatrix s;
    std::size_t k = 0;
};

inline SampleCovariance sampleCovariance(const DataBatch& batch) {
    const std::size_t n = batch.dim();
    if (batch.secondaryCount() < n)
        throw InsufficientSecondaryData("sampleCovariance: K = " + std::to_string(batch.secondaryCount()) +
                                        " < N = " + std::to_string(n));
    HermitianMatrix s(n);
    for (const auto& zk : batch.secondary) s = rankOneUpdate(std::move(s), 1.0, zk);
    return {std::move(s), batch.secondaryCount()};
}

/**
 * The three S-metric inner products every adaptive statistic is built from:
 * a = v^H S^{-1} z, b = v^H S^{-1} v, c = z^H S^{-1} z.
 * Computed from one factorization of S per trial.
 */
struct AdaptiveProjections {
    Complex vz;
    double vv = 0.0;
    double zz = 0.0;

    AdaptiveProjections(std::span<const Complex> z, std::span<const Complex> v, const CholeskyFactor& sFactor) {
        const ComplexVector wz = sFactor.whiten(z);
        const ComplexVector wv = sFactor.whiten(v);
        vz = dot(wv, wz);
        vv = squaredNorm(wv);
        zz = squaredNorm(wz);
    }
};

// Robey, Fuhrmann, Kelly, Nitzberg (1992): |v^H S^-1 z|^2 / (v^H S^-1 v).
inline double amfValue(const AdaptiveProjections& p) { return std::norm(p.vz) / p.vv; }

// Kelly (1986): |v^H S^-1 z|^2 / ((v^H S^-1 v)(1 + z^H S^-1 z)).
inline double glrtValue(const AdaptiveProjections& p) { return std::norm(p.vz) / (p.vv * (1.0 + p.zz)); }

// Kraut, Scharf, McWhorter (ACE): |v^H S^-1 z|^2 / ((v^H S^-1 v)(z^H S^-1 z)). Zero CUT maps to 0.
inline double aceValue(const AdaptiveProjections& p) {
    return p.zz > 0.0 ? std::norm(p.vz) / (p.vv * p.zz) : 0.0;
}

// De Maio (Rao test): |v^H (S+zz^H)^-1 z|^2 / (v^H (S+zz^H)^-1 v), expanded with Sherman-Morrison:
//   v^H (S+zz^H)^-1 z = a / (1+c),   v^H (S+zz^H)^-1 v = b - |a|^2 / (1+c).
inline double raoValue(const AdaptiveProjections& p) {
    const double onePlusC = 1.0 + p.zz;
    const double num = std::norm(p.vz) / (onePlusC * onePlusC);
    const double den = p.vv - std::norm(p.vz) / onePlusC;
    return den > 0.0 ? num / den : 0.0;
}

inline DetectorStatistic amfStatistic(const DataBatch& batch, std::span<const Complex> v, const SampleCovariance& s) {
    return {amfValue(AdaptiveProjections(batch.cut, v, CholeskyFactor(s.s))), DetectorId::AMF};
}

inline DetectorStatistic glrtStatistic(const DataBatch& batch, std::span<const Complex> v, const SampleCovariance& s) {
    return {glrtValue(AdaptiveProjections(batch.cut, v, CholeskyFactor(s.s))), DetectorId::GLRT};
}

inline DetectorStatistic aceStatistic(const DataBatch& batch, std::span<const Complex> v, const SampleCovariance& s) {
    return {aceValue(AdaptiveProjections(batch.cut, v, CholeskyFactor(s.s))), DetectorId::ACE};
}

inline DetectorStatistic raoStatistic(const DataBatch& batch, std::span<const Complex> v, const SampleCovariance& s) {
    return {raoValue(AdaptiveProjections(batch.cut, v, CholeskyFactor(s.s))), DetectorId::RAO};
}

/// Clairvoyant log-likelihood ratio with known M and alpha, equal priors:
/// g = 2 Re(alpha^* v^H M^{-1} z) - |alpha|^2 v^H M^{-1} v.
inline double benchmarkValue(Complex vMz, double vMv, Complex alpha) {
    return 2.0 * (std::conj(alpha) * vMz).real() - std::norm(alpha) * vMv;
}

inline DetectorStatistic benchmarkStatistic(const DataBatch& batch, std::span<const Complex> v,
                                            const CholeskyFactor& trueFactor, Complex trueAlpha) {
    const ComplexVector wz = trueFactor.whiten(batch.cut);
    const ComplexVector wv = trueFactor.whiten(v);
    return {benchmarkValue(dot(wv, wz), squaredNorm(wv), trueAlpha), DetectorId::BENCHMARK};
}

inline DetectorStatistic benchmarkStatistic(const DataBatch& batch, std::span<const Complex> v,
                                            const HermitianMatrix& trueM, Complex trueAlpha) {
    return benchmarkStatistic(batch, v, CholeskyFactor(trueM), trueAlpha);
}

} // namespace embml
