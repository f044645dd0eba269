/**
 * @file em.hpp
 * @brief EM iteration over the two-class latent mixture and the EM-BML-D statistic.
 *
 * The CUT either follows f0 (interference only) or f1 (alpha v plus
 * interference); both classes share one covariance M. Each iteration
 *
 *   E-step: q1/q0 = (p1/p0) exp(g(alpha, M)),
 *           g = z^H M^-1 z - (z - alpha v)^H M^-1 (z - alpha v);
 *   M-step: p_t = q_t,
 *           A = q0 Z Z^H + q1 S = S + q0 z z^H,
 *           alpha = v^H A^-1 z / v^H A^-1 v,
 *           M = (q0 Z Z^H + q1 ((z - alpha v)(z - alpha v)^H + S)) / (K+1).
 *
 * The determinant factors of f0 and f1 cancel in the posterior ratio, so the
 * E-step is a single log-domain scalar pushed through the logistic function.
 * The detector statistic is log(q1/q0) after lMax iterations.
 */
#pragma once

#include "embml/detectors.hpp"
#include "embml/linalg.hpp"
#include "embml/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace embml {

/// Posterior clamp; exactly-zero class responsibilities are excluded.
inline constexpr double kPosteriorFloor = 1e-12;

struct EmState {
    double logPriorRatio = 0.0;  ///< log(p1/p0)
    Complex alphaHat{0.0, 0.0};
    HermitianMatrix mHat;
    double logPostRatio = 0.0;   ///< log(q1/q0) computed from this state's estimates
    int iteration = 0;
};

struct Posteriors {
    double q0 = 0.5;
    double q1 = 0.5;
};

struct EmTrace {
    std::vector<EmState> states;        ///< states[l] holds the estimates after l M-steps
    std::vector<double> deltaL;         ///< deltaL[l-1] is the relative objective change at iteration l
    std::vector<double> mixtureLogLik;  ///< log f(Z; delta^(l)) per state
};

/// g(alpha, M) = ||L^-1 z||^2 - ||L^-1 (z - alpha v)||^2 where M = L L^H.
inline double logLikelihoodGain(std::span<const Complex> z, std::span<const Complex> v, const CholeskyFactor& mFactor,
                                Complex alpha) {
    const ComplexVector wz = mFactor.whiten(z);
    const ComplexVector wv = mFactor.whiten(v);
    double resid = 0.0;
    for (std::size_t i = 0; i < wz.size(); ++i) resid += std::norm(wz[i] - alpha * wv[i]);
    return squaredNorm(wz) - resid;
}

/// Equal priors, M = S, alpha = v^H S^-1 z / v^H S^-1 v. The resulting log
/// posterior ratio equals the AMF statistic.
inline EmState initialize(const DataBatch& batch, std::span<const Complex> v, const SampleCovariance& s) {
    const CholeskyFactor sFactor(s.s);
    const ComplexVector wz = sFactor.whiten(batch.cut);
    const ComplexVector wv = sFactor.whiten(v);
    EmState st;
    st.alphaHat = dot(wv, wz) / squaredNorm(wv);
    st.mHat = s.s;
    st.logPriorRatio = 0.0;
    st.logPostRatio = logLikelihoodGain(batch.cut, v, sFactor, st.alphaHat);
    st.iteration = 0;
    return st;
}

/// Logistic of the log posterior ratio, clamped to [1e-12, 1 - 1e-12]. The smaller
/// posterior is computed directly and the larger as its complement, so q0 + q1 == 1.
inline Posteriors eStep(const EmState& state) {
    const double r = state.logPostRatio;
    const double small = std::clamp(1.0 / (1.0 + std::exp(std::abs(r))), kPosteriorFloor, 0.5);
    const double large = 1.0 - small;
    return r >= 0.0 ? Posteriors{small, large} : Posteriors{large, small};
}

/// Closed-form maximizer of the expected complete-data log-likelihood. The amplitude
/// is updated first, then M is concentrated on it.
inline EmState mStep(const DataBatch& batch, std::span<const Complex> v, const SampleCovariance& s,
                     const Posteriors& q) {
    const auto& z = batch.cut;
    const HermitianMatrix a = rankOneUpdate(s.s, q.q0, z);
    const CholeskyFactor aFactor(a);
    const ComplexVector wz = aFactor.whiten(z);
    const ComplexVector wv = aFactor.whiten(v);

    EmState st;
    st.alphaHat = dot(wv, wz) / squaredNorm(wv);
    ComplexVector r(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) r[i] = z[i] - st.alphaHat * v[i];
    HermitianMatrix m = rankOneUpdate(a, q.q1, r);
    st.mHat = (1.0 / static_cast<double>(s.k + 1)) * std::move(m);
    st.logPriorRatio = std::log(q.q1) - std::log(q.q0);
    st.logPostRatio = st.logPriorRatio + logLikelihoodGain(z, v, CholeskyFactor(st.mHat), st.alphaHat);
    return st;
}

namespace detail {

/// Quadratic pieces shared by the surrogate objective and the mixture likelihood.
struct LikelihoodTerms {
    double logDetM;
    double zMz;        ///< z^H M^-1 z
    double rMr;        ///< (z - alpha v)^H M^-1 (z - alpha v)
    double traceMinvS; ///< Tr(M^-1 S)
};

inline LikelihoodTerms likelihoodTerms(const DataBatch& batch, std::span<const Complex> v, Complex alpha,
                                       const HermitianMatrix& m) {
    const CholeskyFactor f(m);
    ComplexVector r(batch.cut.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = batch.cut[i] - alpha * v[i];
    double tr = 0.0;
    for (const auto& zk : batch.secondary) tr += f.quadForm(zk);
    return {f.logDet(), f.quadForm(batch.cut), f.quadForm(r), tr};
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

} // namespace detail

/**
 * M-step surrogate -(K+1) log det M - Tr[M^-1 (q0 Z Z^H + q1((z - alpha v)(z - alpha v)^H + S))]
 * evaluated at (alpha, M) under weights q.
 */
inline double surrogateObjective(const DataBatch& batch, std::span<const Complex> v, const Posteriors& q,
                                 Complex alpha, const HermitianMatrix& m) {
    const auto t = detail::likelihoodTerms(batch, v, alpha, m);
    const double kp1 = static_cast<double>(batch.secondaryCount() + 1);
    return -kp1 * t.logDetM - (q.q0 * t.zMz + q.q1 * t.rMr + t.traceMinvS);
}

/// log(p0 f0(Z; M) + p1 f1(Z; alpha, M)) with explicit determinants, in log domain.
inline double mixtureLogLikelihood(const DataBatch& batch, std::span<const Complex> v, const EmState& state) {
    const auto t = detail::likelihoodTerms(batch, v, state.alphaHat, state.mHat);
    const double n = static_cast<double>(batch.dim());
    const double kp1 = static_cast<double>(batch.secondaryCount() + 1);
    const double common = -kp1 * (n * std::log(std::numbers::pi) + t.logDetM) - t.traceMinvS;
    const double logP1 = -detail::softplus(-state.logPriorRatio);
    const double logP0 = -detail::softplus(state.logPriorRatio);
    const double a0 = logP0 + common - t.zMz;
    const double a1 = logP1 + common - t.rMr;
    const double hi = std::max(a0, a1);
    return hi + std::log(std::exp(a0 - hi) + std::exp(a1 - hi));
}

/**
 * Runs lMax EM iterations from the standard initialization.
 *
 * With recordLikelihood the trace also carries the relative change of the
 * surrogate objective (both iterates scored with the weights that produced the
 * newer one) and the mixture log-likelihood of every state.
 */
inline EmTrace runEm(const DataBatch& batch, std::span<const Complex> v, const SampleCovariance& s, int lMax,
                     bool recordLikelihood = true) {
    if (lMax < 0) throw ValidationError("runEm: lMax must be >= 0");
    EmTrace trace;
    trace.states.reserve(static_cast<std::size_t>(lMax) + 1);
    trace.states.push_back(initialize(batch, v, s));
    if (recordLikelihood) trace.mixtureLogLik.push_back(mixtureLogLikelihood(batch, v, trace.states.back()));
    for (int l = 1; l <= lMax; ++l) {
        const EmState& prev = trace.states.back();
        const Posteriors q = eStep(prev);
        EmState next = mStep(batch, v, s, q);
        next.iteration = l;
        if (recordLikelihood) {
            const double lNew = surrogateObjective(batch, v, q, next.alphaHat, next.mHat);
            const double lOld = surrogateObjective(batch, v, q, prev.alphaHat, prev.mHat);
            trace.deltaL.push_back(std::abs((lNew - lOld) / lNew));
            trace.mixtureLogLik.push_back(mixtureLogLikelihood(batch, v, next));
        }
        trace.states.push_back(std::move(next));
    }
    return trace;
}

inline EmTrace runEm(const DataBatch& batch, std::span<const Complex> v, int lMax) {
    return runEm(batch, v, sampleCovariance(batch), lMax);
}

/// log(p1/p0) + g(alpha, M) of the final state, i.e. log(q1/q0) after lMax iterations.
inline DetectorStatistic emBmlStatistic(const EmTrace& trace) {
    if (trace.states.empty()) throw ValidationError("emBmlStatistic: empty trace");
    return {trace.states.back().logPostRatio, DetectorId::EM_BML_D};
}

} // namespace embml
